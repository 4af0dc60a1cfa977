"""Render evaluation reports and label statistics to markdown, CSV, PNG.

All renderers are pure functions of their inputs (no timestamps, fixed
float formatting), so re-rendering the same report reproduces the same
bytes.
"""

from __future__ import annotations

import csv
import io
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from ..corpus import DistributionTable
from ..criteria import Attribute
from .crossval import EvalReport
from .metrics import METRIC_NAMES, MetricSet

METRIC_TITLES = {
    "balanced_accuracy": "Balanced accuracy",
    "precision": "Precision",
    "recall": "Recall",
    "f1": "F1",
}


def percent(value: float | None, places: int = 2) -> str:
    """Format a fraction as a fixed-point percentage; undefined stays visible."""
    if value is None:
        return "n/a"
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(str(100.0 * value)).quantize(quantum, rounding=ROUND_HALF_UP))


def round_pct(value: float, places: int = 1) -> float:
    """Half-up rounding for values that are already percentages."""
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(str(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def _metric_cells(metrics: MetricSet) -> list[str]:
    return [percent(getattr(metrics, name)) for name in METRIC_NAMES]


def _marked_rows(labels: list[str], metric_sets: list[MetricSet]) -> list[list[str]]:
    """Rows of percent cells; each column's maximum is bold when the table
    compares more than one row."""
    rows = [[label] for label in labels]
    for name in METRIC_NAMES:
        values = [getattr(m, name) for m in metric_sets]
        defined = [v for v in values if v is not None]
        top = max(defined) if defined else None
        for row, value in zip(rows, values):
            cell = percent(value)
            if len(rows) > 1 and value is not None and value == top:
                cell = f"**{cell}**"
            row.append(cell)
    return rows


def _table(header: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines)


def render_report_markdown(report: EvalReport) -> str:
    """The human-readable report: configuration, per-attribute and averaged
    metric tables (percentages), diagnostics, and failures."""
    out: list[str] = []
    out.append("# Clarity evaluation report")
    out.append("")
    out.append(f"- folds: {report.k}")
    out.append(f"- seed: {report.seed}")
    out.append(f"- corpus size: {report.corpus_size}")
    out.append(f"- negatives upsampled in training: {'yes' if report.upsampled else 'no'}")
    out.append(f"- fold plan hash: `{report.fold_plan_hash}`")
    for key in sorted(report.run_config):
        out.append(f"- {key}: {report.run_config[key]}")
    out.append("")

    metric_header = [METRIC_TITLES[name] + " %" for name in METRIC_NAMES]
    for attribute in Attribute:
        rows = [r for r in report.results if r.attribute is attribute]
        if not rows:
            continue
        out.append(f"## {attribute.value}")
        out.append("")
        out.append(_table(
            ["Backend"] + metric_header,
            _marked_rows([r.backend for r in rows], [r.mean for r in rows]),
        ))
        out.append("")
        notes = []
        for r in rows:
            skipped = {m: n for m, n in r.undefined_counts.items() if n}
            if skipped:
                detail = ", ".join(f"{m} in {n} fold(s)" for m, n in sorted(skipped.items()))
                notes.append(f"- {r.backend}: undefined {detail}; excluded from the mean")
            if r.failed_folds:
                notes.append(f"- {r.backend}: folds {list(r.failed_folds)} failed")
            interesting = {k: v for k, v in r.diagnostics.items() if v}
            if interesting:
                detail = ", ".join(f"{k}={v}" for k, v in sorted(interesting.items()))
                notes.append(f"- {r.backend}: {detail}")
        if notes:
            out.extend(notes)
            out.append("")

    out.append("## Average over attributes (mean of fold means)")
    out.append("")
    averages = [report.macro_average(backend)[0] for backend in report.backends()]
    out.append(_table(
        ["Backend"] + metric_header,
        _marked_rows(list(report.backends()), averages),
    ))
    out.append("")

    out.append("## Pooled over folds (confusions summed before computing metrics)")
    out.append("")
    pooled_rows = [
        [r.backend, r.attribute.value] + _metric_cells(r.pooled)
        for r in report.results
    ]
    out.append(_table(["Backend", "Attribute"] + metric_header, pooled_rows))
    out.append("")
    return "\n".join(out)


def render_report_csv(report: EvalReport) -> str:
    """Per-fold, mean, and pooled rows with the same numbers as the tables."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["backend", "attribute", "fold",
         "balanced_accuracy_pct", "precision_pct", "recall_pct", "f1_pct",
         "tp", "fp", "tn", "fn", "failed", "fold_plan_hash"]
    )
    for r in report.results:
        for f in r.folds:
            cells = (
                _metric_cells(f.metrics) if f.metrics is not None
                else ["n/a"] * len(METRIC_NAMES)
            )
            counts = (
                [f.result.tp, f.result.fp, f.result.tn, f.result.fn]
                if f.result is not None else ["", "", "", ""]
            )
            writer.writerow(
                [r.backend, r.attribute.value, f.fold, *cells, *counts,
                 "yes" if f.failed else "no", report.fold_plan_hash]
            )
        writer.writerow(
            [r.backend, r.attribute.value, "mean", *_metric_cells(r.mean),
             "", "", "", "", "no", report.fold_plan_hash]
        )
        writer.writerow(
            [r.backend, r.attribute.value, "pooled", *_metric_cells(r.pooled),
             "", "", "", "", "no", report.fold_plan_hash]
        )
    for backend in report.backends():
        mean, _ = report.macro_average(backend)
        writer.writerow(
            [backend, "average", "mean", *_metric_cells(mean),
             "", "", "", "", "no", report.fold_plan_hash]
        )
    return buffer.getvalue()


def render_distribution_markdown(table: DistributionTable) -> str:
    header = ["Language", "Comments"] + [f"{a.value} negative %" for a in Attribute] + [
        "All positive %"
    ]
    rows = []
    for row in (*table.rows, table.overall):
        rows.append(
            [row.label, str(row.count)]
            + [f"{round_pct(row.negative_pct[a]):.1f}" for a in Attribute]
            + [f"{round_pct(row.all_positive_pct):.1f}"]
        )
    return _table(header, rows)


def render_distribution_csv(table: DistributionTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["language", "comments"]
        + [f"{a.value.lower()}_negative_pct" for a in Attribute]
        + ["all_positive_pct"]
    )
    for row in (*table.rows, table.overall):
        writer.writerow(
            [row.label, row.count]
            + [f"{round_pct(row.negative_pct[a]):.1f}" for a in Attribute]
            + [f"{round_pct(row.all_positive_pct):.1f}"]
        )
    return buffer.getvalue()


def _matplotlib():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


_PNG_METADATA = {"Software": "crclarity"}


def render_report_figures(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """One grouped-bar chart per attribute plus an attribute-average chart."""
    plt = _matplotlib()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    backends = report.backends()
    panels: list[tuple[str, dict[str, MetricSet]]] = []
    for attribute in Attribute:
        rows = {r.backend: r.mean for r in report.results if r.attribute is attribute}
        if rows:
            panels.append((attribute.value, rows))
    panels.append(
        ("average", {b: report.macro_average(b)[0] for b in backends})
    )

    for title, rows in panels:
        fig, ax = plt.subplots(figsize=(7, 4))
        width = 0.8 / max(1, len(rows))
        for i, (backend, metrics) in enumerate(rows.items()):
            values = [
                0.0 if getattr(metrics, name) is None else 100.0 * getattr(metrics, name)
                for name in METRIC_NAMES
            ]
            positions = [j + i * width for j in range(len(METRIC_NAMES))]
            ax.bar(positions, values, width=width, label=backend)
        ax.set_xticks([j + 0.4 - width / 2 for j in range(len(METRIC_NAMES))])
        ax.set_xticklabels([METRIC_TITLES[name] for name in METRIC_NAMES])
        ax.set_ylim(0, 100)
        ax.set_ylabel("%")
        ax.set_title(f"{title} (fold means; undefined shown as 0)")
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"metrics_{title.lower()}.png"
        fig.savefig(path, metadata=_PNG_METADATA)
        plt.close(fig)
        written.append(path)
    return written


def render_distribution_figure(table: DistributionTable, path: str | Path) -> Path:
    """Stacked view of negative rates per language."""
    plt = _matplotlib()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [*table.rows, table.overall]
    labels = [row.label for row in rows]
    fig, ax = plt.subplots(figsize=(max(7, 0.9 * len(rows)), 4))
    width = 0.8 / (len(Attribute) + 1)
    series = [(a.value, [row.negative_pct[a] for row in rows]) for a in Attribute]
    series.append(("All positive", [row.all_positive_pct for row in rows]))
    for i, (name, values) in enumerate(series):
        positions = [j + i * width for j in range(len(rows))]
        ax.bar(positions, values, width=width, label=name)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(rows))])
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("%")
    ax.set_title("Label distribution (negative rates and all-positive share)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def write_report_bundle(report: EvalReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.json/.md/.csv plus figures; returns what went where."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out_dir / "report.json",
        "markdown": out_dir / "report.md",
        "csv": out_dir / "report.csv",
    }
    report.save(paths["json"])
    paths["markdown"].write_text(render_report_markdown(report), encoding="utf-8")
    paths["csv"].write_text(render_report_csv(report), encoding="utf-8")
    for figure in render_report_figures(report, out_dir / "figures"):
        paths[figure.stem] = figure
    return paths
