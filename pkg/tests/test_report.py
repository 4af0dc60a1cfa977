import re

import pytest

from crclarity.backends import ConstantBackend, HeuristicBackend, OracleBackend
from crclarity.corpus import label_distribution
from crclarity.evaluation.crossval import evaluate_backends
from crclarity.evaluation.report import (
    percent,
    render_distribution_csv,
    render_distribution_figure,
    render_distribution_markdown,
    render_report_csv,
    render_report_figures,
    render_report_markdown,
    write_report_bundle,
)
from crclarity.synthetic import separable_corpus, skewed_corpus


@pytest.fixture(scope="module")
def report():
    corpus = separable_corpus(30)
    return evaluate_backends([OracleBackend(), ConstantBackend(True)], corpus, k=5, seed=3)


class TestPercent:
    def test_half_up_two_places(self):
        assert percent(0.12345) == "12.35"
        assert percent(0.125, places=1) == "12.5"
        assert percent(0.1835, places=1) == "18.4"  # not banker's rounding

    def test_exact_values(self):
        assert percent(1.0) == "100.00"
        assert percent(0.0) == "0.00"
        assert percent(0.114, places=1) == "11.4"


class TestMarkdown:
    def test_table_contains_backends_and_hash(self, report):
        text = render_report_markdown(report)
        assert "| oracle |" in text
        assert "| constant-positive |" in text
        assert report.fold_plan_hash in text
        assert "balanced accuracy" in text.lower()

    def test_oracle_row_is_perfect(self, report):
        for line in render_report_markdown(report).splitlines():
            if line.startswith("| oracle |"):
                assert "100.00" in line

    def test_column_maxima_bolded(self, report):
        text = render_report_markdown(report)
        # oracle dominates constant-positive, so its cells carry the mark
        assert "**100.00**" in text
        lines = [l for l in text.splitlines() if l.startswith("| constant-positive |")]
        assert lines and all("**" not in l or "100.00" in l for l in lines)

    def test_single_backend_not_bolded(self):
        rep = evaluate_backends([OracleBackend()], separable_corpus(20), k=4, seed=2)
        table_lines = [
            l for l in render_report_markdown(rep).splitlines() if l.startswith("| oracle")
        ]
        assert table_lines
        assert not any("**" in l for l in table_lines)

    def test_undefined_rendered_as_dash(self):
        corpus = separable_corpus(20)
        rep = evaluate_backends([ConstantBackend(True)], corpus, k=5, seed=1)
        text = render_report_markdown(rep)
        # constant-positive yields undefined TNR-dependent cells on some folds
        assert re.search(r"\|\s+-\s+\|", text) or "100.00" in text

    def test_no_timestamp(self, report):
        text = render_report_markdown(report)
        assert not re.search(r"\b20\d{2}-\d{2}-\d{2}\b", text)


class TestCsv:
    def test_summary_numbers_match_markdown(self, report):
        md_numbers = set(re.findall(r"\d+\.\d{2}", render_report_markdown(report)))
        csv_numbers = set(re.findall(r"\d+\.\d{2}", render_report_csv(report)))
        # markdown shows mean/pooled tables; CSV adds per-fold rows on top
        assert md_numbers <= csv_numbers

    def test_mean_rows_match_markdown_cells(self, report):
        md = render_report_markdown(report).replace("**", "")
        for line in render_report_csv(report).splitlines():
            parts = line.split(",")
            if len(parts) > 3 and parts[2] == "mean" and parts[1] != "average":
                for cell in parts[3:7]:
                    if cell != "n/a":
                        assert f" {cell} " in md

    def test_header_and_rows(self, report):
        lines = render_report_csv(report).splitlines()
        assert lines[0].startswith("backend,attribute,fold")
        # per result: k fold rows + mean + pooled; then one average per backend
        assert len(lines) == 1 + 2 * 3 * (report.k + 2) + 2

    def test_round_trips_through_csv_module(self, report):
        import csv
        import io

        rows = list(csv.reader(io.StringIO(render_report_csv(report))))
        widths = {len(r) for r in rows}
        assert len(widths) == 1


class TestDistribution:
    def test_rounding_one_place(self):
        corpus = skewed_corpus(40)  # 4 of 40 negative per attribute
        table = label_distribution(corpus)
        md = render_distribution_markdown(table)
        assert "10.0" in md  # negatives
        assert "0.0" in md
        csv_text = render_distribution_csv(table)
        assert "10.0" in csv_text

    def test_markdown_and_csv_share_numbers(self):
        table = label_distribution(skewed_corpus(30))
        md_nums = set(re.findall(r"\d+\.\d", render_distribution_markdown(table)))
        csv_nums = set(re.findall(r"\d+\.\d", render_distribution_csv(table)))
        assert md_nums == csv_nums

    def test_figure_written(self, tmp_path):
        table = label_distribution(skewed_corpus(20))
        out = tmp_path / "dist.png"
        render_distribution_figure(table, out)
        assert out.stat().st_size > 0
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestFigures:
    def test_one_per_attribute_plus_average(self, report, tmp_path):
        written = render_report_figures(report, tmp_path)
        names = sorted(p.name for p in written)
        assert names == [
            "metrics_average.png",
            "metrics_expression.png",
            "metrics_informativeness.png",
            "metrics_relevance.png",
        ]
        for path in written:
            assert path.stat().st_size > 0


class TestBundle:
    def test_files_written(self, report, tmp_path):
        out = tmp_path / "bundle"
        written = write_report_bundle(report, out)
        names = {p.relative_to(out).as_posix() for p in written.values()}
        assert {"report.json", "report.md", "report.csv"} <= names
        assert any(n.startswith("figures/") for n in names)

    def test_byte_reproducible(self, tmp_path):
        corpus = separable_corpus(20)

        def build(dest):
            rep = evaluate_backends([HeuristicBackend()], corpus, k=5, seed=11)
            return {
                p.relative_to(dest).as_posix(): p.read_bytes()
                for p in write_report_bundle(rep, dest).values()
            }

        first = build(tmp_path / "a")
        second = build(tmp_path / "b")
        assert first.keys() == second.keys()
        for name in first:
            assert first[name] == second[name], f"{name} differs between runs"
