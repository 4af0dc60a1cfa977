"""Command-line interface.

Exit codes: 0 on success, 1 for validation/configuration problems, 2 for
runtime failures (backend crashes, endpoint errors).  Defaults may be set
in an INI config file (section ``[defaults]`` plus optional ``[checkers]``
and ``[llm]``); explicit flags always win.
"""

from __future__ import annotations

import configparser
import json
import sys
from pathlib import Path

import click

from . import __version__
from .backends import (
    AdapterBackend,
    EvaluationBackend,
    ForestBackend,
    HeuristicBackend,
    LlmBackend,
    PretrainedForestBackend,
)
from .classifier import ForestModel, Hyperparameters, train
from .corpus import (
    DistributionTable,
    FoldPlan,
    label_distribution,
    load_corpus,
    make_folds,
    required_sample_size,
    save_corpus,
    stratified_sample,
)
from .criteria import (
    CRITERION_IDS,
    Attribute,
    CheckerConfig,
    catalog_to_json,
    config_from_dict,
    evaluate_input,
)
from .errors import BackendError, TransportError, ValidationError
from .evaluation.crossval import EvalReport, evaluate_backends
from .evaluation.report import (
    render_distribution_csv,
    render_distribution_figure,
    render_distribution_markdown,
    render_report_markdown,
    write_report_bundle,
)
from .llm_eval import EndpointConfig, evaluate_remote
from .preprocess import normalize_instance

KNOWN_BACKENDS = ("heuristic", "forest", "llm", "adapter")


class Settings:
    """Config-file defaults, consulted when a flag was not given."""

    def __init__(self) -> None:
        self.defaults: dict[str, str] = {}
        self.checkers: dict[str, str] = {}
        self.llm: dict[str, str] = {}

    @classmethod
    def from_file(cls, path: str | None) -> "Settings":
        settings = cls()
        if path is None:
            return settings
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ValidationError(f"cannot read config file: {path}")
        for section, target in (
            ("defaults", settings.defaults),
            ("checkers", settings.checkers),
            ("llm", settings.llm),
        ):
            if parser.has_section(section):
                target.update(parser.items(section))
        return settings

    def pick(self, flag, key: str, fallback):
        if flag is not None:
            return flag
        if key in self.defaults:
            raw = self.defaults[key]
            if isinstance(fallback, bool):
                return raw.strip().lower() in ("1", "true", "yes", "on")
            if isinstance(fallback, int):
                return int(raw)
            if isinstance(fallback, float):
                return float(raw)
            return raw
        return fallback

    def checker_config(self) -> CheckerConfig:
        if not self.checkers:
            return CheckerConfig()
        typed: dict[str, object] = {}
        reference = CheckerConfig()
        for key, raw in self.checkers.items():
            if not hasattr(reference, key):
                raise ValidationError(f"unknown checker option in config: {key}")
            current = getattr(reference, key)
            if isinstance(current, bool):
                typed[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                typed[key] = int(raw)
            elif isinstance(current, float):
                typed[key] = float(raw)
            else:
                typed[key] = raw
        return config_from_dict(typed)


pass_settings = click.make_pass_decorator(Settings)


@click.group(help=__doc__)
@click.version_option(version=__version__, prog_name="crclarity")
@click.option(
    "--config", "config_path", type=click.Path(exists=False), default=None,
    help="INI file with default option values.",
)
@click.pass_context
def cli(ctx: click.Context, config_path: str | None) -> None:
    ctx.obj = Settings.from_file(config_path)


@cli.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Rewrite the validated corpus to this JSONL file.")
def ingest(corpus_path: str, out_path: str | None) -> None:
    """Validate a JSONL corpus and print a summary."""
    corpus = load_corpus(corpus_path)
    labeled = sum(1 for inst in corpus if inst.labels is not None)
    click.echo(f"instances: {len(corpus)}")
    click.echo(f"labeled: {labeled}")
    for language in corpus.languages():
        count = sum(1 for inst in corpus if inst.language is language)
        click.echo(f"  {language.value}: {count}")
    if out_path:
        save_corpus(corpus, out_path)
        click.echo(f"wrote {out_path}")


@cli.command("sample-size")
@click.argument("population", type=int)
@click.option("--confidence", type=float, default=None, show_default="0.95")
@click.option("--margin", type=float, default=None, show_default="0.05")
@pass_settings
def sample_size(settings: Settings, population: int, confidence, margin) -> None:
    """Required sample size for a population at a confidence and margin."""
    confidence = settings.pick(confidence, "confidence", 0.95)
    margin = settings.pick(margin, "margin", 0.05)
    click.echo(required_sample_size(population, confidence, margin))


@cli.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--confidence", type=float, default=None, show_default="0.95")
@click.option("--margin", type=float, default=None, show_default="0.05")
@click.option("--seed", type=int, default=None, show_default="0")
@pass_settings
def sample(settings: Settings, corpus_path: str, out_path: str,
           confidence, margin, seed) -> None:
    """Stratified sample of a corpus, one stratum per language."""
    confidence = settings.pick(confidence, "confidence", 0.95)
    margin = settings.pick(margin, "margin", 0.05)
    seed = settings.pick(seed, "seed", 0)
    corpus = load_corpus(corpus_path)
    sampled = stratified_sample(corpus, confidence=confidence, margin=margin, seed=seed)
    save_corpus(sampled, out_path)
    click.echo(f"sampled {len(sampled)} of {len(corpus)} instances to {out_path}")


@cli.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--k", type=int, default=None, show_default="5")
@click.option("--seed", type=int, default=None, show_default="0")
@click.option("--stratify", "stratify_raw", type=str, default=None,
              help="Stratify folds by this attribute's labels.")
@pass_settings
def split(settings: Settings, corpus_path: str, out_path: str, k, seed, stratify_raw) -> None:
    """Write a k-fold assignment of instance ids."""
    k = settings.pick(k, "k", 5)
    seed = settings.pick(seed, "seed", 0)
    corpus = load_corpus(corpus_path)
    stratify = Attribute.parse(stratify_raw) if stratify_raw else None
    plan = make_folds(corpus, k=k, seed=seed, stratify_attribute=stratify)
    plan.save(out_path)
    click.echo(f"fold plan hash: {plan.plan_hash()}")
    click.echo(f"wrote {out_path}")


@cli.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--out-dir", type=click.Path(), default=None,
              help="Also write distribution.md/.csv and a figure here.")
@click.option("--per-language/--no-per-language", default=True, show_default=True,
              help="Include one row per language before the overall row.")
def stats(corpus_path: str, out_dir: str | None, per_language: bool) -> None:
    """Label distribution (negative rates, all-positive share)."""
    corpus = load_corpus(corpus_path)
    table = label_distribution(corpus)
    if not per_language:
        table = DistributionTable(rows=(), overall=table.overall)
    click.echo(render_distribution_markdown(table))
    if out_dir:
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "distribution.md").write_text(
            render_distribution_markdown(table) + "\n", encoding="utf-8"
        )
        (directory / "distribution.csv").write_text(
            render_distribution_csv(table), encoding="utf-8"
        )
        render_distribution_figure(table, directory / "distribution.png")
        click.echo(f"wrote distribution.md, distribution.csv, distribution.png to {out_dir}")


def _attribute_option(raw: str) -> Attribute:
    return Attribute.parse(raw)


@cli.command("train")
@click.argument("corpus_path", type=click.Path())
@click.option("--attribute", "attribute_raw", required=True,
              help="Relevance, Informativeness, or Expression.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--seed", type=int, default=None, show_default="0")
@click.option("--trees", type=int, default=None, show_default="100")
@click.option("--max-depth", type=int, default=None)
@click.option("--min-leaf", type=int, default=None, show_default="2")
@click.option("--min-frequency", type=int, default=None, show_default="2")
@click.option("--no-checker-features", is_flag=True, default=False,
              help="Drop the eleven checker outputs from the feature set.")
@pass_settings
def train_command(settings: Settings, corpus_path: str, attribute_raw: str,
                  out_path: str, seed, trees, max_depth, min_leaf,
                  min_frequency, no_checker_features: bool) -> None:
    """Train the random-forest classifier for one attribute."""
    seed = settings.pick(seed, "seed", 0)
    attribute = _attribute_option(attribute_raw)
    hp = Hyperparameters(
        n_trees=settings.pick(trees, "trees", 100),
        max_depth=max_depth,
        min_leaf=settings.pick(min_leaf, "min_leaf", 2),
        min_frequency=settings.pick(min_frequency, "min_frequency", 2),
        use_checker_features=not no_checker_features,
    )
    corpus = load_corpus(corpus_path)
    model = train(corpus, attribute, hyperparameters=hp, seed=seed,
                  checker_config=settings.checker_config())
    model.save(out_path)
    click.echo(
        f"trained {hp.n_trees} trees on {len(corpus)} instances "
        f"({len(model.vocabulary)} features); wrote {out_path}"
    )


@cli.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--model", "model_path", type=click.Path(), default=None,
              help="Model file from `crclarity train`; omit for the heuristic checkers.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write verdicts as JSONL instead of printing.")
@click.option("--explain", is_flag=True, default=False,
              help="With the heuristic evaluator, list failing criteria.")
@pass_settings
def predict(settings: Settings, corpus_path: str, model_path: str | None,
            out_path: str | None, explain: bool) -> None:
    """Judge instances with a trained model or the heuristic checkers."""
    corpus = load_corpus(corpus_path)
    records = []
    if model_path:
        model = ForestModel.load(model_path)
        for inst in corpus:
            label, score = model.predict(inst.comment, inst.diff_hunk)
            records.append({
                "id": inst.id,
                "attribute": model.attribute.value,
                "label": label,
                "score": round(score, 6),
            })
    else:
        config = settings.checker_config()
        for inst in corpus:
            verdict = evaluate_input(
                normalize_instance(inst.comment, inst.diff_hunk), config
            )
            record = {
                "id": inst.id,
                "labels": {a.value.lower(): verdict.positive(a) for a in Attribute},
                "criteria": {cid: verdict.criterion_verdicts[cid] for cid in CRITERION_IDS},
            }
            if explain:
                record["failing"] = [
                    cid for cid in CRITERION_IDS if not verdict.criterion_verdicts[cid]
                ]
            records.append(record)
    lines = [json.dumps(record, sort_keys=True) for record in records]
    if out_path:
        Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        click.echo(f"wrote {len(lines)} verdicts to {out_path}")
    else:
        for line in lines:
            click.echo(line)


def _build_backends(names: list[str], settings: Settings, hp: Hyperparameters,
                    model_path: str | None, adapter_command: str | None,
                    llm_flags: dict) -> list[EvaluationBackend]:
    backends: list[EvaluationBackend] = []
    for name in names:
        if name == "heuristic":
            backends.append(HeuristicBackend(settings.checker_config()))
        elif name == "forest":
            if model_path:
                backends.append(PretrainedForestBackend(ForestModel.load(model_path)))
            else:
                backends.append(ForestBackend(hp, settings.checker_config()))
        elif name == "llm":
            merged = {
                "url": llm_flags.get("url") or settings.llm.get("url"),
                "model": llm_flags.get("model") or settings.llm.get("model"),
                "api_key": llm_flags.get("api_key") or settings.llm.get("api_key"),
            }
            extra = {}
            if settings.llm.get("retries") is not None:
                extra["retries"] = int(settings.llm["retries"])
            if llm_flags.get("concurrency"):
                extra["concurrency"] = llm_flags["concurrency"]
            backends.append(LlmBackend(EndpointConfig.from_env(**merged, **extra)))
        elif name == "adapter":
            if not adapter_command:
                raise ValidationError("--adapter-command is required for the adapter backend")
            backends.append(AdapterBackend(adapter_command.split()))
        else:
            raise ValidationError(
                f"unknown backend {name!r}; choose from {', '.join(KNOWN_BACKENDS)}"
            )
    return backends


@cli.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--backends", "backends_raw", default="heuristic",
              show_default=True, help="Comma-separated backend list.")
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--k", type=int, default=None, show_default="5")
@click.option("--seed", type=int, default=None, show_default="0")
@click.option("--no-upsample", is_flag=True, default=False)
@click.option("--stratify", "stratify_raw", type=str, default=None)
@click.option("--trees", type=int, default=None, show_default="100")
@click.option("--model", "model_path", type=click.Path(), default=None,
              help="Evaluate this trained model instead of retraining per fold.")
@click.option("--adapter-command", type=str, default=None,
              help="Worker command for the adapter backend.")
@click.option("--llm-url", type=str, default=None)
@click.option("--llm-model", type=str, default=None)
@click.option("--llm-api-key", type=str, default=None)
@click.option("--jobs", type=int, default=None, show_default="4",
              help="Concurrent LLM requests.")
@pass_settings
def evaluate(settings: Settings, corpus_path: str, backends_raw: str, out_dir: str,
             k, seed, no_upsample: bool, stratify_raw, trees, model_path,
             adapter_command, llm_url, llm_model, llm_api_key, jobs) -> None:
    """Cross-validate backends and write a report bundle (json/md/csv/figures)."""
    k = settings.pick(k, "k", 5)
    seed = settings.pick(seed, "seed", 0)
    names = [n.strip() for n in backends_raw.split(",") if n.strip()]
    if not names:
        raise ValidationError("no backends requested")
    unknown = [n for n in names if n not in KNOWN_BACKENDS]
    if unknown:
        raise ValidationError(
            f"unknown backend {unknown[0]!r}; choose from {', '.join(KNOWN_BACKENDS)}"
        )
    hp = Hyperparameters(n_trees=settings.pick(trees, "trees", 100))
    llm_flags = {
        "url": llm_url, "model": llm_model, "api_key": llm_api_key,
        "concurrency": settings.pick(jobs, "jobs", None),
    }
    backends = _build_backends(names, settings, hp, model_path, adapter_command, llm_flags)

    corpus = load_corpus(corpus_path)
    stratify = Attribute.parse(stratify_raw) if stratify_raw else None
    run_config = {
        "backends": ",".join(names),
        "corpus": str(corpus_path),
        "trees": hp.n_trees if "forest" in names else None,
        "stratify": stratify.value if stratify else None,
        "model": model_path,
        "adapter_command": adapter_command,
    }
    for backend in backends:
        if isinstance(backend, LlmBackend):
            run_config["llm_endpoint"] = f"{backend.config.url} ({backend.config.model})"
            run_config["jobs"] = backend.config.concurrency
    try:
        report = evaluate_backends(
            backends, corpus, k=k, seed=seed,
            upsample=not no_upsample,
            stratify_attribute=stratify,
            run_config={key: value for key, value in run_config.items() if value is not None},
        )
    finally:
        for backend in backends:
            backend.close()
    paths = write_report_bundle(report, out_dir)
    click.echo(f"fold plan hash: {report.fold_plan_hash}")
    click.echo(f"wrote report bundle to {out_dir}")
    click.echo(f"  {paths['json'].name}, {paths['markdown'].name}, {paths['csv'].name}, figures/")


@cli.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--transcript", "transcript_path", type=click.Path(), default=None)
@click.option("--llm-url", type=str, default=None)
@click.option("--llm-model", type=str, default=None)
@click.option("--llm-api-key", type=str, default=None)
@click.option("--max-new-tokens", type=int, default=None, show_default="32")
@click.option("--retries", type=int, default=None, show_default="2")
@click.option("--jobs", type=int, default=None, show_default="4")
@pass_settings
def llm(settings: Settings, corpus_path: str, out_path: str, transcript_path,
        llm_url, llm_model, llm_api_key, max_new_tokens, retries, jobs) -> None:
    """Judge every instance through the configured LLM endpoint."""
    config = EndpointConfig.from_env(
        url=llm_url or settings.llm.get("url"),
        model=llm_model or settings.llm.get("model"),
        api_key=llm_api_key or settings.llm.get("api_key"),
        max_new_tokens=settings.pick(max_new_tokens, "max_new_tokens", 32),
        retries=settings.pick(retries, "retries", 2),
        concurrency=settings.pick(jobs, "jobs", 4),
    )
    corpus = load_corpus(corpus_path)
    transcript = open(transcript_path, "w", encoding="utf-8") if transcript_path else None
    try:
        verdicts = evaluate_remote(config, list(corpus), transcript=transcript)
    finally:
        if transcript:
            transcript.close()
    with open(out_path, "w", encoding="utf-8") as handle:
        for verdict in verdicts:
            handle.write(json.dumps({
                "id": verdict.instance_id,
                "labels": {a.value.lower(): verdict.positive(a) for a in Attribute},
                "fallback": verdict.fallback,
                "attempts": verdict.attempts,
            }, sort_keys=True) + "\n")
    fallbacks = sum(1 for v in verdicts if v.fallback)
    click.echo(f"judged {len(verdicts)} instances ({fallbacks} fallbacks); wrote {out_path}")


@cli.command()
@click.argument("corpus_a", type=click.Path())
@click.argument("corpus_b", type=click.Path())
@click.option("--attribute", "attribute_raw", default=None,
              help="One attribute; omit for all three.")
def kappa(corpus_a: str, corpus_b: str, attribute_raw) -> None:
    """Agreement between two labeled corpora with matching instance ids."""
    from .evaluation.metrics import cohens_kappa

    left = load_corpus(corpus_a)
    right = load_corpus(corpus_b)
    if sorted(left.ids()) != sorted(right.ids()):
        raise ValidationError("corpora must contain the same instance ids")
    attributes = [Attribute.parse(attribute_raw)] if attribute_raw else list(Attribute)
    right_by_id = {inst.id: inst for inst in right}
    for attribute in attributes:
        labels_a, labels_b = [], []
        for inst in left:
            other = right_by_id[inst.id]
            if inst.labels is None or other.labels is None:
                raise ValidationError(f"instance {inst.id} lacks labels in one corpus")
            labels_a.append(inst.labels.positive(attribute))
            labels_b.append(other.labels.positive(attribute))
        click.echo(f"{attribute.value}: {cohens_kappa(labels_a, labels_b):.4f}")


@cli.command()
@click.argument("report_path", type=click.Path())
@click.option("--out-dir", type=click.Path(), default=None,
              help="Re-render md/csv/figures here; default prints markdown.")
def report(report_path: str, out_dir: str | None) -> None:
    """Re-render a saved report.json."""
    loaded = EvalReport.load(report_path)
    if out_dir is None:
        click.echo(render_report_markdown(loaded))
        return
    paths = write_report_bundle(loaded, out_dir)
    click.echo(f"wrote report bundle to {out_dir}")
    click.echo(f"  {paths['json'].name}, {paths['markdown'].name}, {paths['csv'].name}, figures/")


@cli.command()
def criteria() -> None:
    """Print the criteria catalog as JSON."""
    click.echo(catalog_to_json())


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (BackendError, TransportError) as exc:
        click.echo(f"runtime error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
