"""Evaluator backends behind one fit/predict contract.

Cross-validation drives every evaluator the same way: ``fit`` sees the
training and validation splits for one attribute, then ``predict`` labels
unseen instances.  Stateless evaluators simply ignore ``fit``.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from pathlib import Path
from typing import Mapping, Sequence

from .classifier import ForestModel, Hyperparameters, train
from .corpus import Corpus, ReviewInstance
from .criteria import Attribute, CheckerConfig, evaluate_input
from .errors import BackendError, ValidationError
from .llm_eval import EndpointConfig, LlmVerdict, Transport, evaluate_remote
from .preprocess import normalize_instance


class EvaluationBackend:
    """Base contract; subclasses override ``predict`` and usually ``fit``."""

    name = "backend"

    def fit(
        self,
        training: Corpus,
        validation: Corpus,
        attribute: Attribute,
        seed: int,
    ) -> None:
        """Prepare for ``predict``; stateless backends keep the default no-op."""

    def predict(
        self, instances: Sequence[ReviewInstance], attribute: Attribute
    ) -> list[tuple[bool, float]]:
        """Return (label, score) per instance, in input order."""
        raise NotImplementedError

    def diagnostics(self) -> dict:
        """Counters worth surfacing in a report (e.g. fallbacks); may be empty."""
        return {}

    def close(self) -> None:
        """Release external resources; idempotent."""


class HeuristicBackend(EvaluationBackend):
    """Stateless rule-based evaluator built on the criterion checkers."""

    name = "heuristic"

    def __init__(self, config: CheckerConfig | None = None) -> None:
        self.config = config or CheckerConfig()

    def predict(
        self, instances: Sequence[ReviewInstance], attribute: Attribute
    ) -> list[tuple[bool, float]]:
        results = []
        for inst in instances:
            verdict = evaluate_input(
                normalize_instance(inst.comment, inst.diff_hunk), self.config
            )
            positive = verdict.positive(attribute)
            results.append((positive, 1.0 if positive else 0.0))
        return results


class ForestBackend(EvaluationBackend):
    """Random-forest evaluator retrained on every fit."""

    name = "forest"

    def __init__(
        self,
        hyperparameters: Hyperparameters | None = None,
        checker_config: CheckerConfig | None = None,
    ) -> None:
        self.hyperparameters = hyperparameters or Hyperparameters()
        self.checker_config = checker_config
        self._model: ForestModel | None = None

    def fit(
        self,
        training: Corpus,
        validation: Corpus,
        attribute: Attribute,
        seed: int,
    ) -> None:
        self._model = train(
            training,
            attribute,
            hyperparameters=self.hyperparameters,
            seed=seed,
            checker_config=self.checker_config,
        )

    def predict(
        self, instances: Sequence[ReviewInstance], attribute: Attribute
    ) -> list[tuple[bool, float]]:
        if self._model is None or self._model.attribute is not attribute:
            raise BackendError("forest backend used before fit for this attribute")
        return [self._model.predict(inst.comment, inst.diff_hunk) for inst in instances]


class PretrainedForestBackend(EvaluationBackend):
    """Serve a model file without retraining (fit is a no-op)."""

    name = "forest-file"

    def __init__(self, model: ForestModel) -> None:
        self.model = model

    def predict(
        self, instances: Sequence[ReviewInstance], attribute: Attribute
    ) -> list[tuple[bool, float]]:
        if self.model.attribute is not attribute:
            raise BackendError(
                f"model judges {self.model.attribute.value}, asked for {attribute.value}"
            )
        return [self.model.predict(inst.comment, inst.diff_hunk) for inst in instances]


class LlmBackend(EvaluationBackend):
    """Zero-shot judging through a remote endpoint; verdicts are cached per
    instance id so one call serves all three attributes."""

    name = "llm"

    def __init__(self, config: EndpointConfig, transport: Transport | None = None) -> None:
        self.config = config
        self.transport = transport
        self._cache: dict[str, LlmVerdict] = {}
        self._fallbacks = 0

    def predict(
        self, instances: Sequence[ReviewInstance], attribute: Attribute
    ) -> list[tuple[bool, float]]:
        fresh = [inst for inst in instances if inst.id not in self._cache]
        if fresh:
            for verdict in evaluate_remote(self.config, fresh, transport=self.transport):
                self._cache[verdict.instance_id] = verdict
                if verdict.fallback:
                    self._fallbacks += 1
        results = []
        for inst in instances:
            verdict = self._cache[inst.id]
            positive = verdict.positive(attribute)
            results.append((positive, 1.0 if positive else 0.0))
        return results

    def diagnostics(self) -> dict:
        return {"fallbacks": self._fallbacks, "judged": len(self._cache)}


class OracleBackend(EvaluationBackend):
    """Echo the gold labels; useful as a sanity ceiling in tests."""

    name = "oracle"

    def predict(
        self, instances: Sequence[ReviewInstance], attribute: Attribute
    ) -> list[tuple[bool, float]]:
        results = []
        for inst in instances:
            if inst.labels is None:
                raise BackendError(f"oracle needs labels; {inst.id} has none")
            positive = inst.labels.positive(attribute)
            results.append((positive, 1.0 if positive else 0.0))
        return results


class ConstantBackend(EvaluationBackend):
    """Always predict one class; a floor for metric sanity checks."""

    name = "constant"

    def __init__(self, value: bool) -> None:
        self.value = bool(value)
        self.name = f"constant-{'positive' if value else 'negative'}"

    def predict(
        self, instances: Sequence[ReviewInstance], attribute: Attribute
    ) -> list[tuple[bool, float]]:
        return [(self.value, 1.0 if self.value else 0.0) for _ in instances]


DEFAULT_ADAPTER_HYPERPARAMETERS: Mapping[str, object] = {
    "epochs": 10,
    "early_stopping_patience": 3,
    "batch_size": 16,
}


class AdapterBackend(EvaluationBackend):
    """Drive an external model worker over line-delimited JSON on stdio.

    The worker receives one request object per line (``train``, ``predict``,
    or ``shutdown``) and must answer each with exactly one response line.
    Only one request is in flight at a time.
    """

    name = "adapter"

    def __init__(
        self,
        command: Sequence[str],
        hyperparameters: Mapping[str, object] | None = None,
        model_root: str | Path | None = None,
    ) -> None:
        if not command:
            raise ValidationError("adapter command must be non-empty")
        self.command = list(command)
        self.hyperparameters = dict(
            hyperparameters if hyperparameters is not None
            else DEFAULT_ADAPTER_HYPERPARAMETERS
        )
        self._model_root = Path(model_root) if model_root else None
        self._tempdir: tempfile.TemporaryDirectory | None = None
        self._process: subprocess.Popen | None = None
        self._model_dirs: dict[tuple[str, int], str] = {}
        self._active: tuple[str, int] | None = None

    def _root(self) -> Path:
        if self._model_root is not None:
            self._model_root.mkdir(parents=True, exist_ok=True)
            return self._model_root
        if self._tempdir is None:
            self._tempdir = tempfile.TemporaryDirectory(prefix="crclarity-adapter-")
        return Path(self._tempdir.name)

    def _ensure_process(self) -> subprocess.Popen:
        if self._process is None or self._process.poll() is not None:
            try:
                self._process = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise BackendError(f"cannot start adapter worker: {exc}") from None
        return self._process

    def _request(self, payload: dict) -> dict:
        process = self._ensure_process()
        try:
            process.stdin.write(json.dumps(payload) + "\n")
            process.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendError(f"adapter worker pipe broken: {exc}") from None
        line = process.stdout.readline()
        if not line:
            raise BackendError(
                f"adapter worker exited without replying (code {process.poll()})"
            )
        try:
            response = json.loads(line)
        except json.JSONDecodeError:
            raise BackendError(f"adapter worker sent invalid JSON: {line[:200]!r}") from None
        if not isinstance(response, dict):
            raise BackendError("adapter worker reply must be a JSON object")
        if response.get("error"):
            raise BackendError(f"adapter worker error: {response['error']}")
        return response

    @staticmethod
    def _wire_instances(corpus_like, with_labels: bool, attribute: Attribute) -> list[dict]:
        wire = []
        for inst in corpus_like:
            entry: dict = {
                "id": inst.id,
                "fused_text": normalize_instance(inst.comment, inst.diff_hunk).fused_text,
            }
            if with_labels:
                if inst.labels is None:
                    raise BackendError(f"adapter training needs labels; {inst.id} has none")
                entry["label"] = inst.labels.positive(attribute)
            wire.append(entry)
        return wire

    def fit(
        self,
        training: Corpus,
        validation: Corpus,
        attribute: Attribute,
        seed: int,
    ) -> None:
        key = (attribute.value, seed)
        model_dir = self._root() / f"{attribute.value.lower()}-seed{seed}"
        model_dir.mkdir(parents=True, exist_ok=True)
        self._request(
            {
                "op": "train",
                "attribute": attribute.value,
                "instances": self._wire_instances(training, True, attribute),
                "validation": self._wire_instances(validation, True, attribute),
                "hyperparameters": self.hyperparameters,
                "seed": seed,
                "model_dir": str(model_dir),
            }
        )
        self._model_dirs[key] = str(model_dir)
        self._active = key

    def predict(
        self, instances: Sequence[ReviewInstance], attribute: Attribute
    ) -> list[tuple[bool, float]]:
        if self._active is None or self._active[0] != attribute.value:
            raise BackendError("adapter backend used before fit for this attribute")
        response = self._request(
            {
                "op": "predict",
                "attribute": attribute.value,
                "instances": self._wire_instances(instances, False, attribute),
                "model_dir": self._model_dirs[self._active],
            }
        )
        results = response.get("results")
        if not isinstance(results, list) or len(results) != len(instances):
            raise BackendError("adapter worker returned mismatched results")
        out = []
        for inst, row in zip(instances, results):
            if not isinstance(row, dict) or row.get("id") != inst.id:
                raise BackendError(
                    f"adapter worker results out of order near {inst.id!r}"
                )
            out.append((bool(row["label"]), float(row["score"])))
        return out

    def close(self) -> None:
        if self._process is not None and self._process.poll() is None:
            try:
                self._request({"op": "shutdown"})
            except BackendError:
                pass
            try:
                self._process.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self._process.kill()
        self._process = None
        if self._tempdir is not None:
            self._tempdir.cleanup()
            self._tempdir = None

    def __enter__(self) -> "AdapterBackend":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
