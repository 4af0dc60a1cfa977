"""Checkpoint-free backbone: hashed bag of words with a logistic head.

Exists so the full worker contract can run anywhere.  Training is plain
minibatch gradient descent with early stopping on the validation metric;
everything is derived from the request seed, so two runs with the same
request produce identical scores.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path

import numpy as np

from .protocol import Hyperparameters, ProtocolError, TrainRequest, WireInstance

FORMAT = "plm-adapter-stub/1"
DIM = 4096
MAX_TOKENS = 512
WEIGHTS_FILE = "stub-weights.npz"
META_FILE = "meta.json"


def featurize(texts: list[str]) -> tuple[np.ndarray, int]:
    """Hash tokens into a fixed-width count vector (last column is bias).

    Returns the matrix and how many texts exceeded the token limit.
    """
    matrix = np.zeros((len(texts), DIM + 1), dtype=np.float64)
    truncated = 0
    for row, text in enumerate(texts):
        tokens = text.split()
        if len(tokens) > MAX_TOKENS:
            truncated += 1
            tokens = tokens[:MAX_TOKENS]
        for token in tokens:
            matrix[row, zlib.crc32(token.encode("utf-8")) % DIM] += 1.0
        norm = np.linalg.norm(matrix[row, :DIM])
        if norm > 0:
            matrix[row, :DIM] /= norm
        matrix[row, DIM] = 1.0
    return matrix, truncated


def _scores(weights: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-(matrix @ weights)))


def _validation_metric(labels: np.ndarray, scores: np.ndarray) -> float:
    """Balanced accuracy when both classes appear, plain accuracy otherwise."""
    predicted = scores >= 0.5
    if labels.all() or not labels.any():
        return float((predicted == labels).mean())
    tpr = float(predicted[labels].mean())
    tnr = float((~predicted[~labels]).mean())
    return (tpr + tnr) / 2.0


class StubModel:
    def __init__(self, weights: np.ndarray, attribute: str, meta: dict):
        self.weights = weights
        self.attribute = attribute
        self.meta = meta

    @classmethod
    def train(cls, request: TrainRequest) -> tuple["StubModel", dict]:
        hp: Hyperparameters = request.hyperparameters
        matrix, truncated_train = featurize([i.fused_text for i in request.instances])
        labels = np.array([i.label for i in request.instances], dtype=bool)
        targets = labels.astype(np.float64)

        if request.validation:
            val_matrix, truncated_val = featurize(
                [i.fused_text for i in request.validation]
            )
            val_labels = np.array([i.label for i in request.validation], dtype=bool)
        else:
            val_matrix, truncated_val = matrix, 0
            val_labels = labels

        rng = np.random.default_rng(request.seed)
        weights = np.zeros(DIM + 1, dtype=np.float64)
        best = (-np.inf, 1, weights.copy())
        stale = 0
        for epoch in range(1, hp.epochs + 1):
            order = rng.permutation(len(targets))
            for start in range(0, len(order), hp.batch_size):
                batch = order[start : start + hp.batch_size]
                gradient = matrix[batch].T @ (
                    _scores(weights, matrix[batch]) - targets[batch]
                ) / len(batch)
                weights -= hp.learning_rate * gradient
            metric = _validation_metric(val_labels, _scores(weights, val_matrix))
            if metric > best[0]:
                best = (metric, epoch, weights.copy())
                stale = 0
            else:
                stale += 1
                if stale > hp.early_stopping_patience:
                    break

        metric, best_epoch, weights = best
        summary = {
            "best_epoch": best_epoch,
            "validation_metric": metric,
            "truncated": truncated_train + truncated_val,
        }
        meta = {
            "format": FORMAT,
            "attribute": request.attribute,
            "seed": request.seed,
            **summary,
        }
        model = cls(weights, request.attribute, meta)
        model.save(request.model_dir)
        return model, summary

    def predict(self, instances: tuple[WireInstance, ...]) -> list[dict]:
        matrix, _ = featurize([i.fused_text for i in instances])
        scores = _scores(self.weights, matrix)
        return [
            {"id": inst.id, "label": bool(score >= 0.5), "score": float(score)}
            for inst, score in zip(instances, scores)
        ]

    def save(self, model_dir: str) -> None:
        directory = Path(model_dir)
        directory.mkdir(parents=True, exist_ok=True)
        np.savez(directory / WEIGHTS_FILE, weights=self.weights)
        (directory / META_FILE).write_text(
            json.dumps(self.meta, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, model_dir: str) -> "StubModel":
        directory = Path(model_dir)
        weights_path = directory / WEIGHTS_FILE
        meta_path = directory / META_FILE
        if not weights_path.exists() or not meta_path.exists():
            raise ProtocolError(f"model not found: {model_dir}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("format") != FORMAT:
            raise ProtocolError(f"unsupported model format in {model_dir}")
        weights = np.load(weights_path)["weights"]
        if weights.shape != (DIM + 1,):
            raise ProtocolError(f"corrupt weights in {model_dir}")
        return cls(weights, meta.get("attribute", ""), meta)
