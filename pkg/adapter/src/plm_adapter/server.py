"""Stdio request loop: one JSON object in, one JSON object out.

The loop never dies on a bad request; it answers with an ``error`` field
and keeps reading.  A ``shutdown`` op ends the loop cleanly.
"""

from __future__ import annotations

import json
import sys

from .protocol import PredictRequest, ProtocolError, TrainRequest, parse_predict, parse_train
from .stub import StubModel


class StubBackbone:
    """In-process models keyed by model_dir, reloading from disk on miss."""

    name = "stub"

    def __init__(self) -> None:
        self._models: dict[str, StubModel] = {}

    def train(self, request: TrainRequest) -> dict:
        model, summary = StubModel.train(request)
        self._models[request.model_dir] = model
        return summary

    def predict(self, request: PredictRequest) -> list[dict]:
        model = self._models.get(request.model_dir)
        if model is None:
            model = StubModel.load(request.model_dir)
            self._models[request.model_dir] = model
        return model.predict(request.instances)


def serve(backbone, stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def reply(payload: dict) -> None:
        stdout.write(json.dumps(payload) + "\n")
        stdout.flush()

    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            reply({"error": f"invalid JSON: {exc.msg}"})
            continue
        if not isinstance(request, dict):
            reply({"error": "request must be a JSON object"})
            continue
        op = request.get("op")
        if op == "shutdown":
            reply({"op": "shutdown", "ok": True})
            return 0
        try:
            if op == "train":
                summary = backbone.train(parse_train(request))
                reply({"op": "train", "summary": summary})
            elif op == "predict":
                results = backbone.predict(parse_predict(request))
                reply({"op": "predict", "results": results})
            else:
                reply({"error": f"unknown op {op!r}"})
        except ProtocolError as exc:
            reply({"op": op, "error": str(exc)})
        except Exception as exc:  # crash-safe: report, keep serving
            reply({"op": op, "error": f"{type(exc).__name__}: {exc}"})
    return 0
