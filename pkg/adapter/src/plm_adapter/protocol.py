"""Wire types for the worker protocol.

One JSON object per line in each direction.  Requests carry an ``op`` of
``train``, ``predict``, or ``shutdown``; every reply echoes the op and
carries an ``error`` field instead of a payload when the request could
not be served.  Instance text arrives preprocessed (the ``fused_text``
field); this side never re-tokenizes beyond whitespace splitting.
"""

from __future__ import annotations

from dataclasses import dataclass


class ProtocolError(ValueError):
    """A request that cannot be served; reported as an error response."""


@dataclass(frozen=True)
class WireInstance:
    id: str
    fused_text: str
    label: bool | None = None


@dataclass(frozen=True)
class Hyperparameters:
    epochs: int = 10
    early_stopping_patience: int = 3
    batch_size: int = 16
    learning_rate: float = 0.5

    def __post_init__(self):
        if self.epochs < 1:
            raise ProtocolError("epochs must be at least 1")
        if self.early_stopping_patience < 0:
            raise ProtocolError("early_stopping_patience must be non-negative")
        if self.batch_size < 1:
            raise ProtocolError("batch_size must be at least 1")
        if not self.learning_rate > 0:
            raise ProtocolError("learning_rate must be positive")


@dataclass(frozen=True)
class TrainRequest:
    attribute: str
    instances: tuple[WireInstance, ...]
    validation: tuple[WireInstance, ...]
    hyperparameters: Hyperparameters
    seed: int
    model_dir: str


@dataclass(frozen=True)
class PredictRequest:
    attribute: str
    instances: tuple[WireInstance, ...]
    model_dir: str


_HYPERPARAMETER_TYPES = {
    "epochs": int,
    "early_stopping_patience": int,
    "batch_size": int,
    "learning_rate": float,
}


def _require(request: dict, name: str, kind: type):
    if name not in request:
        raise ProtocolError(f"missing field {name!r}")
    value = request[name]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise ProtocolError(f"field {name!r} must be {kind.__name__}")
    if not isinstance(value, kind):
        raise ProtocolError(f"field {name!r} must be {kind.__name__}")
    return value


def parse_instances(raw, require_labels: bool, where: str) -> tuple[WireInstance, ...]:
    if not isinstance(raw, list) or not raw:
        raise ProtocolError(f"{where} must be a non-empty list")
    instances = []
    seen = set()
    for position, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ProtocolError(f"{where}[{position}] must be an object")
        try:
            ident = _require(entry, "id", str)
            text = _require(entry, "fused_text", str)
        except ProtocolError as exc:
            raise ProtocolError(f"{where}[{position}]: {exc}") from None
        if ident in seen:
            raise ProtocolError(f"{where} has duplicate id {ident!r}")
        seen.add(ident)
        label = entry.get("label")
        if require_labels:
            if not isinstance(label, bool):
                raise ProtocolError(f"{where}[{position}] ({ident!r}) lacks a boolean label")
        elif label is not None and not isinstance(label, bool):
            raise ProtocolError(f"{where}[{position}] label must be boolean when present")
        instances.append(WireInstance(id=ident, fused_text=text, label=label))
    return tuple(instances)


def parse_hyperparameters(raw) -> Hyperparameters:
    if raw is None:
        return Hyperparameters()
    if not isinstance(raw, dict):
        raise ProtocolError("field 'hyperparameters' must be an object")
    unknown = set(raw) - set(_HYPERPARAMETER_TYPES)
    if unknown:
        raise ProtocolError(f"unknown hyperparameter {sorted(unknown)[0]!r}")
    kwargs = {}
    for name, kind in _HYPERPARAMETER_TYPES.items():
        if name in raw:
            value = raw[name]
            if kind is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, kind) or isinstance(value, bool):
                raise ProtocolError(f"hyperparameter {name!r} must be {kind.__name__}")
            kwargs[name] = value
    return Hyperparameters(**kwargs)


def parse_train(request: dict) -> TrainRequest:
    if "instances" not in request:
        raise ProtocolError("missing field 'instances'")
    validation = request.get("validation") or []
    return TrainRequest(
        attribute=_require(request, "attribute", str),
        instances=parse_instances(request["instances"], True, "instances"),
        validation=parse_instances(validation, True, "validation") if validation else (),
        hyperparameters=parse_hyperparameters(request.get("hyperparameters")),
        seed=_require(request, "seed", int),
        model_dir=_require(request, "model_dir", str),
    )


def parse_predict(request: dict) -> PredictRequest:
    if "instances" not in request:
        raise ProtocolError("missing field 'instances'")
    return PredictRequest(
        attribute=_require(request, "attribute", str),
        instances=parse_instances(request["instances"], False, "instances"),
        model_dir=_require(request, "model_dir", str),
    )
