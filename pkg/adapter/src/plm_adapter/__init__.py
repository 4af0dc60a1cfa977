"""Training/prediction worker for sequence classifiers, driven over stdio
with one JSON object per line (ops: train, predict, shutdown)."""

from .protocol import (
    Hyperparameters,
    PredictRequest,
    ProtocolError,
    TrainRequest,
    WireInstance,
    parse_predict,
    parse_train,
)
from .server import StubBackbone, serve
from .stub import StubModel, featurize

__version__ = "0.1.0"

__all__ = [
    "Hyperparameters",
    "PredictRequest",
    "ProtocolError",
    "StubBackbone",
    "StubModel",
    "TrainRequest",
    "WireInstance",
    "featurize",
    "parse_predict",
    "parse_train",
    "serve",
    "__version__",
]
