"""Deterministic, splittable random number generation.

Every randomized operation in the package draws from a generator derived
from a root integer seed plus a tuple of string labels naming the operation
(for example ``("folds",)`` or ``("forest", "Relevance", "17")``).  Two
derivations with the same seed and labels always produce the same stream,
and distinct labels give independent streams, so adding a new randomized
step never perturbs existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _digest(seed: int, labels: tuple[str, ...]) -> bytes:
    h = hashlib.sha256()
    h.update(str(int(seed)).encode("utf-8"))
    for label in labels:
        h.update(b"\x1f")
        h.update(label.encode("utf-8"))
    return h.digest()


def derive_rng(seed: int, *labels: str) -> np.random.Generator:
    """Return a Generator keyed by ``seed`` and the label path."""
    key = np.frombuffer(_digest(seed, labels)[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *labels: str) -> int:
    """Collapse a label path to a plain integer seed for code that wants one."""
    return int.from_bytes(_digest(seed, labels)[:8], "big") >> 1
