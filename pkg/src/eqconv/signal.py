"""Signals on finite index sets and point-mass measures.

A signal is a 1-d float array (or a batch of them along leading axes); a
measure is a 1-d array of non-negative point masses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IndexOutOfRange, SizeMismatch
from .groups import GroupAction


def as_signal(x, size: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise SizeMismatch("a signal needs at least one axis")
    if size is not None and x.shape[-1] != size:
        raise SizeMismatch(f"expected {size} entries, got {x.shape[-1]}")
    if not np.isfinite(x).all():
        raise ValueError("signal values must be finite")
    return x


def as_measure(mu, size: int | None = None) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1:
        raise SizeMismatch("a measure is a flat vector of point masses")
    if size is not None and mu.size != size:
        raise SizeMismatch(f"measure has {mu.size} masses, expected {size}")
    if not np.isfinite(mu).all() or (mu < 0).any():
        raise ValueError("point masses must be finite and non-negative")
    return mu


def counting_measure(n: int) -> np.ndarray:
    return np.ones(n)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Finite sample standing in for a compact set E of signals (one per row)."""

    signals: np.ndarray
    label: str = "E"

    def __post_init__(self):
        X = as_signal(self.signals)
        if X.ndim != 2:
            raise SizeMismatch("a sample set is a 2-d array, one signal per row")
        object.__setattr__(self, "signals", X)

    @property
    def index_set_size(self) -> int:
        return self.signals.shape[1]

    def __len__(self):
        return self.signals.shape[0]

    @classmethod
    def uniform(cls, count: int, size: int, low=0.0, high=1.0, seed=0, label="E"):
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(low, high, size=(count, size)), label=label)


def restrict(x, B: Sequence[int]) -> np.ndarray:
    """Restriction map onto the index subset B (order of B is kept)."""
    x = as_signal(x)
    B = np.asarray(B, dtype=np.intp)
    if B.size and (B.min() < 0 or B.max() >= x.shape[-1]):
        raise IndexOutOfRange(f"indices {B.tolist()} outside index set of size {x.shape[-1]}")
    return x[..., B]


def sup_norm_diff(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise SizeMismatch(f"shapes {x.shape} and {y.shape} differ")
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(x - y)))


def is_absolutely_continuous(mu, nu) -> tuple[bool, np.ndarray | None]:
    """Whether mu << nu, with the pointwise density d mu / d nu when it is.

    Points where both masses vanish get density 0.
    """
    mu, nu = as_measure(mu), as_measure(nu)
    if mu.shape != nu.shape:
        raise SizeMismatch("measures live on index sets of different size")
    if ((nu == 0) & (mu != 0)).any():
        return False, None
    density = np.divide(mu, nu, out=np.zeros_like(mu), where=nu != 0)
    return True, density


def check_invariant_measure(nu, A: GroupAction, atol: float = 0.0) -> bool:
    nu = as_measure(nu, A.size)
    return bool(np.max(np.abs(nu[A.act_table] - nu)) <= atol)


def dumps(x) -> str:
    """Signals and measures as flat JSON arrays, sample sets as arrays of arrays."""
    if isinstance(x, SampleSet):
        x = x.signals
    return json.dumps(np.asarray(x, dtype=float).tolist())


def loads(text: str) -> np.ndarray:
    return np.asarray(json.loads(text), dtype=float)
