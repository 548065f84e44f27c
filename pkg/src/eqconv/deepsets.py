"""DeepSets layers ``x -> lam*x + gam*sum(x)*1 + c*1`` as S_n convolutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSymmetricInvariant, SizeMismatch
from .gconv import ConvKernel
from .groups import GroupAction, natural_action, symmetric_group
from .signal import as_signal

_ACTIONS: dict[int, GroupAction] = {}


def symmetric_action(n: int) -> GroupAction:
    """The permutation action of S_n on [n], built once per n."""
    if n not in _ACTIONS:
        _ACTIONS[n] = natural_action(symmetric_group(n))
    return _ACTIONS[n]


@dataclass(frozen=True)
class DeepSetsLayer:
    lam: float
    gamma: float
    bias_scalar: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return self.lam * np.eye(self.n) + self.gamma * np.ones((self.n, self.n))

    def __call__(self, x):
        return deepsets_apply(self, x)


def deepsets_apply(layer: DeepSetsLayer, x) -> np.ndarray:
    x = as_signal(x, layer.n)
    return layer.lam * x + (layer.gamma * x.sum(axis=-1, keepdims=True) + layer.bias_scalar)


def deepsets_to_kernel(layer: DeepSetsLayer, action: GroupAction | None = None) -> ConvKernel:
    """Kernel ``v(i, j) = lam*[i == j] + gam`` with counting measure and constant bias."""
    A = symmetric_action(layer.n) if action is None else action
    if A.size != layer.n:
        raise SizeMismatch("action does not act on [n]")
    return ConvKernel(layer.matrix, np.ones(layer.n), np.full(layer.n, layer.bias_scalar), A, A)


def kernel_to_deepsets(C: ConvKernel, atol: float = 1e-12) -> DeepSetsLayer:
    """Read (lam, gam, c) off a kernel on [n] x [n].

    The effective matrix ``W = v * nu`` must have a constant diagonal and a
    constant off-diagonal, and the bias must be constant.
    """
    n = C.v.shape[0]
    if C.v.shape != (n, n) or n < 2:
        raise SizeMismatch("DeepSets kernels act on [n] x [n] with n >= 2")
    W = C.v * C.measure[None, :]
    diag = np.diag(W)
    off = W[~np.eye(n, dtype=bool)]
    scale = max(1.0, float(np.max(np.abs(W))))
    if np.ptp(diag) > atol * scale or np.ptp(off) > atol * scale:
        values = np.unique(np.round(W, 12))
        raise NotSymmetricInvariant(
            f"kernel takes {values.size} distinct values; S_n-invariance allows one on the diagonal and one off it"
        )
    if np.ptp(C.bias) > atol * max(1.0, float(np.max(np.abs(C.bias)))):
        raise NotSymmetricInvariant("bias is not constant")
    gamma = float(off[0])
    return DeepSetsLayer(float(diag[0]) - gamma, gamma, float(C.bias[0]), n)
