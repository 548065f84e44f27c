"""Fully-connected networks with explicit input measures on every layer.

An affine layer computes ``out(t) = sum_s w(t, s) x(s) mu(s) + b(t)``; with
the counting measure this is the usual ``W x + b``.  Networks alternate
affine layers and a pointwise activation, with no activation after the
last layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DivergenceError, SizeMismatch
from .signal import as_measure, as_signal

ACTIVATIONS = ("sigmoid", "tanh", "relu", "leaky_relu")
# first-layer init: weights N(0, INIT_WEIGHT_SCALE^2 / fan_in), biases N(0, INIT_BIAS_SCALE^2)
INIT_WEIGHT_SCALE = 1.0
INIT_BIAS_SCALE = 0.5


@dataclass(frozen=True)
class Activation:
    kind: str = "tanh"
    alpha: float = 0.01  # leaky_relu slope

    def __post_init__(self):
        if self.kind not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.kind!r}; choose from {ACTIVATIONS}")

    @property
    def lipschitz_constant(self) -> float:
        if self.kind == "sigmoid":
            return 0.25
        if self.kind == "leaky_relu":
            return max(1.0, abs(self.alpha))
        return 1.0

    @property
    def bounded(self) -> bool:
        return self.kind in ("sigmoid", "tanh")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "sigmoid":
            return 0.5 * (1.0 + np.tanh(0.5 * z))
        if self.kind == "tanh":
            return np.tanh(z)
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        return np.where(z > 0, z, self.alpha * z)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "sigmoid":
            s = self(z)
            return s * (1.0 - s)
        if self.kind == "tanh":
            return 1.0 - np.tanh(z) ** 2
        if self.kind == "relu":
            return (z > 0).astype(float)
        return np.where(z > 0, 1.0, self.alpha)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha} if self.kind == "leaky_relu" else {"kind": self.kind}

    @classmethod
    def parse(cls, spec) -> Activation:
        if isinstance(spec, Activation):
            return spec
        if isinstance(spec, str):
            return cls(spec)
        return cls(**spec)


@dataclass(frozen=True, eq=False)
class AffineLayer:
    weight: np.ndarray  # (out, in), rows are output indices
    bias: np.ndarray
    measure: np.ndarray

    def __post_init__(self):
        w = np.array(self.weight, dtype=float)
        if w.ndim != 2:
            raise SizeMismatch("weight must be a matrix")
        b = np.array(self.bias, dtype=float).reshape(-1)
        mu = as_measure(np.array(self.measure, dtype=float), w.shape[1])
        if b.size != w.shape[0]:
            raise SizeMismatch(f"bias has {b.size} entries, weight has {w.shape[0]} rows")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("layer parameters must be finite")
        for a in (w, b, mu):
            a.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "measure", mu)

    @property
    def in_size(self) -> int:
        return self.weight.shape[1]

    @property
    def out_size(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x):
        return affine_apply(self, x)

    @classmethod
    def counting(cls, weight, bias) -> AffineLayer:
        weight = np.asarray(weight, dtype=float)
        return cls(weight, bias, np.ones(weight.shape[1]))


def affine_apply(A: AffineLayer, x) -> np.ndarray:
    x = as_signal(x, A.in_size)
    return (x * A.measure) @ A.weight.T + A.bias


@dataclass(frozen=True, eq=False)
class FnnModel:
    layers: tuple[AffineLayer, ...]
    activation: Activation = field(default_factory=Activation)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise SizeMismatch("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_size != nxt.in_size:
                raise SizeMismatch(f"layer of width {prev.out_size} feeds a layer expecting {nxt.in_size}")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "activation", Activation.parse(self.activation))

    @property
    def layer_sizes(self) -> list[int]:
        return [self.layers[0].in_size] + [A.out_size for A in self.layers]

    @property
    def input_measure(self) -> np.ndarray:
        """Measure of the first layer; the one absolute continuity is checked for."""
        return self.layers[0].measure

    def __call__(self, x):
        return fnn_forward(self, x)

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "activation": self.activation.to_dict(),
            "layers": [
                {"w": A.weight.tolist(), "b": A.bias.tolist(), "mu": A.measure.tolist()}
                for A in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> FnnModel:
        layers = [AffineLayer(np.array(L["w"], dtype=float), L["b"], L["mu"]) for L in doc["layers"]]
        model = cls(tuple(layers), Activation.parse(doc["activation"]))
        if "layer_sizes" in doc and list(doc["layer_sizes"]) != model.layer_sizes:
            raise SizeMismatch("layer_sizes does not match the stored layers")
        return model

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> FnnModel:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fnn_forward(phi: FnnModel, x) -> np.ndarray:
    h = affine_apply(phi.layers[0], x)
    for A in phi.layers[1:]:
        h = affine_apply(A, phi.activation(h))
    return h


def mse_loss_and_grads(phi: FnnModel, X, Y):
    """Mean squared error over all entries, with gradients for every layer.

    Returns ``(loss, [(dW, db), ...])`` in layer order.
    """
    X, Y = np.atleast_2d(as_signal(X)), np.atleast_2d(as_signal(Y))
    rho = phi.activation
    inputs, pre = [], []
    h = X
    for i, A in enumerate(phi.layers):
        a = h * A.measure
        inputs.append(a)
        z = a @ A.weight.T + A.bias
        pre.append(z)
        h = rho(z) if i < len(phi.layers) - 1 else z
    resid = h - Y
    loss = float(np.mean(resid**2))
    dz = 2.0 * resid / resid.size
    grads = []
    for i in range(len(phi.layers) - 1, -1, -1):
        A = phi.layers[i]
        grads.append((dz.T @ inputs[i], dz.sum(axis=0)))
        if i:
            da = (dz @ A.weight) * A.measure
            dz = da * rho.derivative(pre[i - 1])
    return loss, grads[::-1]


@dataclass
class FitResult:
    model: FnnModel
    sup_error: float
    loss: float
    epochs: int


def _as_arrays(targets):
    if isinstance(targets, tuple) and len(targets) == 2 and np.ndim(targets[0]) == 2:
        X, Y = targets
    else:
        X = np.stack([np.asarray(p[0], dtype=float) for p in targets])
        Y = np.stack([np.asarray(p[1], dtype=float) for p in targets])
    return as_signal(X), as_signal(Y)


def fit_generator(targets, hidden: int, activation=Activation("tanh"), epochs: int = 2000,
                  lr: float = 0.05, seed: int = 0, measure: Sequence[float] | None = None) -> FitResult:
    """Fit a two-layer network to input/output pairs by full-batch gradient descent.

    ``targets`` is a list of ``(x, y)`` pairs or a tuple ``(X, Y)`` of
    2-d arrays.  Training runs on standardised inputs and outputs; the
    standardisation is folded back into the first and last layer, so the
    returned model acts on raw signals.  The output layer starts at zero
    weight, so a constant target is reproduced by the bias alone.
    """
    if hidden < 1:
        raise ValueError("hidden width must be at least 1")
    X, Y = _as_arrays(targets)
    if X.shape[0] != Y.shape[0]:
        raise SizeMismatch("inputs and outputs have different sample counts")
    n_in, n_out = X.shape[1], Y.shape[1]
    mu = np.ones(n_in) if measure is None else as_measure(measure, n_in)
    x_mean, x_scale = X.mean(axis=0), _scale(X)
    y_mean, y_scale = Y.mean(axis=0), _scale(Y)
    Xs, Ys = (X - x_mean) / x_scale, (Y - y_mean) / y_scale

    rng = np.random.default_rng(seed)
    rho = Activation.parse(activation)
    params = [
        rng.normal(0.0, INIT_WEIGHT_SCALE / np.sqrt(n_in), size=(hidden, n_in)),
        rng.normal(0.0, INIT_BIAS_SCALE, size=hidden),
        np.zeros((n_out, hidden)),
        np.zeros(n_out),
    ]

    def build(W1, b1, W2, b2, first_measure):
        return FnnModel((AffineLayer(W1, b1, first_measure), AffineLayer.counting(W2, b2)), rho)

    ones = np.ones(n_in)
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is reported below
        for epoch in range(epochs):
            loss, ((dW1, db1), (dW2, db2)) = mse_loss_and_grads(build(*params, ones), Xs, Ys)
            for p, d in zip(params, (dW1, db1, dW2, db2)):
                p -= lr * d
            if not (np.isfinite(loss) and all(np.isfinite(p).all() for p in params)):
                raise DivergenceError(
                    f"training diverged at epoch {epoch} (lr={lr}, hidden={hidden}); lower the learning rate"
                )

    W1, b1, W2, b2 = params
    # z = ((x - m) / s) W1^T + b1 rewritten against the measure mu
    first_w = np.divide(W1 / x_scale, mu, out=np.zeros_like(W1), where=mu > 0)
    first_b = b1 - W1 @ (x_mean / x_scale)
    model = build(first_w, first_b, W2 * y_scale[:, None], b2 * y_scale + y_mean, mu)
    pred = model(X)
    if not np.isfinite(pred).all():
        raise DivergenceError(f"fitted network produces non-finite outputs (lr={lr})")
    resid = pred - Y
    return FitResult(model, float(np.max(np.abs(resid))), float(np.mean(resid**2)), epochs)


def _scale(Z):
    s = Z.std(axis=0)
    return np.where(s > 0, s, 1.0)
