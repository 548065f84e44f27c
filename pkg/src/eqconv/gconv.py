"""Biased group convolutions and group convolutional networks.

A convolution layer is ``C[x](t) = sum_s v(t, s) x(s) nu(s) + b(t)`` with a
kernel v invariant under the diagonal action, an invariant measure nu and
a bias constant on codomain orbits.  Kernels are stored as dense (t, s)
matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NotLeftTranslation, SizeMismatch
from .fnn import Activation
from .groups import GroupAction
from .signal import as_measure, as_signal


@dataclass(frozen=True, eq=False)
class ConvKernel:
    v: np.ndarray  # (|T|, |S|)
    measure: np.ndarray  # nu on S
    bias: np.ndarray  # on T
    domain_action: GroupAction
    codomain_action: GroupAction

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        S, T = self.domain_action, self.codomain_action
        if S.group is not T.group:
            raise SizeMismatch("domain and codomain actions must share a group")
        if v.shape != (T.size, S.size):
            raise SizeMismatch(f"kernel shape {v.shape} does not match ({T.size}, {S.size})")
        nu = as_measure(np.array(self.measure, dtype=float), S.size)
        b = np.array(self.bias, dtype=float).reshape(-1)
        if b.size != T.size:
            raise SizeMismatch(f"bias has {b.size} entries, codomain has {T.size}")
        for a in (v, nu, b):
            a.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "measure", nu)
        object.__setattr__(self, "bias", b)

    @property
    def group(self):
        return self.domain_action.group

    def __call__(self, x):
        return gconv_apply(self, x)


def gconv_apply(C: ConvKernel, x) -> np.ndarray:
    x = as_signal(x, C.domain_action.size)
    return (x * C.measure) @ C.v.T + C.bias


def check_kernel_invariance(C: ConvKernel) -> float:
    """Largest violation of kernel, bias and measure invariance over all g."""
    S, T = C.domain_action.act_table, C.codomain_action.act_table
    worst = 0.0
    for g in range(C.group.order):
        worst = max(
            worst,
            float(np.max(np.abs(C.v[np.ix_(T[g], S[g])] - C.v))),
            float(np.max(np.abs(C.bias[T[g]] - C.bias))),
            float(np.max(np.abs(C.measure[S[g]] - C.measure))),
        )
    return worst


@dataclass(frozen=True, eq=False)
class GcnnModel:
    layers: tuple[ConvKernel, ...]
    activation: Activation = Activation()

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise SizeMismatch("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if not prev.codomain_action.same_as(nxt.domain_action):
                raise SizeMismatch("consecutive layers do not share an index set")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "activation", Activation.parse(self.activation))

    @property
    def domain_action(self) -> GroupAction:
        return self.layers[0].domain_action

    @property
    def codomain_action(self) -> GroupAction:
        return self.layers[-1].codomain_action

    @property
    def layer_sizes(self) -> list[int]:
        return [self.layers[0].domain_action.size] + [C.codomain_action.size for C in self.layers]

    def __call__(self, x):
        return gcnn_forward(self, x)

    def to_dict(self) -> dict:
        """JSON layout of FnnModel plus the act tables of every index set."""
        actions = [self.domain_action] + [C.codomain_action for C in self.layers]
        return {
            "layer_sizes": self.layer_sizes,
            "activation": self.activation.to_dict(),
            "group": {"label": self.domain_action.group.label,
                      "compose_table": self.domain_action.group.compose_table.tolist()},
            "act_tables": [A.act_table.tolist() for A in actions],
            "layers": [
                {"v": C.v.tolist(), "b": C.bias.tolist(), "nu": C.measure.tolist(),
                 "domain": i, "codomain": i + 1}
                for i, C in enumerate(self.layers)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> GcnnModel:
        from .groups import FiniteGroup

        G = FiniteGroup(np.array(doc["group"]["compose_table"]), label=doc["group"].get("label", "G"))
        actions = [GroupAction(G, np.array(t)) for t in doc["act_tables"]]
        layers = [
            ConvKernel(np.array(L["v"]), L["nu"], L["b"], actions[L["domain"]], actions[L["codomain"]])
            for L in doc["layers"]
        ]
        return cls(tuple(layers), Activation.parse(doc["activation"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def gcnn_forward(Phi: GcnnModel, x) -> np.ndarray:
    h = gconv_apply(Phi.layers[0], x)
    for C in Phi.layers[1:]:
        h = gconv_apply(C, Phi.activation(h))
    return h


def kernel_from_univariate(vtilde, A: GroupAction, measure=None, bias=None) -> ConvKernel:
    """Kernel ``v(g, h) = vtilde(h^-1 g)`` for G acting on itself by left translation."""
    G = A.group
    if A.size != G.order or not np.array_equal(A.act_table, G.compose_table):
        raise NotLeftTranslation("kernel_from_univariate needs the left-translation action of G on itself")
    vtilde = np.asarray(vtilde, dtype=float)
    if vtilde.shape != (G.order,):
        raise SizeMismatch(f"vtilde needs one value per group element ({G.order})")
    # rel[g, h] = h^-1 g
    rel = G.compose_table[G.inverse_table[None, :], np.arange(G.order)[:, None]]
    nu = np.ones(G.order) if measure is None else measure
    b = np.zeros(G.order) if bias is None else bias
    return ConvKernel(vtilde[rel], nu, b, A, A)


def univariate_from_kernel(C: ConvKernel) -> np.ndarray:
    """``vtilde(g) = v(g, 1)``."""
    return C.v[:, 0].copy()
