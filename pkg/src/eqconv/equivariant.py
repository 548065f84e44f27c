"""Equivariant maps and their generators.

Maps here are vectorised: ``eval`` takes an array whose last axis is the
index set and may carry leading batch axes.  An equivariant map is fully
determined by its generator, its restriction to a base space of the
codomain; ``lift_generator`` rebuilds the full map from the generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DecompositionMismatch, SizeMismatch
from .groups import ActionDecomposition, GroupAction, decompose, translate, translate_all
from .signal import SampleSet, as_signal


@dataclass(frozen=True, eq=False)
class GeneratorMap:
    eval: Callable[[np.ndarray], np.ndarray]
    domain_decomp: ActionDecomposition
    codomain_decomp: ActionDecomposition

    def __call__(self, x):
        x = as_signal(x, self.domain_decomp.action.size)
        out = np.asarray(self.eval(x), dtype=float)
        nb = len(self.codomain_decomp.base_space)
        if out.shape != x.shape[:-1] + (nb,):
            raise SizeMismatch(f"generator returned shape {out.shape}, expected {x.shape[:-1] + (nb,)}")
        return out


@dataclass(frozen=True, eq=False)
class EquivariantMap:
    eval: Callable[[np.ndarray], np.ndarray]
    domain_action: GroupAction
    codomain_action: GroupAction
    lipschitz_bound: float | None = None

    def __post_init__(self):
        if self.domain_action.group is not self.codomain_action.group:
            raise DecompositionMismatch("domain and codomain must be acted on by the same group")

    @property
    def group(self):
        return self.domain_action.group

    def __call__(self, x):
        x = as_signal(x, self.domain_action.size)
        out = np.asarray(self.eval(x), dtype=float)
        if out.shape != x.shape[:-1] + (self.codomain_action.size,):
            raise SizeMismatch(f"map returned shape {out.shape}")
        return out


def restrict_to_generator(F: EquivariantMap, D_T: ActionDecomposition) -> GeneratorMap:
    if not D_T.action.same_as(F.codomain_action):
        raise DecompositionMismatch("decomposition does not belong to the map's codomain action")
    base = np.array(D_T.base_space)
    return GeneratorMap(lambda x: F(x)[..., base], decompose(F.domain_action), D_T)


def lift_generator(F_B: GeneratorMap, lipschitz_bound: float | None = None) -> EquivariantMap:
    """``F[x](t) = F_B[g_t^-1 . x](P(t))`` with the canonical section g_t."""
    D_S, D_T = F_B.domain_decomp, F_B.codomain_decomp
    if D_S.group is not D_T.group:
        raise DecompositionMismatch("generator decompositions belong to different groups")
    act_S = D_S.action.act_table
    section, pos = D_T.section, D_T.base_position
    # indices sharing a section element share one generator evaluation
    groups = [(int(g), np.flatnonzero(section == g)) for g in np.unique(section)]

    def lifted(x):
        out = np.empty(x.shape[:-1] + (D_T.action.size,))
        for g, ts in groups:
            # T_{g^-1}[x](s) = x(g . s)
            y = F_B(x[..., act_S[g]])
            out[..., ts] = y[..., pos[ts]]
        return out

    return EquivariantMap(lifted, D_S.action, D_T.action, lipschitz_bound)


def check_equivariance(F, trials: int = 50, seed: int = 0, *, low=-1.0, high=1.0,
                       elements: Sequence[int] | None = None) -> float:
    """Max of ``|F[g.x] - g.F[x]|`` over group elements and random inputs.

    ``F`` is any callable with ``domain_action`` and ``codomain_action``.
    All group elements are tried unless ``elements`` is given.
    """
    A_S, A_T = F.domain_action, F.codomain_action
    rng = np.random.default_rng(seed)
    X = rng.uniform(low, high, size=(trials, A_S.size))
    FX = F(X)
    worst = 0.0
    for g in (A_S.group.elements if elements is None else elements):
        lhs = F(translate(g, X, A_S))
        rhs = translate(g, FX, A_T)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def g_closure(X, A: GroupAction) -> np.ndarray:
    """All translates of the rows of X, deduplicated and sorted."""
    X = as_signal(X, A.size)
    X = np.atleast_2d(X)
    return np.unique(translate_all(X, A).reshape(-1, A.size), axis=0)


def generator_distance(F: EquivariantMap, F2: EquivariantMap, E: SampleSet | np.ndarray,
                       D_T: ActionDecomposition) -> tuple[float, float]:
    """(sup distance of the full maps on E, sup distance of generators on G.E)."""
    X = E.signals if isinstance(E, SampleSet) else np.atleast_2d(np.asarray(E, dtype=float))
    full = float(np.max(np.abs(F(X) - F2(X))))
    closed = g_closure(X, F.domain_action)
    base = np.array(D_T.base_space)
    gen = float(np.max(np.abs(F(closed)[:, base] - F2(closed)[:, base])))
    return full, gen
