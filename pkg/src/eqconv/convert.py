"""Turn a fully-connected generator network into a group CNN of equal depth.

Given an FNN ``phi`` from signals on S to signals on the codomain base
space B_T, ``convert`` builds a G-CNN ``Phi`` on S -> T whose restriction
to B_T reproduces ``phi``:

* layer 1 lifts the first affine map with the invariant kernel
  ``v1((g, tau), s) = w1(tau, g^-1 s) * dmu/dnu(g^-1 s)``;
* later layers copy the affine map onto every coset slice through a
  Kronecker delta on the quotient (optionally a triangular mollifier on
  cyclic groups, to study the smoothed construction).

Intermediate index sets are ``G/K x B_l`` flattened coset-major, where K is
the output stabilizer H_T when the first layer is H_T-invariant and the
trivial subgroup otherwise.  With a trivial K the last layer averages over
the stabilizer coset of each output point, so ``R_B . Phi`` is the
H_T-average of ``phi`` (equal to ``phi`` whenever ``phi`` is H_T-invariant,
which every generator of an equivariant map is).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np

from .equivariant import EquivariantMap, g_closure
from .errors import (
    DecompositionMismatch,
    NoInvariantMeasure,
    NotAbsolutelyContinuous,
    SizeMismatch,
    StabilizerNotNested,
)
from .fnn import AffineLayer, FnnModel
from .gconv import ConvKernel, GcnnModel
from .groups import ActionDecomposition, GroupAction, coset_action, product_action
from .signal import SampleSet, as_measure, check_invariant_measure, is_absolutely_continuous

INVARIANCE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConversionProblem:
    phi: FnnModel
    domain_decomp: ActionDecomposition
    codomain_decomp: ActionDecomposition
    nu: np.ndarray | None = None  # invariant measure on S; counting if omitted
    quotient_measure: np.ndarray | None = None  # on G/K; counting if omitted

    def __post_init__(self):
        nu = np.ones(self.domain_decomp.action.size) if self.nu is None else as_measure(self.nu)
        object.__setattr__(self, "nu", nu)

    @property
    def group(self):
        return self.domain_decomp.group

    @property
    def depth(self) -> int:
        return len(self.phi.layers)

    @property
    def domain_action(self) -> GroupAction:
        return self.domain_decomp.action

    @property
    def codomain_action(self) -> GroupAction:
        return self.codomain_decomp.action

    @cached_property
    def density(self) -> np.ndarray:
        ok, d = is_absolutely_continuous(self.phi.input_measure, self.nu)
        if not ok:
            raise NotAbsolutelyContinuous("the first-layer measure of phi is not absolutely continuous w.r.t. nu")
        return d

    @cached_property
    def lift_subgroup(self) -> tuple[int, ...]:
        """K with intermediate index sets G/K x B_l (see module docstring)."""
        H_T = self.codomain_decomp.stabilizer
        if self.depth == 1 or len(H_T) == 1 or not self.codomain_decomp.uniform_stabilizer:
            return (0,) if self.depth > 1 else H_T
        act = self.domain_action.act_table
        wd = self.phi.layers[0].weight * self.density
        scale = max(float(np.max(np.abs(wd))), 1.0)
        for h in H_T:
            if np.max(np.abs(wd[:, act[h]] - wd)) > INVARIANCE_RTOL * scale:
                return (0,)
        return H_T

    @cached_property
    def _quotient(self) -> tuple[GroupAction, list[tuple[int, ...]]]:
        return coset_action(self.group, self.lift_subgroup)

    @property
    def quotient_action(self) -> GroupAction:
        return self._quotient[0]

    @property
    def cosets(self) -> list[tuple[int, ...]]:
        return self._quotient[1]

    @cached_property
    def quotient_masses(self) -> np.ndarray:
        n = len(self.cosets)
        if self.quotient_measure is None:
            return np.ones(n)
        return as_measure(self.quotient_measure, n)

    def hidden_action(self, width: int) -> GroupAction:
        return product_action(self.quotient_action, width)


@dataclass
class ConversionReport:
    proj2_error: float
    generator_error: float | None = None
    full_error: float | None = None
    norm2_bound_ok: bool | None = None
    samples: int = 0
    closed_samples: int = 0
    lift_subgroup_order: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


def validate_conditions(p: ConversionProblem) -> None:
    """Raise a typed error unless the construction's hypotheses hold."""
    D_S, D_T = p.domain_decomp, p.codomain_decomp
    if D_S.group is not D_T.group:
        raise DecompositionMismatch("domain and codomain decompositions use different groups")
    sizes = p.phi.layer_sizes
    if sizes[0] != D_S.action.size:
        raise SizeMismatch(f"phi expects {sizes[0]} inputs, S has {D_S.action.size} points")
    if sizes[-1] != len(D_T.base_space):
        raise SizeMismatch(f"phi has {sizes[-1]} outputs, B_T has {len(D_T.base_space)} points")
    H_S, H_T = set(D_S.stabilizer), set(D_T.stabilizer)
    if not H_T <= H_S:
        hint = " (invariant case: H_T = G)" if len(H_T) == p.group.order else ""
        raise StabilizerNotNested(
            f"output stabilizer of order {len(H_T)} is not contained in input stabilizer of order {len(H_S)}{hint}"
        )
    if p.nu.size != D_S.action.size:
        raise SizeMismatch("nu must have one mass per point of S")
    if not check_invariant_measure(p.nu, D_S.action):
        raise NoInvariantMeasure("nu is not invariant under the group action on S")
    p.density  # raises NotAbsolutelyContinuous
    q = p.quotient_masses
    if (q <= 0).any() or np.ptp(q) > 0:
        raise NoInvariantMeasure("the quotient measure must be a positive constant")


def lift_first_layer(A1: AffineLayer, p: ConversionProblem) -> ConvKernel:
    S = p.domain_action
    actS = S.act_table
    inv = p.group.inverse_table
    wd = A1.weight * p.density  # w1(tau, s) dmu/dnu(s)
    if p.depth == 1:
        out = p.codomain_action
        D_T = p.codomain_decomp
        v = np.empty((out.size, S.size))
        for t in range(out.size):
            # every g with g . P(t) = t, i.e. the coset g_t Stab(P(t))
            reps = np.flatnonzero(out.act_table[:, D_T.projection[t]] == t)
            v[t] = wd[D_T.base_position[t]][actS[inv[reps]]].mean(axis=0)
        bias = A1.bias[D_T.base_position]
    else:
        out = p.hidden_action(A1.out_size)
        # (c, tau) -> mean over g in coset c of wd(tau, g^-1 s)
        blocks = [wd[:, actS[inv[list(coset)]]].mean(axis=1) for coset in p.cosets]
        v = np.concatenate(blocks, axis=0)
        bias = np.tile(A1.bias, len(p.cosets))
    return ConvKernel(v, p.nu, bias, S, out)


def _cyclic_distance(G) -> np.ndarray:
    n = G.order
    if not np.array_equal(G.compose_table, np.add.outer(np.arange(n), np.arange(n)) % n):
        raise ValueError("mollified deltas are only defined on cyclic groups Z_n")
    k = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return np.minimum(k, n - k)


def _triangular(dist: np.ndarray, halfwidth: int) -> np.ndarray:
    """Mass-normalised triangular bump over each row; halfwidth 0 is the Kronecker delta."""
    m = np.clip(halfwidth + 1 - dist, 0, None).astype(float)
    return m / m.sum(axis=1, keepdims=True)


def _delta(p: ConversionProblem, centers: np.ndarray, halfwidth: int) -> np.ndarray:
    """Rows: delta at the given group element (or its K-coset), divided by the quotient masses."""
    q = p.quotient_masses
    if halfwidth == 0:
        which = np.empty(p.group.order, dtype=np.intp)
        for i, c in enumerate(p.cosets):
            which[list(c)] = i
        D = np.zeros((len(centers), len(p.cosets)))
        D[np.arange(len(centers)), which[centers]] = 1.0
        return D / q
    if len(p.lift_subgroup) != 1:
        raise ValueError("mollified deltas need the trivial lift subgroup")
    dist = _cyclic_distance(p.group)[centers]
    return _triangular(dist, halfwidth) / q


def lift_hidden_layer(Al: AffineLayer, layer_index: int, p: ConversionProblem,
                      mollifier_halfwidth: int = 0) -> ConvKernel:
    """Lift layer ``layer_index`` (1-based, >= 2) onto coset slices."""
    if not 2 <= layer_index <= p.depth:
        raise ValueError(f"hidden layers are numbered 2..{p.depth}")
    nq = len(p.cosets)
    src = p.hidden_action(Al.in_size)
    nu_l = np.kron(p.quotient_masses, Al.measure)
    if layer_index < p.depth:
        out = p.hidden_action(Al.out_size)
        reps = np.array([c[0] for c in p.cosets])
        D = _delta(p, reps, mollifier_halfwidth)
        v = np.kron(D, Al.weight)
        bias = np.tile(Al.bias, nq)
        return ConvKernel(v, nu_l, bias, src, out)

    out = p.codomain_action
    D_T = p.codomain_decomp
    tau = D_T.base_position
    if mollifier_halfwidth:
        D = _delta(p, D_T.section, mollifier_halfwidth)
    else:
        # average over the K-cosets inside g_t Stab(P(t))
        which = np.empty(p.group.order, dtype=np.intp)
        for i, c in enumerate(p.cosets):
            which[list(c)] = i
        D = np.zeros((out.size, nq))
        for t in range(out.size):
            hits = np.unique(which[np.flatnonzero(out.act_table[:, D_T.projection[t]] == t)])
            D[t, hits] = 1.0 / hits.size
        D = D / p.quotient_masses
    v = np.einsum("tc,ts->tcs", D, Al.weight[tau]).reshape(out.size, -1)
    return ConvKernel(v, nu_l, Al.bias[tau], src, out)


def convert(p: ConversionProblem, mollifier_halfwidth: int = 0) -> GcnnModel:
    validate_conditions(p)
    layers = [lift_first_layer(p.phi.layers[0], p)]
    for i, A in enumerate(p.phi.layers[1:], start=2):
        layers.append(lift_hidden_layer(A, i, p, mollifier_halfwidth))
    return GcnnModel(tuple(layers), p.phi.activation)


def commutation_errors(p: ConversionProblem, Phi: GcnnModel, X) -> list[float]:
    """Per layer, max of ``|R_B C_l h - A_l R_B h|`` along the forward pass on X.

    Entry 0 is the first-layer identity ``R_B1 C_1 = A_1``; later entries are
    the slice-wise identities (zero for Kronecker deltas).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    errs = []
    h = X
    for i, (C, A) in enumerate(zip(Phi.layers, p.phi.layers)):
        out = C(h)
        if i == len(Phi.layers) - 1:
            base_out = out[:, list(p.codomain_decomp.base_space)]
        else:
            base_out = out[:, : A.out_size]  # identity coset comes first
        base_in = h if i == 0 else h[:, : A.in_size]
        errs.append(float(np.max(np.abs(base_out - A(base_in)))))
        h = Phi.activation(out)
    return errs


def certify(p: ConversionProblem, Phi: GcnnModel, E, F: EquivariantMap | None = None,
            slack: float = 1e-9) -> ConversionReport:
    """Measure the restriction error and, given a target F, the error chain.

    The restriction and generator errors are taken over the G-closure of E,
    the set on which the full-map error over E is controlled.
    """
    X = E.signals if isinstance(E, SampleSet) else np.atleast_2d(np.asarray(E, dtype=float))
    closed = g_closure(X, p.domain_action)
    base = list(p.codomain_decomp.base_space)
    phi_closed = p.phi(closed)
    proj2 = float(np.max(np.abs(_batched(Phi, closed)[:, base] - phi_closed)))
    report = ConversionReport(
        proj2_error=proj2,
        samples=X.shape[0],
        closed_samples=closed.shape[0],
        lift_subgroup_order=len(p.lift_subgroup),
    )
    if F is not None:
        report.generator_error = float(np.max(np.abs(F(closed)[:, base] - phi_closed)))
        report.full_error = float(np.max(np.abs(F(X) - _batched(Phi, X))))
        report.norm2_bound_ok = report.full_error <= report.generator_error + proj2 + slack
    return report


def _batched(fn, X, batch: int = 1024) -> np.ndarray:
    # bounds the (samples x hidden) activations of wide converted networks
    return np.concatenate([fn(X[i:i + batch]) for i in range(0, X.shape[0], batch)])


def stabilizer_average(phi: FnnModel, domain_decomp: ActionDecomposition,
                       codomain_decomp: ActionDecomposition) -> FnnModel:
    """The FNN ``x -> mean_{h in H_T} phi(h . x)``, exactly H_T-invariant.

    Hidden layers are stacked block-diagonally, one copy per h, and the last
    layer averages the copies.  The input measure must be H_T-invariant.
    """
    H = codomain_decomp.stabilizer
    act = domain_decomp.action.act_table
    mu = phi.input_measure
    if any((mu[act[h]] != mu).any() for h in H):
        raise NoInvariantMeasure("the input measure of phi is not invariant under the output stabilizer")
    if len(H) == 1:
        return phi
    first, *rest = phi.layers
    # (h . x)(s) = x(h^-1 s), so the copy for h reads w(h . s') against x(s')
    copies = [first.weight[:, act[h]] for h in H]
    if not rest:
        return FnnModel((AffineLayer(np.mean(copies, axis=0), first.bias, mu),), phi.activation)
    layers = [AffineLayer(np.vstack(copies), np.tile(first.bias, len(H)), mu)]
    eye = np.eye(len(H))
    for A in rest[:-1]:
        layers.append(AffineLayer.counting(np.kron(eye, A.weight), np.tile(A.bias, len(H))))
    last = rest[-1]
    layers.append(AffineLayer.counting(np.hstack([last.weight] * len(H)) / len(H), last.bias))
    return FnnModel(tuple(layers), phi.activation)
