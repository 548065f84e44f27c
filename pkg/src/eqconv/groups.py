"""Finite groups as composition tables and their actions on finite index sets.

Group elements are integer ids ``0..order-1`` with ``0`` the identity.
``compose(g, h)`` is the product ``gh``; an action table satisfies
``act[gh, s] == act[g, act[h, s]]`` (a left action).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    IndexOutOfRange,
    InvalidAction,
    InvalidGroup,
    NonUniformStabilizer,
    SizeMismatch,
)

MAX_ASSOCIATIVITY_CHECK = 512


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    compose_table: np.ndarray
    label: str = "G"
    inverse_table: np.ndarray | None = None
    # permutation images of [n] when the group was built from permutations
    permutations: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        table = np.asarray(self.compose_table, dtype=np.intp)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise InvalidGroup("compose_table must be a non-empty square table")
        n = table.shape[0]
        ids = np.arange(n)
        if table.min() < 0 or table.max() >= n:
            raise InvalidGroup("compose_table entries must be element ids")
        rows_ok = (np.sort(table, axis=1) == ids).all()
        cols_ok = (np.sort(table, axis=0) == ids[:, None]).all()
        if not (rows_ok and cols_ok):
            raise InvalidGroup("compose_table is not a Latin square")
        if not ((table[0] == ids).all() and (table[:, 0] == ids).all()):
            raise InvalidGroup("element 0 must be the identity")
        inv = np.argmin(table, axis=1)  # position of the identity in each row
        if self.inverse_table is not None:
            given = np.asarray(self.inverse_table, dtype=np.intp)
            if given.shape != (n,) or (given != inv).any():
                raise InvalidGroup("inverse_table disagrees with compose_table")
        table.setflags(write=False)
        inv.setflags(write=False)
        object.__setattr__(self, "compose_table", table)
        object.__setattr__(self, "inverse_table", inv)
        if self.permutations is not None:
            perms = np.asarray(self.permutations, dtype=np.intp)
            perms.setflags(write=False)
            object.__setattr__(self, "permutations", perms)

    @property
    def order(self) -> int:
        return self.compose_table.shape[0]

    @property
    def elements(self) -> range:
        return range(self.order)

    def compose(self, g: int, h: int) -> int:
        self._check(g)
        self._check(h)
        return int(self.compose_table[g, h])

    def inverse(self, g: int) -> int:
        self._check(g)
        return int(self.inverse_table[g])

    def is_associative(self) -> bool:
        """Exhaustive check over all triples; refused above 512 elements."""
        if self.order > MAX_ASSOCIATIVITY_CHECK:
            raise InvalidGroup(f"associativity check limited to order <= {MAX_ASSOCIATIVITY_CHECK}")
        c = self.compose_table
        # (gh)k vs g(hk) for every triple
        left = c[c]  # left[g, h, k] = c[c[g, h], k]
        right = c[np.arange(self.order)[:, None, None], c[None, :, :]]
        return bool((left == right).all())

    def is_subgroup(self, elements: Sequence[int]) -> bool:
        ids = np.unique(np.asarray(elements, dtype=np.intp))
        if ids.size == 0 or ids[0] != 0:
            return False
        products = self.compose_table[np.ix_(ids, ids)]
        return bool(np.isin(products, ids).all())

    def conjugate(self, k: int, elements: Sequence[int]) -> frozenset[int]:
        """The set ``{k h k^-1 : h in elements}``."""
        c, inv = self.compose_table, self.inverse_table
        return frozenset(int(c[c[k, h], inv[k]]) for h in elements)

    def _check(self, g):
        if not 0 <= g < self.order:
            raise IndexOutOfRange(f"element id {g} out of range for {self.label} (order {self.order})")

    def __repr__(self):
        return f"FiniteGroup({self.label}, order={self.order})"


def compose(g: int, h: int, G: FiniteGroup) -> int:
    return G.compose(g, h)


def from_permutations(perms: Sequence[Sequence[int]], label: str = "G") -> FiniteGroup:
    """Group of the given permutations of ``range(n)``, composed as maps.

    The identity is moved to id 0; the remaining elements keep their order.
    ``compose(g, h)`` is the map ``i -> g[h[i]]``.
    """
    perms = [tuple(int(i) for i in p) for p in perms]
    n = len(perms[0])
    identity = tuple(range(n))
    if identity not in perms:
        raise InvalidGroup("permutation list must contain the identity")
    perms.remove(identity)
    perms.insert(0, identity)
    index = {p: i for i, p in enumerate(perms)}
    if len(index) != len(perms):
        raise InvalidGroup("duplicate permutations")
    arr = np.array(perms, dtype=np.intp)
    table = np.empty((len(perms), len(perms)), dtype=np.intp)
    for g, pg in enumerate(arr):
        for h, ph in enumerate(arr):
            try:
                table[g, h] = index[tuple(pg[ph])]
            except KeyError:
                raise InvalidGroup("permutations are not closed under composition") from None
    return FiniteGroup(table, label=label, permutations=arr)


def symmetric_group(n: int) -> FiniteGroup:
    """S_n with elements enumerated lexicographically as permutations of [n]."""
    if not 1 <= n <= 6:
        raise InvalidGroup("built-in symmetric groups are limited to n <= 6")
    return from_permutations(list(itertools.permutations(range(n))), label=f"S{n}")


def cyclic_group(n: int) -> FiniteGroup:
    """Z_n; element k is the shift ``i -> i + k (mod n)``."""
    if n < 1:
        raise InvalidGroup("n must be positive")
    perms = [[(i + k) % n for i in range(n)] for k in range(n)]
    return from_permutations(perms, label=f"Z{n}")


def dihedral_group(n: int) -> FiniteGroup:
    """D_n of order 2n acting on the vertices of an n-gon.

    Ids ``0..n-1`` are rotations ``i -> i + k``, ids ``n..2n-1`` the
    reflections ``i -> k - i``.
    """
    if n < 3:
        raise InvalidGroup("dihedral groups need n >= 3")
    rotations = [[(i + k) % n for i in range(n)] for k in range(n)]
    reflections = [[(k - i) % n for i in range(n)] for k in range(n)]
    return from_permutations(rotations + reflections, label=f"D{n}")


def affine_group(n: int) -> FiniteGroup:
    """Aff(Z_n): maps ``k -> a*k + c`` with a a unit mod n.

    Translations are the maps with a = 1, scalings those with c = 0.
    """
    if n < 2:
        raise InvalidGroup("n must be at least 2")
    units = [a for a in range(1, n) if np.gcd(a, n) == 1]
    perms = [[(a * k + c) % n for k in range(n)] for a in units for c in range(n)]
    return from_permutations(perms, label=f"Aff{n}")


def trivial_group() -> FiniteGroup:
    return from_permutations([[0]], label="1")


def builtin_group(name: str) -> FiniteGroup:
    """Parse names like ``"S3"``, ``"Z8"``, ``"D4"`` or ``"trivial"``."""
    name = name.strip()
    if name in ("1", "trivial"):
        return trivial_group()
    if name.startswith("Aff") and name[3:].isdigit():
        return affine_group(int(name[3:]))
    kind, digits = name[0].upper(), name[1:].lstrip("_")
    if not digits.isdigit():
        raise InvalidGroup(f"unknown group {name!r}")
    n = int(digits)
    makers = {"S": symmetric_group, "Z": cyclic_group, "C": cyclic_group, "D": dihedral_group}
    if kind not in makers:
        raise InvalidGroup(f"unknown group family {kind!r}")
    return makers[kind](n)


@dataclass(frozen=True, eq=False)
class GroupAction:
    group: FiniteGroup
    act_table: np.ndarray
    label: str = ""

    def __post_init__(self):
        act = np.asarray(self.act_table, dtype=np.intp)
        G = self.group
        if act.ndim != 2 or act.shape[0] != G.order or act.shape[1] == 0:
            raise InvalidAction("act_table must have shape (group order, index set size)")
        size = act.shape[1]
        if act.min() < 0 or act.max() >= size:
            raise InvalidAction("act_table entries must be index ids")
        if (np.sort(act, axis=1) != np.arange(size)).any():
            raise InvalidAction("each group element must act as a permutation")
        if (act[0] != np.arange(size)).any():
            raise InvalidAction("identity must act trivially")
        lhs = act[G.compose_table]  # act[gh, s]
        rhs = act[np.arange(G.order)[:, None, None], act[None, :, :]]  # act[g, act[h, s]]
        if (lhs != rhs).any():
            raise InvalidAction("act_table is not compatible with the group law")
        act.setflags(write=False)
        object.__setattr__(self, "act_table", act)

    @property
    def size(self) -> int:
        return self.act_table.shape[1]

    index_set_size = size

    def act(self, g: int, s: int) -> int:
        self.group._check(g)
        self._check(s)
        return int(self.act_table[g, s])

    def _check(self, s):
        if not 0 <= s < self.size:
            raise IndexOutOfRange(f"index {s} out of range for index set of size {self.size}")

    def same_as(self, other: GroupAction) -> bool:
        return self.group is other.group and np.array_equal(self.act_table, other.act_table)

    def __repr__(self):
        return f"GroupAction({self.group.label} on {self.size} points{', ' + self.label if self.label else ''})"


def natural_action(G: FiniteGroup) -> GroupAction:
    """Action of a permutation group on the points it permutes."""
    if G.permutations is None:
        raise InvalidAction(f"{G.label} was not built from permutations")
    return GroupAction(G, G.permutations, label="natural")


def regular_action(G: FiniteGroup) -> GroupAction:
    """Left translation of G on itself."""
    return GroupAction(G, G.compose_table, label="regular")


def trivial_action(G: FiniteGroup, size: int = 1) -> GroupAction:
    return GroupAction(G, np.tile(np.arange(size), (G.order, 1)), label="trivial")


def left_cosets(G: FiniteGroup, K: Sequence[int]) -> list[tuple[int, ...]]:
    """Left cosets gK, each sorted, ordered by their smallest element."""
    K = np.unique(np.asarray(K, dtype=np.intp))
    if not G.is_subgroup(K):
        raise InvalidGroup("not a subgroup")
    seen = np.full(G.order, -1)
    cosets = []
    for g in G.elements:
        if seen[g] >= 0:
            continue
        coset = tuple(sorted(int(c) for c in G.compose_table[g, K]))
        seen[list(coset)] = len(cosets)
        cosets.append(coset)
    return cosets


def coset_action(G: FiniteGroup, K: Sequence[int]) -> tuple[GroupAction, list[tuple[int, ...]]]:
    """Action of G on G/K by left multiplication."""
    cosets = left_cosets(G, K)
    which = np.empty(G.order, dtype=np.intp)
    for i, c in enumerate(cosets):
        which[list(c)] = i
    reps = np.array([c[0] for c in cosets])
    act = which[G.compose_table[:, reps]]
    return GroupAction(G, act, label=f"cosets/{len(K)}"), cosets


def product_action(A: GroupAction, m: int) -> GroupAction:
    """Action on A's index set times ``m`` inert labels, flattened as ``i*m + tau``."""
    act = (A.act_table[:, :, None] * m + np.arange(m)).reshape(A.group.order, -1)
    return GroupAction(A.group, act, label=f"{A.label}x{m}")


def orbit(s: int, A: GroupAction) -> frozenset[int]:
    A._check(s)
    return frozenset(int(t) for t in A.act_table[:, s])


def stabilizer(s: int, A: GroupAction) -> tuple[int, ...]:
    A._check(s)
    return tuple(int(g) for g in np.flatnonzero(A.act_table[:, s] == s))


@dataclass(frozen=True, eq=False)
class ActionDecomposition:
    """S = G/H x B for an action with a common stabilizer type.

    ``projection[t]`` is the base point of t's orbit, ``section[t]`` the
    smallest element id g with ``g . projection[t] == t``.  ``stabilizer``
    holds the element ids of the stabilizer of the first base point.
    """

    action: GroupAction
    base_space: tuple[int, ...]
    projection: np.ndarray
    section: np.ndarray
    stabilizer: tuple[int, ...]
    base_stabilizers: tuple[tuple[int, ...], ...]
    coset_reps: tuple[int, ...]

    @property
    def group(self) -> FiniteGroup:
        return self.action.group

    @property
    def quotient_size(self) -> int:
        return len(self.coset_reps)

    @property
    def quotient_reps(self) -> tuple[int, ...]:
        return self.coset_reps

    @cached_property
    def base_position(self) -> np.ndarray:
        """Position of each index's base point within ``base_space``."""
        lookup = {b: i for i, b in enumerate(self.base_space)}
        return np.array([lookup[int(p)] for p in self.projection], dtype=np.intp)

    def stabilizer_group(self) -> FiniteGroup:
        """The common stabilizer as a FiniteGroup with relabelled ids."""
        ids = list(self.stabilizer)
        pos = {g: i for i, g in enumerate(ids)}
        c = self.group.compose_table
        table = [[pos[int(c[g, h])] for h in ids] for g in ids]
        return FiniteGroup(np.array(table), label=f"Stab({self.base_space[0]})")

    @property
    def uniform_stabilizer(self) -> bool:
        """True when every base point has exactly ``stabilizer`` as stabilizer."""
        first = set(self.stabilizer)
        return all(set(s) == first for s in self.base_stabilizers)


def decompose(A: GroupAction) -> ActionDecomposition:
    G, act = A.group, A.act_table
    projection = act.min(axis=0)  # smallest index in each orbit
    base_space = tuple(int(b) for b in np.unique(projection))
    # smallest g carrying the base point to t: argmax finds the first hit
    section = np.argmax(act[:, projection] == np.arange(A.size), axis=0)
    stabs = tuple(stabilizer(b, A) for b in base_space)
    b0, H = base_space[0], stabs[0]
    for b, st in zip(base_space[1:], stabs[1:]):
        if len(st) != len(H):
            raise NonUniformStabilizer(
                f"stabilizer of orbit {sorted(orbit(b0, A))} has order {len(H)} but "
                f"stabilizer of orbit {sorted(orbit(b, A))} has order {len(st)}",
                orbits=(sorted(orbit(b0, A)), sorted(orbit(b, A))),
            )
        target = frozenset(st)
        if not any(G.conjugate(k, H) == target for k in G.elements):
            raise NonUniformStabilizer(
                f"stabilizers of orbits {sorted(orbit(b0, A))} and {sorted(orbit(b, A))} are not conjugate",
                orbits=(sorted(orbit(b0, A)), sorted(orbit(b, A))),
            )
    reps = tuple(c[0] for c in left_cosets(G, H))
    projection.setflags(write=False)
    section.setflags(write=False)
    return ActionDecomposition(
        action=A,
        base_space=base_space,
        projection=projection,
        section=section,
        stabilizer=H,
        base_stabilizers=stabs,
        coset_reps=reps,
    )


def translate(g: int, x, A: GroupAction) -> np.ndarray:
    """``T_g[x](s) = x(g^-1 . s)``; leading batch axes of x are kept."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != A.size:
        raise SizeMismatch(f"signal has {x.shape[-1]} entries, action has {A.size} points")
    ginv = A.group.inverse(g)
    return x[..., A.act_table[ginv]]


def translate_all(x, A: GroupAction) -> np.ndarray:
    """Stack of ``T_g[x]`` over all g, group axis first."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != A.size:
        raise SizeMismatch(f"signal has {x.shape[-1]} entries, action has {A.size} points")
    inv_rows = A.act_table[A.group.inverse_table]
    return np.stack([x[..., row] for row in inv_rows])


# JSON documents: {label, order, compose_table, act_table}


def group_to_dict(G: FiniteGroup, A: GroupAction | None = None) -> dict:
    doc = {"label": G.label, "order": G.order, "compose_table": G.compose_table.tolist()}
    if A is not None:
        doc["act_table"] = A.act_table.tolist()
    return doc


def group_from_dict(doc: dict) -> tuple[FiniteGroup, GroupAction | None]:
    G = FiniteGroup(np.array(doc["compose_table"]), label=doc.get("label", "G"))
    if "order" in doc and doc["order"] != G.order:
        raise InvalidGroup(f"declared order {doc['order']} but table has {G.order} rows")
    if G.order <= MAX_ASSOCIATIVITY_CHECK and not G.is_associative():
        raise InvalidGroup("compose_table is not associative")
    A = GroupAction(G, np.array(doc["act_table"])) if "act_table" in doc else None
    return G, A


def load_group_json(path) -> tuple[FiniteGroup, GroupAction | None]:
    with open(Path(path), encoding="utf-8") as fh:
        return group_from_dict(json.load(fh))
