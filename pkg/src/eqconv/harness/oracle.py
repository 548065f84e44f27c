"""Direct-enumeration evaluation of a lifted generator.

Deliberately shares no code with ``eqconv.equivariant``: base points and
sections are found by scanning the raw act tables.
"""

from __future__ import annotations

import numpy as np

from ..errors import SizeLimitExceeded

MAX_GROUP_ORDER = 48
MAX_INDEX_SIZE = 16


def brute_force_equivariant_oracle(F_B, x) -> np.ndarray:
    """Evaluate ``F[x](t) = F_B[g_t^-1 . x](P(t))`` point by point.

    For each t, scans g = 0, 1, ... and the base points until g . b == t;
    the first hit is the smallest such g, the canonical section.
    """
    act_S = F_B.domain_decomp.action.act_table.tolist()
    act_T = F_B.codomain_decomp.action.act_table.tolist()
    base = list(F_B.codomain_decomp.base_space)
    order, n_S, n_T = len(act_S), len(act_S[0]), len(act_T[0])
    if order > MAX_GROUP_ORDER or max(n_S, n_T) > MAX_INDEX_SIZE:
        raise SizeLimitExceeded(
            f"oracle limited to |G| <= {MAX_GROUP_ORDER} and index sets <= {MAX_INDEX_SIZE}"
        )
    x = [float(v) for v in np.asarray(x, dtype=float).reshape(-1)]
    if len(x) != n_S:
        raise SizeLimitExceeded(f"signal has {len(x)} entries, expected {n_S}")
    out = []
    for t in range(n_T):
        hit = None
        for g in range(order):
            for j, b in enumerate(base):
                if act_T[g][b] == t:
                    hit = (g, j)
                    break
            if hit:
                break
        g, j = hit
        moved = [x[act_S[g][s]] for s in range(n_S)]  # (g^-1 . x)(s) = x(g . s)
        out.append(float(np.asarray(F_B(np.array(moved)))[j]))
    return np.array(out)
