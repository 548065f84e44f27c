"""Acceptance criteria 1-10, one test each.

Every test records a line in ``RESULTS``; the summary hook in conftest
prints them after the run (also: ``python3 -m tests.test_acceptance``).
"""

import time

import numpy as np
import pytest

from eqconv.convert import (
    ConversionProblem,
    certify,
    commutation_errors,
    convert,
    lift_first_layer,
    stabilizer_average,
)
from eqconv.deepsets import DeepSetsLayer, deepsets_apply, deepsets_to_kernel, kernel_to_deepsets, symmetric_action
from eqconv.equivariant import check_equivariance, g_closure, generator_distance, lift_generator
from eqconv.errors import NoInvariantMeasure, NotSymmetricInvariant, StabilizerNotNested
from eqconv.gconv import ConvKernel, gconv_apply
from eqconv.groups import builtin_group, decompose, natural_action, regular_action
from eqconv.harness import (
    ExperimentConfig,
    invariant_case_config,
    mollifier_sweep,
    rotation_demo,
    run_experiment,
    scaling_demo,
    translation_scaling_config,
)

from .helpers import check_gradients, invariant_first_layer_fnn, random_fnn, random_generator

GROUPS = ("S3", "S4", "Z4", "Z8", "D4")
RESULTS: dict[int, str] = {}


def record(k, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    RESULTS[k] = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.2f}s < {budget:g}s]"
    return ok


def decomps(name):
    G = builtin_group(name)
    return [decompose(natural_action(G)), decompose(regular_action(G))]


S4_MAX = {
    "label": "s4-coordinate-max",
    "group": "S4",
    "action": "natural",
    "target": {"kind": "coordinate-max"},
    "sample_set": {"count": 512, "low": 0.0, "high": 1.0, "seed": 0},
    "fnn": {"hidden": 64, "activation": "tanh", "epochs": 10000, "lr": 0.1, "seed": 0},
    "tolerances": {"proj2": 1e-10, "equivariance": 1e-10, "norm2_slack": 1e-9, "fit": 5e-2},
}
_S4_CACHE = {}


def s4_max_report():
    if "r" not in _S4_CACHE:
        t0 = time.perf_counter()
        _S4_CACHE["r"] = run_experiment(ExperimentConfig.from_dict(S4_MAX))
        _S4_CACHE["t"] = time.perf_counter() - t0
    return _S4_CACHE["r"], _S4_CACHE["t"]


def test_criterion_01_first_layer_commutation():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for name in GROUPS:
        for D in decomps(name):
            n = D.action.size
            for k in range(100):
                # half arbitrary first layers, half stabilizer-invariant ones (lifted on G/H_T)
                if k % 2:
                    phi = invariant_first_layer_fnn([n, 5, len(D.base_space)], D, D, rng)
                else:
                    phi = random_fnn([n, 5, len(D.base_space)], rng)
                p = ConversionProblem(phi, D, D)
                A1 = phi.layers[0]
                X = rng.normal(size=(8, n))
                worst = max(worst, float(np.max(np.abs(lift_first_layer(A1, p)(X)[:, : A1.out_size] - A1(X)))))
                count += 1
    ok = record(1, worst <= 1e-12, f"max |R_B1 C1 x - A1 x| = {worst:.2e} over {count} layers (tol 1e-12)",
                time.perf_counter() - t0, 10)
    assert ok, RESULTS[1]


def _conversion_cases(rng):
    """Random FNN problems: arbitrary on regular actions, stabilizer-invariant on natural ones."""
    for name in GROUPS:
        nat, reg = decomps(name)
        for depth in (2, 3):
            for D, mode in ((reg, "arbitrary"), (nat, "invariant-first-layer"), (nat, "stabilizer-averaged")):
                n, nb = D.action.size, len(D.base_space)
                sizes = [n, 6, nb] if depth == 2 else [n, 6, 4, nb]
                if mode == "arbitrary":
                    phi = random_fnn(sizes, rng)
                elif mode == "invariant-first-layer":
                    phi = invariant_first_layer_fnn(sizes, D, D, rng)
                else:
                    phi = stabilizer_average(random_fnn(sizes, rng), D, D)
                yield name, depth, mode, ConversionProblem(phi, D, D)


def test_criterion_02_conversion_fidelity():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for name, depth, mode, p in _conversion_cases(rng):
        E = rng.uniform(size=(256, p.domain_action.size))
        worst = max(worst, certify(p, convert(p), E).proj2_error)
        count += 1
    ok = record(2, worst <= 1e-10, f"max proj2_error = {worst:.2e} over {count} networks, 256-sample E (tol 1e-10)",
                time.perf_counter() - t0, 30)
    assert ok, RESULTS[2]


def test_criterion_03_equivariance():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst_gcnn = worst_lift = 0.0
    for name, depth, mode, p in _conversion_cases(rng):
        worst_gcnn = max(worst_gcnn, check_equivariance(convert(p), trials=50, seed=depth))
    for name in GROUPS:
        nat, reg = decomps(name)
        for D_S, D_T in ((nat, nat), (reg, reg), (reg, nat)):
            F = lift_generator(random_generator(D_S, D_T, rng))
            worst_lift = max(worst_lift, check_equivariance(F, trials=50, seed=1))
    worst = max(worst_gcnn, worst_lift)
    ok = record(3, worst < 1e-10, f"max violation: converted GCNNs {worst_gcnn:.2e}, lifted generators "
                f"{worst_lift:.2e} (50 inputs, all g; tol 1e-10)", time.perf_counter() - t0, 30)
    assert ok, RESULTS[3]


def test_criterion_04_isometry():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(50):
        name = GROUPS[k % len(GROUPS)]
        D = decomps(name)[k // len(GROUPS) % 2]
        E = g_closure(rng.uniform(size=(6, D.action.size)), D.action)
        F, F2 = (lift_generator(random_generator(D, D, rng)) for _ in range(2))
        full, gen = generator_distance(F, F2, E, D)
        worst = max(worst, abs(full - gen))
    ok = record(4, worst <= 1e-12, f"max |full - generator| = {worst:.2e} over 50 pairs (tol 1e-12)",
                time.perf_counter() - t0, 10)
    assert ok, RESULTS[4]


NORM2_TARGETS = [
    {"label": "s3-max", "group": "S3", "action": "natural", "target": {"kind": "coordinate-max"},
     "sample_set": {"count": 256, "seed": 0}, "fnn": {"hidden": 32, "epochs": 5000, "lr": 0.1}},
    {"label": "s3-identity", "group": "S3", "action": "natural", "target": {"kind": "identity"},
     "sample_set": {"count": 128, "seed": 0}, "fnn": {"hidden": 4, "activation": "relu", "epochs": 5000, "lr": 0.3}},
    {"label": "d4-polynomial", "group": "D4", "action": "natural",
     "target": {"kind": "equivariant-polynomial", "coefficients": {"local": [1.0, -0.5], "pooled": [0.25]}},
     "sample_set": {"count": 128, "low": -1.0, "high": 1.0, "seed": 1}, "fnn": {"hidden": 16, "epochs": 2000}},
    {"label": "z8-regular-max", "group": "Z8", "action": "regular", "target": {"kind": "coordinate-max"},
     "sample_set": {"count": 128, "seed": 2}, "fnn": {"hidden": 16, "epochs": 2000}},
]


def test_criterion_05_norm2_chain():
    t0 = time.perf_counter()
    rows = []
    for doc in NORM2_TARGETS:
        rows.append((doc["label"], run_experiment(ExperimentConfig.from_dict(doc)).conversion))
    rows.append(("rotation-C8x3", rotation_demo(8, 3).conversion))
    rows.append(("scaling-Z8x2", scaling_demo(8, 2).conversion))
    rows.append(("s4-max", s4_max_report()[0].conversion))
    elapsed = time.perf_counter() - t0
    gaps = {label: r.full_error - (r.generator_error + r.proj2_error) for label, r in rows}
    ok_all = all(g <= 1e-9 for g in gaps.values())
    worst = max(gaps, key=gaps.get)
    ok = record(5, ok_all and len(rows) >= 5,
                f"{len(rows)} targets, max(full - gen - proj2) = {gaps[worst]:.2e} at {worst} (slack 1e-9)",
                elapsed, 120)
    assert ok, RESULTS[5]


def test_criterion_06_universal_approximation():
    r, elapsed = s4_max_report()
    fit_err = r.fit["sup_error"]
    c = r.conversion
    budget = c.generator_error + c.proj2_error + 1e-9
    ok = record(6, fit_err <= 5e-2 and c.full_error <= budget,
                f"S4 max, hidden 64: fit sup-error {fit_err:.4f} (tol 5e-2); full {c.full_error:.4f} <= "
                f"gen {c.generator_error:.4f} + proj2 {c.proj2_error:.1e} + 1e-9", elapsed, 120)
    assert ok, RESULTS[6]


def test_criterion_07_deepsets():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    roundtrip = path = 0.0
    rejected = []
    for n in range(2, 7):
        for _ in range(20):
            layer = DeepSetsLayer(*rng.normal(size=3), n)
            C = deepsets_to_kernel(layer)
            back = kernel_to_deepsets(C)
            roundtrip = max(roundtrip, float(np.max(np.abs(deepsets_to_kernel(back).v - C.v))),
                            abs(back.gamma - layer.gamma), abs(back.bias_scalar - layer.bias_scalar))
        X = rng.normal(size=(100, n))
        path = max(path, float(np.max(np.abs(gconv_apply(C, X) - deepsets_apply(layer, X)))))
        if n >= 3:  # every circulant on [2] is S2-invariant
            row = np.zeros(n)
            row[:3] = [3.0, 1.0, 2.0]
            A = symmetric_action(n)
            try:
                kernel_to_deepsets(ConvKernel(np.stack([np.roll(row, i) for i in range(n)]), np.ones(n),
                                              np.zeros(n), A, A))
                rejected.append(False)
            except NotSymmetricInvariant:
                rejected.append(True)
    ok = record(7, roundtrip == 0 and path <= 1e-12 and all(rejected),
                f"roundtrip error {roundtrip:.1e}, path error {path:.1e} (tol 1e-12), circulants rejected "
                f"for n=3..6: {sum(rejected)}/{len(rejected)} (n=2: none exist)", time.perf_counter() - t0, 5)
    assert ok, RESULTS[7]


def test_criterion_08_inapplicable_cases():
    t0 = time.perf_counter()
    got = []
    for cfg, expected in ((invariant_case_config("S3"), StabilizerNotNested),
                          (invariant_case_config("S4"), StabilizerNotNested),
                          (translation_scaling_config(7), NoInvariantMeasure)):
        cfg.fnn.epochs = 0
        try:
            run_experiment(cfg)
            got.append((cfg.label, None))
        except expected as exc:
            got.append((cfg.label, type(exc).__name__ if exc.stage == "validate" else None))
    ok = record(8, all(g for _, g in got), ", ".join(f"{label} -> {g}" for label, g in got),
                time.perf_counter() - t0, 1)
    assert ok, RESULTS[8]


def test_criterion_09_mollifier():
    t0 = time.perf_counter()
    rows = mollifier_sweep(32, (2, 1, 0))
    p = [r["proj2_error"] for r in rows]
    ok = record(9, p[0] > p[1] > p[2] and p[2] <= 1e-10,
                "Z32 proj2 over halfwidths 2,1,0: " + ", ".join(f"{v:.3e}" for v in p),
                time.perf_counter() - t0, 10)
    assert ok, RESULTS[9]


def test_criterion_10_gradient_check():
    rng = np.random.default_rng(10)
    t0 = time.perf_counter()
    worst = 0.0
    kinds = ("tanh", "sigmoid", "leaky_relu", "relu")
    for k in range(20):
        n_in, hidden, n_out = rng.integers(2, 6), rng.integers(2, 8), rng.integers(1, 4)
        mu = rng.uniform(0.5, 2.0, size=n_in)
        phi = random_fnn([n_in, hidden, n_out], rng, kinds[k % 4], measure=mu)
        X, Y = rng.normal(size=(10, n_in)), rng.normal(size=(10, n_out))
        worst = max(worst, check_gradients(phi, X, Y))
    ok = record(10, worst <= 1e-4, f"max relative gradient error {worst:.2e} over 20 models (tol 1e-4)",
                time.perf_counter() - t0, 10)
    assert ok, RESULTS[10]


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
