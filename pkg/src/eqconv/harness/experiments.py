"""End-to-end runs: fit a generator, convert it, certify the result."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..convert import (
    ConversionProblem,
    ConversionReport,
    certify,
    commutation_errors,
    convert,
    stabilizer_average,
    validate_conditions,
)
from ..deepsets import DeepSetsLayer, deepsets_apply, deepsets_to_kernel, kernel_to_deepsets, symmetric_action
from ..equivariant import GeneratorMap, check_equivariance, g_closure, lift_generator
from ..errors import NotSymmetricInvariant
from ..fnn import AffineLayer, FnnModel, fit_generator
from ..gconv import ConvKernel, check_kernel_invariance, gconv_apply
from .config import ExperimentConfig, activation_of, build_setup

CSV_HEADER = ("stage", "quantity", "value", "tolerance", "pass")
SURROGATE_NOTE = "discretized surrogate"


@dataclass
class Criterion:
    stage: str
    quantity: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)

    def to_dict(self) -> dict:
        return {"stage": self.stage, "quantity": self.quantity, "value": self.value,
                "tolerance": self.tolerance, "pass": self.passed}


@dataclass
class RunReport:
    config: dict
    fit: dict
    conversion: ConversionReport
    equivariance: dict
    criteria: list[Criterion]
    layer_sizes: list[int]
    extra: dict = field(default_factory=dict)
    wall_clock: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_dict(self, timing: bool = True) -> dict:
        doc = {
            "config": self.config,
            "fit": self.fit,
            "conversion": self.conversion.to_dict(),
            "equivariance": self.equivariance,
            "layer_sizes": self.layer_sizes,
            "criteria": [c.to_dict() for c in self.criteria],
            "passed": self.passed,
            **self.extra,
        }
        if timing:
            doc["wall_clock"] = self.wall_clock
        return doc

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True)

    def errors_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for c in self.criteria:
            w.writerow([c.stage, c.quantity, repr(float(c.value)), repr(float(c.tolerance)),
                        "true" if c.passed else "false"])
        return buf.getvalue()

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rj, ec = out / "report.json", out / "errors.csv"
        rj.write_text(self.to_json() + "\n", encoding="utf-8", newline="\n")
        ec.write_text(self.errors_csv(), encoding="utf-8", newline="\n")
        return rj, ec


class _Stage:
    """Times a block and tags escaping errors with the stage name."""

    def __init__(self, name: str, clock: dict):
        self.name, self.clock = name, clock

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.clock[self.name] = time.perf_counter() - self.t0
        if exc is not None and getattr(exc, "stage", None) is None:
            try:
                exc.stage = self.name
            except AttributeError:
                pass
        return False


def _placeholder(cfg: ExperimentConfig, n_in: int, n_out: int, nu) -> FnnModel:
    h = cfg.fnn.hidden
    return FnnModel(
        (AffineLayer(np.zeros((h, n_in)), np.zeros(h), nu), AffineLayer.counting(np.zeros((n_out, h)), np.zeros(n_out))),
        activation_of(cfg.fnn),
    )


def prepare(cfg: ExperimentConfig, clock: dict | None = None):
    """Build the setup and check the construction's hypotheses before any fitting."""
    clock = {} if clock is None else clock
    with _Stage("setup", clock):
        st = build_setup(cfg)
    with _Stage("validate", clock):
        dummy = _placeholder(cfg, st.domain_decomp.action.size, len(st.codomain_decomp.base_space), st.nu)
        validate_conditions(ConversionProblem(dummy, st.domain_decomp, st.codomain_decomp, st.nu))
    return st


def fit_and_convert(cfg: ExperimentConfig, clock: dict | None = None, symmetrize: bool = True):
    """Returns ``(setup, E, fit_result, phi, problem, Phi)``."""
    clock = {} if clock is None else clock
    st = prepare(cfg, clock)
    S = st.domain_decomp.action
    ss = cfg.sample_set
    with _Stage("fit", clock):
        rng = np.random.default_rng(ss.seed)
        E = rng.uniform(ss.low, ss.high, size=(ss.count, S.size))
        if ss.closed:
            E = g_closure(E, S)
        base = list(st.codomain_decomp.base_space)
        Y = st.target(E)[:, base]
        f = cfg.fnn
        fit = fit_generator((E, Y), f.hidden, activation_of(f), f.epochs, f.lr, f.seed, measure=st.nu)
        phi = stabilizer_average(fit.model, st.domain_decomp, st.codomain_decomp) if symmetrize else fit.model
    with _Stage("convert", clock):
        p = ConversionProblem(phi, st.domain_decomp, st.codomain_decomp, st.nu)
        Phi = convert(p, cfg.mollifier_halfwidth)
    return st, E, fit, phi, p, Phi


def run_experiment(cfg: ExperimentConfig, symmetrize: bool = True) -> RunReport:
    """Fit, convert, certify and check equivariance; errors carry a ``stage`` attribute.

    With ``symmetrize`` the fitted network is averaged over the output
    stabilizer before conversion, which makes the restriction identity
    exact when that stabilizer is nontrivial.
    """
    clock: dict = {}
    st, E, fit, phi, p, Phi = fit_and_convert(cfg, clock, symmetrize)
    tol = cfg.tolerances
    base = list(st.codomain_decomp.base_space)
    with _Stage("certify", clock):
        rep = certify(p, Phi, E, st.target, slack=tol.norm2_slack)
        fit_err = float(np.max(np.abs(phi(E) - st.target(E)[:, base])))
        commute = commutation_errors(p, Phi, E[: min(len(E), 64)])
    with _Stage("equivariance", clock):
        kw = dict(trials=cfg.equivariance_trials, seed=cfg.sample_set.seed,
                  low=cfg.sample_set.low, high=cfg.sample_set.high)
        gcnn_viol = check_equivariance(Phi, **kw)
        lift_viol = check_equivariance(lift_generator(GeneratorMap(phi, st.domain_decomp, st.codomain_decomp)), **kw)
        kernel_viol = max(check_kernel_invariance(C) for C in Phi.layers)
    criteria = [
        Criterion("convert", "kernel_invariance", kernel_viol, tol.equivariance),
        Criterion("certify", "proj2_error", rep.proj2_error, tol.proj2),
        Criterion("certify", "full_error", rep.full_error,
                  rep.generator_error + rep.proj2_error + tol.norm2_slack),
        Criterion("equivariance", "gcnn_violation", gcnn_viol, tol.equivariance),
        Criterion("equivariance", "lifted_generator_violation", lift_viol, tol.equivariance),
    ]
    if tol.fit is not None:
        criteria.insert(0, Criterion("fit", "generator_sup_error", fit.sup_error, tol.fit))
    return RunReport(
        config=cfg.to_dict(),
        fit={"sup_error": fit.sup_error, "averaged_sup_error": fit_err, "loss": fit.loss,
             "epochs": fit.epochs, "layer_sizes": fit.model.layer_sizes,
             "converted_layer_sizes": phi.layer_sizes, "stabilizer_averaged": symmetrize},
        conversion=rep,
        equivariance={"gcnn": gcnn_viol, "lifted_generator": lift_viol, "kernel": kernel_viol,
                      "trials": cfg.equivariance_trials},
        criteria=criteria,
        layer_sizes=Phi.layer_sizes,
        extra={"commutation_errors": commute},
        wall_clock=clock,
    )


# ---- discretized continuous groups -------------------------------------------

def _demo_config(group: str, action, measure="counting", **over) -> ExperimentConfig:
    doc = {
        "label": over.pop("label", group),
        "group": group,
        "action": action,
        "measure": measure,
        "target": {"kind": "equivariant-polynomial",
                   "coefficients": {"local": [0.5, 0.0, -0.3], "pooled": [0.1]}},
        "sample_set": {"count": 64, "low": -1.0, "high": 1.0, "seed": 0},
        "fnn": {"hidden": 16, "activation": "tanh", "epochs": 1000, "lr": 0.05, "seed": 0},
        "tolerances": {"proj2": 1e-10, "equivariance": 1e-10, "norm2_slack": 1e-9},
        "equivariance_trials": 20,
    }
    doc.update(over)
    return ExperimentConfig.from_dict(doc)


def discretized_translation_demo(grid_size: int = 32, kernel_halfwidth: int = 0,
                                 cfg: ExperimentConfig | None = None) -> RunReport:
    """Translation on a periodic grid as the cyclic group Z_n acting on itself.

    A positive ``kernel_halfwidth`` replaces the Kronecker delta by a
    triangular mollifier; the report then carries the mollifier error, the
    largest slice-wise commutation error along the forward pass.
    """
    if grid_size < 8:
        raise ValueError("grid_size must be at least 8")
    if kernel_halfwidth < 0:
        raise ValueError("kernel_halfwidth must be non-negative")
    if cfg is None:
        cfg = _demo_config(f"Z{grid_size}", "natural", label=f"translation-Z{grid_size}")
    else:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "group": f"Z{grid_size}", "action": "natural"},
                                         cfg.base_dir)
    cfg.mollifier_halfwidth = kernel_halfwidth
    report = run_experiment(cfg)
    report.extra.update({
        "surrogate": f"{SURROGATE_NOTE}: translation as Z{grid_size} on a periodic grid",
        "mollifier_halfwidth": kernel_halfwidth,
        "mollifier_epsilon": max(report.extra["commutation_errors"]),
    })
    return report


def mollifier_sweep(grid_size: int = 32, halfwidths=(2, 1, 0), cfg: ExperimentConfig | None = None) -> list[dict]:
    """proj2 and mollifier error for each halfwidth, same fitted network throughout."""
    rows = []
    for w in halfwidths:
        r = discretized_translation_demo(grid_size, w, cfg)
        rows.append({"halfwidth": w, "proj2_error": r.conversion.proj2_error,
                     "mollifier_epsilon": r.extra["mollifier_epsilon"]})
    return rows


def rotation_demo(points: int = 8, radii: int = 3) -> RunReport:
    """C_n rotating an n-point circle, repeated over several radii (base space = radii)."""
    cfg = _demo_config(f"C{points}", {"kind": "natural", "copies": radii}, label=f"rotation-C{points}x{radii}")
    report = run_experiment(cfg)
    report.extra["surrogate"] = f"{SURROGATE_NOTE}: rotation as C{points} on {radii} concentric circles"
    return report


def scaling_demo(levels: int = 8, directions: int = 2, ratio: float = 2.0) -> RunReport:
    """Scaling by ``ratio`` on geometric radii ``ratio^k`` (cyclically wrapped), per direction.

    The log-cell masses ``log(b/a)`` of a geometric grid are all equal, so
    the measure is invariant.
    """
    cfg = _demo_config(f"Z{levels}", {"kind": "natural", "copies": directions},
                       measure={"kind": "log-cells", "grid": "geometric", "ratio": ratio},
                       label=f"scaling-Z{levels}x{directions}")
    report = run_experiment(cfg)
    report.extra["surrogate"] = f"{SURROGATE_NOTE}: scaling as Z{levels} on a geometric radial grid"
    return report


def translation_scaling_config(p: int = 7) -> ExperimentConfig:
    """Joint translation and scaling as the affine group of Z_p, with log-cell masses.

    The log-cell masses on the uniform grid are not constant, so no
    invariant measure is available and validation fails.
    """
    return _demo_config(f"Aff{p}", "natural", measure={"kind": "log-cells", "grid": "uniform"},
                        label=f"translation-scaling-Aff{p}")


def invariant_case_config(group: str = "S3") -> ExperimentConfig:
    """Codomain is a single fixed point, so H_T = G."""
    return _demo_config(group, "natural", codomain_action={"kind": "trivial", "size": 1},
                        target={"kind": "coordinate-max"}, label=f"invariant-{group}")


# ---- DeepSets ------------------------------------------------------------------

def deepsets_check(n: int, trials: int = 100, seed: int = 0) -> dict:
    """Roundtrip and path-agreement errors for a random layer on [n], plus the rejection test."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    lam, gam, c = rng.normal(size=3)
    layer = DeepSetsLayer(float(lam), float(gam), float(c), n)
    C = deepsets_to_kernel(layer)
    back = kernel_to_deepsets(C)
    X = rng.normal(size=(trials, n))
    out = {
        "n": n,
        "roundtrip_error": max(abs(back.lam - layer.lam), abs(back.gamma - layer.gamma),
                               abs(back.bias_scalar - layer.bias_scalar)),
        "path_error": float(np.max(np.abs(gconv_apply(C, X) - deepsets_apply(layer, X)))),
        "kernel_invariance": check_kernel_invariance(C),
    }
    if n == 2:
        # every 2x2 circulant is also S2-invariant
        out["circulant_rejected"] = None
    else:
        first_row = np.arange(n, dtype=float) + 1.0
        circ = np.stack([np.roll(first_row, i) for i in range(n)])
        A = symmetric_action(n)
        try:
            kernel_to_deepsets(ConvKernel(circ, np.ones(n), np.zeros(n), A, A))
            out["circulant_rejected"] = False
        except NotSymmetricInvariant:
            out["circulant_rejected"] = True
    return out
