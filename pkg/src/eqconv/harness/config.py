"""Experiment configuration and the objects it describes.

A config is a JSON document::

    {
      "label": "s4-max",
      "group": "S4",                          # or {"path": "group.json"}
      "action": "natural",                    # natural | regular | trivial | {"kind": ..., "copies": m} | {"path": ...}
      "codomain_action": null,                # defaults to "action"
      "measure": "counting",                  # or {"kind": "log-cells", "grid": "uniform"|"geometric", "ratio": q}
      "target": {"kind": "coordinate-max"},
      "sample_set": {"count": 512, "low": 0.0, "high": 1.0, "seed": 0, "closed": false},
      "fnn": {"hidden": 64, "activation": "tanh", "epochs": 10000, "lr": 0.1, "seed": 0},
      "tolerances": {"proj2": 1e-10, "equivariance": 1e-10, "norm2_slack": 1e-9, "fit": 0.05}
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..equivariant import EquivariantMap, GeneratorMap, lift_generator
from ..fnn import Activation, FnnModel
from ..groups import (
    ActionDecomposition,
    FiniteGroup,
    GroupAction,
    builtin_group,
    decompose,
    load_group_json,
    natural_action,
    product_action,
    regular_action,
    trivial_action,
)
from ..signal import as_measure

TARGETS = ("identity", "coordinate-max", "equivariant-polynomial", "custom-lifted-generator")


@dataclass
class SampleSpec:
    count: int = 256
    low: float = 0.0
    high: float = 1.0
    seed: int = 0
    closed: bool = False  # replace E by its G-closure before fitting


@dataclass
class FnnSpec:
    hidden: int = 32
    activation: str = "tanh"
    epochs: int = 2000
    lr: float = 0.05
    seed: int = 0


@dataclass
class Tolerances:
    proj2: float = 1e-10
    equivariance: float = 1e-10
    norm2_slack: float = 1e-9
    fit: float | None = None


@dataclass
class ExperimentConfig:
    group: str | dict = "S3"
    action: str | dict = "natural"
    target: dict = field(default_factory=lambda: {"kind": "coordinate-max"})
    sample_set: SampleSpec = field(default_factory=SampleSpec)
    fnn: FnnSpec = field(default_factory=FnnSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    codomain_action: str | dict | None = None
    measure: str | dict | list = "counting"
    label: str = ""
    mollifier_halfwidth: int = 0
    equivariance_trials: int = 50
    base_dir: str = "."  # resolves relative paths inside the config

    def __post_init__(self):
        if isinstance(self.sample_set, dict):
            self.sample_set = SampleSpec(**self.sample_set)
        if isinstance(self.fnn, dict):
            self.fnn = FnnSpec(**self.fnn)
        if isinstance(self.tolerances, dict):
            self.tolerances = Tolerances(**self.tolerances)
        if isinstance(self.target, str):
            self.target = {"kind": self.target}
        if self.target.get("kind") not in TARGETS:
            raise ValueError(f"unknown target {self.target.get('kind')!r}; choose from {TARGETS}")
        if self.sample_set.count < 1 or self.fnn.hidden < 1 or self.fnn.epochs < 0:
            raise ValueError("sample count and hidden width must be positive")
        tol = self.tolerances
        for name in ("proj2", "equivariance", "norm2_slack"):
            if getattr(tol, name) <= 0:
                raise ValueError(f"tolerance {name} must be positive")
        if tol.fit is not None and tol.fit <= 0:
            raise ValueError("tolerance fit must be positive")
        if self.mollifier_halfwidth < 0:
            raise ValueError("mollifier halfwidth must be non-negative")

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> ExperimentConfig:
        doc = dict(doc)
        doc.setdefault("base_dir", str(base_dir))
        return cls(**doc)

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), base_dir=path.parent)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("base_dir")
        return doc

    def _path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p


def build_group(cfg: ExperimentConfig) -> tuple[FiniteGroup, GroupAction | None]:
    spec = cfg.group
    if isinstance(spec, str):
        if spec.endswith(".json"):
            return load_group_json(cfg._path(spec))
        return builtin_group(spec), None
    if "path" in spec:
        return load_group_json(cfg._path(spec["path"]))
    return builtin_group(spec["name"]), None


def build_action(G: FiniteGroup, spec, cfg: ExperimentConfig, json_action: GroupAction | None) -> GroupAction:
    if spec is None or spec == "json":
        if json_action is None:
            raise ValueError("the group document carries no act_table")
        return json_action
    if isinstance(spec, str):
        spec = {"kind": spec}
    if "path" in spec:
        _, A = load_group_json(cfg._path(spec["path"]))
        if A is None or A.group.order != G.order or not np.array_equal(A.group.compose_table, G.compose_table):
            raise ValueError("action document does not match the configured group")
        return GroupAction(G, A.act_table)
    kind = spec["kind"]
    if kind == "natural":
        A = natural_action(G)
    elif kind == "regular":
        A = regular_action(G)
    elif kind == "trivial":
        return trivial_action(G, spec.get("size", 1))
    else:
        raise ValueError(f"unknown action kind {kind!r}")
    copies = spec.get("copies", 1)
    return product_action(A, copies) if copies > 1 else A


def build_measure(spec, A: GroupAction, copies: int = 1) -> np.ndarray:
    """Point masses on A's index set.

    ``log-cells`` gives each grid point the mass ``log(b/a)`` of its cell
    ``[a, b]``: on a uniform grid ``x_k = k + 1`` the cells are
    ``[k + 1/2, k + 3/2]``, on a geometric grid ``x_k = q^k`` they are
    ``[q^(k - 1/2), q^(k + 1/2)]``.  With ``copies`` the radial index is
    ``i // copies``.
    """
    if isinstance(spec, list):
        return as_measure(spec, A.size)
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec["kind"]
    if kind == "counting":
        return np.ones(A.size)
    if kind == "explicit":
        return as_measure(spec["masses"], A.size)
    if kind == "log-cells":
        k = np.arange(A.size) // copies
        if spec.get("grid", "uniform") == "geometric":
            return np.full(A.size, np.log(float(spec.get("ratio", 2.0))))
        return np.log((k + 1.5) / (k + 0.5))
    raise ValueError(f"unknown measure kind {kind!r}")


def build_target(cfg: ExperimentConfig, D_S: ActionDecomposition, D_T: ActionDecomposition) -> EquivariantMap:
    spec = cfg.target
    kind = spec["kind"]
    S, T = D_S.action, D_T.action
    if kind == "coordinate-max":
        return EquivariantMap(lambda x: np.repeat(x.max(axis=-1, keepdims=True), T.size, axis=-1), S, T, 1.0)
    if kind == "custom-lifted-generator":
        phi = FnnModel.load(cfg._path(spec["path"]))
        return lift_generator(GeneratorMap(phi, D_S, D_T))
    if not np.array_equal(S.act_table, T.act_table):
        raise ValueError(f"target {kind!r} needs identical domain and codomain actions")
    if kind == "identity":
        return EquivariantMap(lambda x: x.copy(), S, T, 1.0)
    coeffs = spec.get("coefficients", {"local": [0.0, 1.0]})
    if isinstance(coeffs, list):
        coeffs = {"local": coeffs}
    local = np.asarray(coeffs.get("local", []), dtype=float)
    pooled = np.asarray(coeffs.get("pooled", []), dtype=float)

    def poly(x):
        out = np.zeros_like(x)
        for k, a in enumerate(local, start=1):
            out = out + a * x**k
        for k, c in enumerate(pooled, start=1):
            out = out + c * (x**k).sum(axis=-1, keepdims=True)
        return out

    return EquivariantMap(poly, S, T)


@dataclass
class Setup:
    group: FiniteGroup
    domain_decomp: ActionDecomposition
    codomain_decomp: ActionDecomposition
    nu: np.ndarray
    target: EquivariantMap | None = None


def build_setup(cfg: ExperimentConfig, with_target: bool = True) -> Setup:
    G, json_action = build_group(cfg)
    action_spec = cfg.action
    if json_action is not None and action_spec in ("natural", None):
        action_spec = "json"
    S = build_action(G, action_spec, cfg, json_action)
    cod_spec = cfg.codomain_action if cfg.codomain_action is not None else action_spec
    T = S if cod_spec == action_spec else build_action(G, cod_spec, cfg, json_action)
    D_S, D_T = decompose(S), decompose(T)
    copies = action_spec.get("copies", 1) if isinstance(action_spec, dict) else 1
    nu = build_measure(cfg.measure, S, copies)
    setup = Setup(G, D_S, D_T, nu)
    if with_target:
        setup.target = build_target(cfg, D_S, D_T)
    return setup


def activation_of(spec: FnnSpec) -> Activation:
    return Activation.parse(spec.activation)
