"""Command-line entry point: ``eqconv <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys

from ..convert import certify
from ..errors import EqconvError
from ..groups import decompose, load_group_json
from .config import ExperimentConfig, build_action, build_group
from .experiments import deepsets_check, discretized_translation_demo, fit_and_convert, run_experiment


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def cmd_decompose(args) -> int:
    cfg = ExperimentConfig(group=args.group, action=args.action)
    G, json_action = build_group(cfg)
    spec = args.action
    if spec.endswith(".json"):
        spec = {"path": spec}
    elif spec.startswith("{"):
        spec = json.loads(spec)
    elif json_action is not None and spec == "natural":
        spec = "json"
    D = decompose(build_action(G, spec, cfg, json_action))
    _emit({
        "group": G.label,
        "order": G.order,
        "index_set_size": D.action.size,
        "base_space": list(D.base_space),
        "projection": D.projection.tolist(),
        "section": D.section.tolist(),
        "stabilizer": list(D.stabilizer),
        "quotient_size": D.quotient_size,
    })
    return 0


def cmd_convert(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    _, _, fit, phi, p, Phi = fit_and_convert(cfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(Phi.dumps())
    _emit({"fit_sup_error": fit.sup_error, "fnn_layer_sizes": phi.layer_sizes,
           "gcnn_layer_sizes": Phi.layer_sizes, "lift_subgroup_order": len(p.lift_subgroup)})
    return 0


def cmd_certify(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    st, E, _, _, p, Phi = fit_and_convert(cfg)
    rep = certify(p, Phi, E, st.target, slack=cfg.tolerances.norm2_slack)
    _emit(rep.to_dict())
    return 0 if rep.norm2_bound_ok else 1


def cmd_deepsets(args) -> int:
    doc = deepsets_check(args.n)
    _emit(doc)
    ok = doc["roundtrip_error"] == 0 and doc["path_error"] <= 1e-12 and doc["circulant_rejected"] is not False
    return 0 if ok else 1


def cmd_demo_translation(args) -> int:
    report = discretized_translation_demo(args.grid, args.halfwidth)
    if args.out:
        report.write(args.out)
    _emit(report.to_dict(timing=False))
    return 0


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    report = run_experiment(cfg)
    rj, ec = report.write(args.out)
    print(f"wrote {rj} and {ec}")
    for c in report.criteria:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.stage}/{c.quantity}: {c.value:.3e} <= {c.tolerance:.3e}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eqconv", description="Convert FNN generators into group CNNs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="orbit decomposition of a group action")
    p.add_argument("--group", required=True, help="builtin name (S3, Z8, D4, Aff7, ...) or JSON path")
    p.add_argument("--action", default="natural", help="natural, regular, trivial, JSON path or JSON object")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("convert", help="fit and convert; print layer sizes")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="write the converted network as JSON")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("certify", help="fit, convert and print the error chain")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("deepsets-check", help="DeepSets <-> S_n kernel checks")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_deepsets)

    p = sub.add_parser("demo-translation", help="cyclic translation demo on a periodic grid")
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--halfwidth", type=int, default=0)
    p.add_argument("--out", help="also write report.json and errors.csv here")
    p.set_defaults(func=cmd_demo_translation)

    p = sub.add_parser("run", help="full run writing report.json and errors.csv")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EqconvError, ValueError, OSError, KeyError) as exc:
        stage = getattr(exc, "stage", None)
        where = f" [{stage}]" if stage else ""
        print(f"error{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
