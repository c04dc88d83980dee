"""Command-line interface: pipeline runs, stage commands and exports.

Exit codes: 0 success, 2 malformed input (bad JSON / bad arguments), 1 any
other failure.  Errors are reported as one JSON object on stderr.  Set
RDNET_LOG=debug|info|warning for progress logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction

from . import estimator, planarity
from .dccp import gradcheck
from .mprsn import build_rsn
from .netcore import (
    Network,
    RdnetError,
    measurements_from_json,
    network_from_json,
    network_to_json,
    to_dot,
)
from .pipeline import PipelineConfig, reconstruct

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2


def _setup_logging():
    level = os.environ.get("RDNET_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(name)s %(levelname)s %(message)s")


def _fail(stage, exc, code=EXIT_ERROR):
    sys.stderr.write(json.dumps({"error": str(exc), "stage": stage}) + "\n")
    return code


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _ParseError(f"{path}: {exc}")


class _ParseError(Exception):
    pass


def _load_measurements(path):
    obj = _load_json(path)
    try:
        return measurements_from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise _ParseError(f"{path}: bad measurement schema: {exc}")


def _write_out(obj, out_path):
    text = json.dumps(obj, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "tol", None) is not None:
        cfg.feas_tol = args.tol
    if getattr(args, "max_iter", None) is not None:
        cfg.ccp_max_outer = args.max_iter
    if getattr(args, "candidate_cap", None) is not None:
        cfg.candidate_cap = args.candidate_cap
    if getattr(args, "stage", None):
        cfg.last_stage = args.stage
    return cfg


def cmd_reconstruct(args):
    ms = _load_measurements(args.measurements)
    result = reconstruct(ms, _config_from_args(args))
    _write_out(result.to_json(), args.out)
    return EXIT_OK


def cmd_estimate(args):
    ms = _load_measurements(args.measurements)
    est = estimator.estimate(ms)
    _write_out({
        "R_hat": [[float(x) for x in row] for row in est.R_hat],
        "estimated_pairs": {f"{i},{j}": v
                            for (i, j), v in est.estimated_pairs(ms).items()},
        "residual": est.residual,
        "min_eig": est.min_eig,
        "worst_violation": est.worst_violation,
        "iterations": est.iterations,
    }, args.out)
    return EXIT_OK


def cmd_stage1(args):
    ms = _load_measurements(args.measurements)
    cfg = _config_from_args(args)
    cfg.last_stage = "stage1"
    result = reconstruct(ms, cfg)
    out = dict(result.artifacts["stage1"])
    out["objective_trace"] = result.artifacts["stage1"]["report"].get("rounds")
    _write_out(out, args.out)
    return EXIT_OK


def cmd_place_interiors(args):
    ms = _load_measurements(args.measurements)
    cfg = _config_from_args(args)
    cfg.last_stage = "interiors"
    result = reconstruct(ms, cfg)
    art = result.artifacts["interiors"]
    if args.format == "dot":
        hat_edges = [tuple(p) for p in art["hat_edges"]]
        n_i = len(art["placement"]["on_edge"]) + len(art["placement"]["dangling"])
        hat_net = Network(ms.n_b, n_i, [(u, v, 1.0) for u, v in hat_edges])
        print(to_dot(hat_net, "hat"))
    else:
        _write_out(art, args.out)
    return EXIT_OK


def cmd_planarize(args):
    obj = _load_json(args.graph)
    try:
        n = int(obj["n"])
        edges = [tuple(e) for e in obj["edges"]]
        protected = [tuple(e) for e in obj.get("protected", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise _ParseError(f"{args.graph}: bad graph schema: {exc}")
    cand = planarity.embed_or_split(n, edges, protected,
                                    cap=args.candidate_cap or 64)
    if args.format == "dot":
        for idx, graph in enumerate(cand.graphs):
            net = Network(n, 0, [(u, v, 1.0) for u, v in graph])
            print(to_dot(net, f"candidate_{idx}"))
    else:
        _write_out({
            "candidates": [[list(p) for p in graph] for graph in cand.graphs],
            "dropped": [[list(p) for p in d] for d in cand.dropped],
            "truncated": cand.truncated,
        }, args.out)
    return EXIT_OK


def cmd_rewire(args):
    ms = _load_measurements(args.measurements)
    cfg = _config_from_args(args)
    cfg.last_stage = "rewire"
    result = reconstruct(ms, cfg)
    _write_out({
        "network": network_to_json(result.network),
        "objectives": result.artifacts["rewire"]["objectives"],
        "selected": result.artifacts["rewire"]["selected"],
        "report": result.artifacts["report"],
    }, args.out)
    return EXIT_OK


def cmd_gradcheck(args):
    report = gradcheck(n=args.n, samples=args.samples, seed=args.seed or 0)
    rows = [f"{name:22s} max rel err {err:.3e}"
            for name, err in report["max_rel_err"].items()]
    print("\n".join(rows))
    print(f"first derivatives nonpositive: {report['first_derivatives_nonpositive']}")
    print("PASS" if report["passed"] else "FAIL")
    return EXIT_OK if report["passed"] else EXIT_ERROR


def cmd_rsn_enum(args):
    gadget = build_rsn(1, 2, args.rmax)
    print(f"component A of a gadget at r_max={args.rmax}:")
    for state, r in gadget.enumerate_component_a():
        label = "inf" if not isinstance(r, Fraction) else f"{r} = {float(r):.4g}"
        print(f"  switches {state} -> {label}")
    finite = [r for _, _, r in gadget.enumerate_gadget() if isinstance(r, Fraction)]
    print(f"full gadget range: [{float(min(finite)):.4g}, {float(max(finite)):.4g}]")
    return EXIT_OK


def cmd_plot(args):
    net = network_from_json(_load_json(args.network))
    print(to_dot(net))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdnet",
        description="Reconstruct circular planar resistor networks from "
                    "partial boundary resistance-distance measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, measurements=True):
        if measurements:
            p.add_argument("--measurements", required=True,
                           help="measurement JSON (see docs/formats.md)")
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol", type=float, default=None,
                       help="constraint feasibility tolerance")
        p.add_argument("--max-iter", dest="max_iter", type=int, default=None,
                       help="outer iteration budget for the DC solver")
        p.add_argument("--candidate-cap", dest="candidate_cap", type=int,
                       default=None)
        p.add_argument("--format", choices=("json", "dot"), default="json")

    p = sub.add_parser("reconstruct", help="run the full pipeline")
    common(p)
    p.add_argument("--stage", choices=("estimate", "stage1", "interiors",
                                       "planarity", "rewire"), default=None,
                   help="stop after this stage")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("estimate", help="estimate unmeasured boundary distances")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("stage1", help="switch optimisation up to Gamma_aux")
    common(p)
    p.set_defaults(func=cmd_stage1)

    p = sub.add_parser("place-interiors", help="relaxed solve and placement")
    common(p)
    p.set_defaults(func=cmd_place_interiors)

    p = sub.add_parser("planarize", help="extract planar candidates from a graph")
    p.add_argument("--graph", required=True,
                   help='JSON {"n": int, "edges": [[u,v],...], "protected": [[u,v],...]}')
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--candidate-cap", dest="candidate_cap", type=int, default=None)
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.set_defaults(func=cmd_planarize)

    p = sub.add_parser("rewire", help="full pipeline with per-candidate table")
    common(p)
    p.set_defaults(func=cmd_rewire)

    p = sub.add_parser("gradcheck", help="finite-difference derivative check")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("rsn-enum", help="enumerate gadget resistances")
    p.add_argument("--rmax", type=float, default=4.0)
    p.set_defaults(func=cmd_rsn_enum)

    p = sub.add_parser("plot", help="DOT export of a network JSON")
    p.add_argument("--network", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except _ParseError as exc:
        return _fail(args.command, exc, EXIT_PARSE)
    except RdnetError as exc:
        return _fail(args.command, exc, EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())
