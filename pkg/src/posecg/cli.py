"""Command line front end: ``posecg solve|gen|check|render``."""

from __future__ import annotations

import argparse
import collections
import json
import logging
import os
import sys
from pathlib import Path

from .instance import InstanceError, body_graph, load_instance, save_instance, upper_body_graph
from .master import InvalidLocalAssignment, InvalidPose
from .oracle import MAX_BRUTE, brute_force_solve, check_solution
from .render import MissingPositions, render_svg
from .solver import SolverConfig, solution_from_dict, solve
from .synthetic import generate_synthetic

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID = 2
EXIT_CAPPED = 3
EXIT_REFUSED = 4

GRAPHS = {
    "body": lambda: body_graph(True),
    "body-tree": lambda: body_graph(False),
    "upper": upper_body_graph,
}


def _config(args) -> SolverConfig:
    return SolverConfig(max_iterations=args.max_iters, tol=args.tol, enable_triples=not args.no_triples,
                        max_bnb_nodes=args.max_nodes, threads=args.threads)


def _load(path: str):
    """Instance or an exit code, with the validation report printed."""
    try:
        return load_instance(path)
    except InstanceError as exc:
        print(f"{path}: invalid instance", file=sys.stderr)
        for code, msg in exc.errors:
            print(f"  {code}: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError) as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (KeyError, TypeError, ValueError) as exc:
        print(f"{path}: malformed instance data ({type(exc).__name__}: {exc})", file=sys.stderr)
        return EXIT_INVALID


def write_json(obj, path) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    if isinstance(inst, int):
        return inst
    if args.omega is not None:
        inst = inst.replace(omega=args.omega)
    sol, report = solve(inst, _config(args))
    out = args.output or str(Path(args.instance).with_suffix("")) + ".solution.json"
    data = sol.to_dict(inst)
    data["report"] = report.to_dict()
    write_json(data, out)
    print(report.summary())
    if report.capped or not report.certified:
        print("warning: a cap was reached; the solution is not certified optimal", file=sys.stderr)
        return EXIT_CAPPED
    return EXIT_OK


def cmd_gen(args) -> int:
    graph = GRAPHS[args.graph]()
    inst = generate_synthetic(args.seed, args.people, args.dup_rate, args.fp_rate, part_graph=graph,
                              omega=args.omega if args.omega is not None else 30.0,
                              max_detections=args.max_detections)
    save_instance(inst, args.output)
    if args.stats:
        counts = collections.Counter(d.part for d in inst.detections)
        print(f"{len(inst)} detections")
        for p in inst.parts:
            print(f"  {p:<12} {counts.get(p, 0)}")
    return EXIT_OK


def cmd_check(args) -> int:
    inst = _load(args.instance)
    if isinstance(inst, int):
        return inst
    if args.omega is not None:
        inst = inst.replace(omega=args.omega)
    if len(inst) > MAX_BRUTE and not args.force:
        print(f"refusing: {len(inst)} detections exceeds the brute-force limit of {MAX_BRUTE} "
              f"(use --force to override)", file=sys.stderr)
        return EXIT_REFUSED
    solver_inst = inst if args.wrong_omega is None else inst.replace(omega=args.wrong_omega)
    sol, _ = solve(solver_inst, _config(args))
    oracle = brute_force_solve(inst, limit=max(MAX_BRUTE, len(inst)))
    problems = check_solution(inst, sol)
    if abs(sol.objective - oracle.objective) > 1e-6:
        problems.insert(0, f"objective mismatch: solver {sol.objective:.10g} != oracle {oracle.objective:.10g}")
    if problems:
        print(f"FAIL ({sol.objective:.10g} vs {oracle.objective:.10g})")
        for p in problems:
            print(f"  {p}")
        return EXIT_MISMATCH
    print(f"PASS ({sol.objective:.10g} = {oracle.objective:.10g})")
    return EXIT_OK


def cmd_render(args) -> int:
    inst = _load(args.instance)
    if isinstance(inst, int):
        return inst
    try:
        with open(args.solution) as f:
            data = json.load(f)
        sol = solution_from_dict(inst, data)
        svg = render_svg(inst, sol)
    except (OSError, json.JSONDecodeError, KeyError, InvalidPose, InvalidLocalAssignment,
            MissingPositions) as exc:
        print(f"cannot render: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    with open(args.output, "w") as f:
        f.write(svg)
    return EXIT_OK


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--omega", type=float, default=None, help="override the per-pose cost")
    p.add_argument("--tol", type=float, default=1e-8, help="reduced-cost tolerance")
    p.add_argument("--max-iters", type=int, default=200, help="generation round cap")
    p.add_argument("--max-nodes", type=int, default=100_000, help="branch-and-bound node cap")
    p.add_argument("--no-triples", action="store_true", help="skip triple row generation")
    p.add_argument("--threads", type=int, default=1, help="pricing worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="posecg", description="Multi-person pose estimation by column generation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("instance")
    p.add_argument("-o", "--output", help="solution path (default: <instance>.solution.json)")
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="write a synthetic instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--people", type=int, default=2)
    p.add_argument("--dup-rate", type=float, default=0.3)
    p.add_argument("--fp-rate", type=float, default=0.1)
    p.add_argument("--max-detections", type=int, default=None)
    p.add_argument("--graph", choices=sorted(GRAPHS), default="body")
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--stats", action="store_true", help="print detection counts per part")
    p.add_argument("-o", "--output", default="instance.json")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check", help="compare the solver against brute force")
    p.add_argument("instance")
    p.add_argument("--force", action="store_true", help="allow more than 8 detections")
    p.add_argument("--wrong-omega", type=float, default=None, help=argparse.SUPPRESS)
    _solver_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("render", help="draw a solution as SVG")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("output")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("POSECG_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
