"""Batch driver: solve / refine / verify / baire / macneille / checkrange.

Exit codes: 0 success, 1 usage or parse errors, 2 method failure (range
condition rejected, certified inequality violated, bracketing or radius
breakdown), so CI can tell "tool misused" from "method failed".
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import baire, macneille, pde, solver
from .grids import read_grid_function, write_grid_function

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_METHOD = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ordersolve", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("solve", help="build and audit a one-sided subsolution")
    p.add_argument("--problem", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--side", choices=("lower", "upper"), required=True)
    p.add_argument("--samples-per-box", type=int, default=2000)
    p.add_argument("--margin-fraction", type=float, default=0.1)
    add_common(p)

    p = sub.add_parser("refine", help="halving-eps sequence of solution pairs")
    p.add_argument("--problem", required=True)
    p.add_argument("--eps0", type=float, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--grid-resolution", type=int, default=129)
    p.add_argument("--samples-per-box", type=int, default=2000)
    add_common(p)

    p = sub.add_parser("verify", help="re-audit a stored solution file")
    p.add_argument("--problem", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--samples-per-box", type=int, default=2000)
    add_common(p)

    p = sub.add_parser("baire", help="graph-complete a grid function file")
    p.add_argument("--grid", required=True)
    p.add_argument("--eps-list", default="1.0,0.5,0.25,0.1")
    add_common(p)

    p = sub.add_parser("macneille", help="complete a finite poset by cuts")
    p.add_argument("--poset", required=True)
    p.add_argument("--check-bounds", action="store_true")
    add_common(p)

    p = sub.add_parser("checkrange", help="test the right-hand side against the attainable operator range")
    p.add_argument("--problem", required=True)
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--budget", type=int, default=8)
    add_common(p)

    return parser


def _cmd_solve(args) -> int:
    problem = pde.read_problem(args.problem)
    try:
        solution = solver.assemble_global(
            problem,
            args.eps,
            args.side,
            margin_fraction=args.margin_fraction,
            seed=args.seed,
        )
    except (solver.JetBracketError, solver.PatchRadiusError, solver.AssemblyDepthError) as exc:
        print(f"method failure: {exc}", file=sys.stderr)
        return EXIT_METHOD
    report = solver.verify_certificate(problem, solution, args.samples_per_box, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tag = f"{args.side}_eps{args.eps:g}"
    solver.write_solution(solution, out / f"solution_{tag}.txt")
    (out / f"certificate_{tag}.txt").write_text(report.to_text(), encoding="utf-8")
    print(
        f"{solution.box_count()} boxes, residual range "
        f"[{report.residual_min!r}, {report.residual_max!r}], "
        f"{len(report.violations)} violations"
    )
    return EXIT_OK if report.passed else EXIT_METHOD


def _cmd_refine(args) -> int:
    problem = pde.read_problem(args.problem)
    try:
        run = solver.refine(
            problem,
            args.eps0,
            args.levels,
            base_resolution=args.grid_resolution,
            samples_per_box=args.samples_per_box,
            seed=args.seed,
        )
    except (solver.JetBracketError, solver.PatchRadiusError, solver.AssemblyDepthError) as exc:
        print(f"method failure: {exc}", file=sys.stderr)
        return EXIT_METHOD
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_text = run.to_csv()
    (out / "refinement.csv").write_text(csv_text, encoding="utf-8")
    sys.stdout.write(csv_text)
    ok = all(
        lv.lower_report.passed and lv.upper_report.passed and lv.residual_envelopes_h_continuous
        for lv in run.levels
    )
    return EXIT_OK if ok else EXIT_METHOD


def _cmd_verify(args) -> int:
    problem = pde.read_problem(args.problem)
    solution = solver.read_solution(args.solution)
    report = solver.verify_certificate(problem, solution, args.samples_per_box, seed=args.seed)
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.passed else EXIT_METHOD


def _cmd_baire(args) -> int:
    f = read_grid_function(args.grid)
    eps_list = [float(v) for v in args.eps_list.split(",") if v.strip()]
    completed = baire.graph_completion(f)
    report = baire.discontinuity_report(completed, eps_list)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_grid_function(completed, out / "completed.grid")
    (out / "discontinuity_report.txt").write_text(report.to_text(), encoding="utf-8")
    sys.stdout.write(report.to_text())
    ok = report.all_nowhere_dense() and report.all_closed()
    return EXIT_OK if ok else EXIT_METHOD


def _cmd_macneille(args) -> int:
    poset = macneille.read_poset(args.poset)
    lattice = macneille.macneille_complete(poset)
    print(f"{len(poset)} elements, {len(lattice)} cuts")
    if lattice.adjoined_bottom:
        print("bottom cut adjoined by completion")
    if lattice.adjoined_top:
        print("top cut adjoined by completion")
    dot = macneille.lattice_to_dot(lattice)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "lattice.dot").write_text(dot, encoding="utf-8")
    sys.stdout.write(dot)
    if args.check_bounds:
        ok = macneille.preserves_bounds_check(poset, lattice)
        print(f"bounds preserved: {'yes' if ok else 'NO'}")
        if not ok:
            return EXIT_METHOD
    return EXIT_OK


def _cmd_checkrange(args) -> int:
    problem = pde.read_problem(args.problem)
    per_axis = max(2, round(args.points ** (1.0 / problem.dims)))
    points = pde.probe_lattice(problem.domain, per_axis)
    verdicts = pde.check_range_interior(problem, points, budget=args.budget, seed=args.seed)
    failures = 0
    for v in verdicts:
        status = "ok" if v.holds else "REJECTED"
        flags = []
        if v.enclosure.lo_unbounded:
            flags.append("lo-unbounded")
        if v.enclosure.hi_unbounded:
            flags.append("hi-unbounded")
        extra = f" ({', '.join(flags)})" if flags else ""
        print(
            f"x={tuple(round(c, 6) for c in v.point)} f={v.rhs_value:.6g} "
            f"range=[{v.enclosure.lo:.6g}, {v.enclosure.hi:.6g}]{extra}: {status}"
        )
        failures += 0 if v.holds else 1
    print(f"{len(verdicts) - failures}/{len(verdicts)} probe points pass")
    return EXIT_OK if failures == 0 else EXIT_METHOD


_COMMANDS = {
    "solve": _cmd_solve,
    "refine": _cmd_refine,
    "verify": _cmd_verify,
    "baire": _cmd_baire,
    "macneille": _cmd_macneille,
    "checkrange": _cmd_checkrange,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (
        pde.ProblemFileError,
        macneille.PosetError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
