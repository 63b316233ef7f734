"""Command-line entry point: solve, verify, sweep and decay."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .config import parse_config
from .driver import continuation_sweep, solve
from .errors import InvalidProfile, ParseError, SolverError, ValidationError
from .geometry import CutDomain
from .io import read_solution, write_decay, write_report, write_solution, write_sweep

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _solve(args) -> int:
    cfg = parse_config(args.config)
    v = cfg.values
    domain = CutDomain(v["domain.L"], v["domain.nx"], v["domain.ny"])
    t0 = time.perf_counter()
    sol = solve(cfg.params, cfg.profile(), domain, cfg.iteration)
    out = Path(args.out)
    write_solution(out, sol, cfg)
    # Diagnostics come from the written files so verify reproduces them exactly.
    reread, _ = read_solution(out)
    write_report(out / "report.tsv", reread)
    r = sol.report
    print(f"STATUS: {r.status} outer_cycles={r.outer_cycles} "
          f"seconds={time.perf_counter() - t0:.2f}" + (f" failure={r.failure}" if r.failure else ""))
    return EXIT_OK if r.status == "converged" else EXIT_SOLVER


def _verify(args) -> int:
    sol, _ = read_solution(args.solution)
    write_report(Path(args.solution) / "report.tsv", sol)
    print(f"STATUS: {sol.report.status} verified {args.solution}")
    return EXIT_OK if sol.report.status == "converged" else EXIT_SOLVER


def _sweep(args) -> int:
    cfg = parse_config(args.config)
    v = cfg.values
    lengths = cfg.L_list
    if not lengths or len(lengths) < 2:
        raise ValidationError(["domain.L_list with at least two lengths is required for sweep"])
    result = continuation_sweep(cfg.params, cfg.profile(), lengths,
                                v["domain.nx"] / v["domain.L"], v["domain.ny"], cfg.iteration)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep(out / "sweep.tsv", result, cfg)
    bad = [s for s in result.solutions if s.report.status != "converged"]
    print(f"STATUS: {'converged' if not bad else 'partial'} lengths={len(lengths)} failed={len(bad)}")
    return EXIT_OK if not bad else EXIT_SOLVER


def _decay(args) -> int:
    sol, _ = read_solution(args.solution)
    n = args.windows or max(1, int(round(sol.domain.L)))
    write_decay(Path(args.solution) / "decay.tsv", sol, n)
    print(f"STATUS: {sol.report.status} windows={n}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contact-nozzle", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="solve one cut-off nozzle problem")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_solve)
    p = sub.add_parser("verify", help="recompute report.tsv from a solution directory")
    p.add_argument("--solution", required=True)
    p.set_defaults(func=_verify)
    p = sub.add_parser("sweep", help="continuation over domain.L_list")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_sweep)
    p = sub.add_parser("decay", help="far-field window table for a solution")
    p.add_argument("--solution", required=True)
    p.add_argument("--windows", type=int, default=None)
    p.set_defaults(func=_decay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, InvalidProfile) as exc:
        print(f"STATUS: invalid configuration\n{exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"STATUS: {exc.status} {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, ValueError, KeyError) as exc:
        print(f"STATUS: io error {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
