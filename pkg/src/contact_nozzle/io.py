"""Tab-separated solution, boundary and report files.

Floats are written with 17 significant digits, so a file read back gives
the exact arrays that were written.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import RunConfig, parse_text
from .diagnostics import diagnostic_report, far_field_report
from .driver import Solution, SolveReport
from .errors import SolverError
from .gas import background, density_H, pressure_from
from .geometry import CutDomain, FreeBoundary

SOLUTION_FORMAT = "contact-nozzle-solution 1"
REPORT_FORMAT = "contact-nozzle-report 1"
COLUMNS = ("x1", "x2", "u1", "u2", "rho", "p", "S", "phi", "psi")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _header(lines) -> str:
    return "".join(f"# {k}: {v}\n" for k, v in lines)


def _run_meta(sol: Solution) -> list[tuple[str, str]]:
    r = sol.report
    return [
        ("STATUS", r.status),
        ("failure", r.failure or "none"),
        ("failure_site", r.failure_site or "none"),
        ("outer_cycles", str(r.outer_cycles)),
        ("middle_cycles", str(sum(len(h) for h in r.middle_history))),
        ("inner_iterations", str(r.inner_iterations)),
        ("clamped_nodes", str(r.clamped_nodes)),
        ("sigma", _fmt(r.sigma)),
    ]


def write_solution(out_dir, sol: Solution, cfg: RunConfig) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    P = sol.params
    bg = background(P)
    g = sol.grid
    u1, u2 = sol.velocity()
    try:
        rho = density_H(P, sol.S, (u1, u2), (0.0, 0.0))
        p = pressure_from(P, sol.S, rho)
    except SolverError:
        rho = p = np.full(sol.domain.shape, np.nan)
    phi = P.u0 * g.x1 + sol.phi_hat
    cols = np.column_stack([a.ravel() for a in (g.x1, g.x2, u1, u2, rho, p, sol.S, phi, sol.psi)])
    head = [("format", SOLUTION_FORMAT)]
    head += [(f"config.{k}", v) for k, v in cfg.echo()]
    head += [("grid", f"{sol.domain.L!r} {sol.domain.nx} {sol.domain.ny}")]
    head += _run_meta(sol)
    head += [("lower_state", f"0 0 {_fmt(P.rho_minus)} {_fmt(P.p0)} {_fmt(bg.S0_minus)}")]
    with open(out / "solution.tsv", "w", encoding="utf-8") as fh:
        fh.write(_header(head))
        fh.write("\t".join(COLUMNS) + "\n")
        np.savetxt(fh, cols, fmt="%.17g", delimiter="\t")
    with open(out / "boundary.tsv", "w", encoding="utf-8") as fh:
        fh.write(_header([("format", "contact-nozzle-boundary 1"), ("STATUS", sol.report.status)]))
        fh.write("x1\tf\n")
        np.savetxt(fh, np.column_stack((sol.domain.y1, sol.boundary.f)), fmt="%.17g", delimiter="\t")


def _read_header(path: Path) -> tuple[dict, int]:
    meta, n = {}, 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, val = line[1:].strip().partition(": ")
            meta[key] = val
            n += 1
    return meta, n


def read_solution(sol_dir) -> tuple[Solution, RunConfig]:
    d = Path(sol_dir)
    meta, n_head = _read_header(d / "solution.tsv")
    if meta.get("format") != SOLUTION_FORMAT:
        raise ValueError(f"{d / 'solution.tsv'}: unknown format {meta.get('format')!r}")
    text = "\n".join(f"{k[len('config.'):]} = {v}" for k, v in meta.items() if k.startswith("config."))
    cfg = parse_text(text)
    L, nx, ny = meta["grid"].split()
    domain = CutDomain(float(L), int(nx), int(ny))
    data = np.loadtxt(d / "solution.tsv", skiprows=n_head + 1, delimiter="\t", ndmin=2)
    if data.shape != ((domain.nx + 1) * (domain.ny + 1), len(COLUMNS)):
        raise ValueError(f"{d / 'solution.tsv'}: table shape {data.shape} does not match grid")
    fields = {c: data[:, k].reshape(domain.shape) for k, c in enumerate(COLUMNS)}
    bdata = np.loadtxt(d / "boundary.tsv", comments="#", skiprows=3, delimiter="\t", ndmin=2)
    boundary = FreeBoundary(bdata[:, 1], domain.hx)
    P = cfg.params
    report = SolveReport(status=meta["STATUS"], sigma=float(meta["sigma"]))
    report.failure = "" if meta["failure"] == "none" else meta["failure"]
    report.failure_site = "" if meta["failure_site"] == "none" else meta["failure_site"]
    report.clamped_nodes = int(meta["clamped_nodes"])
    report.outer_history = [float("nan")] * int(meta["outer_cycles"])
    report.middle_history = [[float("nan")] * int(meta["middle_cycles"])]
    report.inner_history = [[float("nan")] * int(meta["inner_iterations"])]
    sol = Solution(P, cfg.profile(), domain, boundary,
                   fields["phi"] - P.u0 * fields["x1"], fields["psi"], fields["S"], report)
    return sol, cfg


def write_report(path, sol: Solution) -> dict:
    """Diagnostics of a solution as key/value lines plus the window table."""
    lines = [f"# format: {REPORT_FORMAT}\n"]
    lines += [f"{k}\t{v}\n" for k, v in _run_meta(sol)]
    try:
        metrics = diagnostic_report(sol)
        far = far_field_report(sol)
        lines += [f"{k}\t{_fmt(v)}\n" for k, v in metrics.items()]
        lines.append("# windows: start end energy u2_sup dp_sup\n")
        lines += ["window\t" + "\t".join(_fmt(x) for x in row) + "\n" for row in far.windows]
    except (SolverError, ValueError, FloatingPointError) as exc:
        metrics = {}
        lines.append(f"diagnostics_error\t{type(exc).__name__}: {exc}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
    return metrics


def write_decay(path, sol: Solution, n_windows: int) -> None:
    far = far_field_report(sol, n_windows)
    lines = [f"# format: contact-nozzle-decay 1\n", f"# windows: {n_windows}\n"]
    for k in ("head_u2", "tail_u2", "head_dp", "tail_dp", "identity_error", "energy_slope"):
        lines.append(f"# {k}: {_fmt(getattr(far, k))}\n")
    tail = max(1, n_windows // 2)
    lines.append(f"# energy_nonincreasing_last_half: {far.energy_nonincreasing(tail)}\n")
    lines.append("start\tend\tenergy\tu2_sup\tdp_sup\n")
    lines += ["\t".join(_fmt(x) for x in row) + "\n" for row in far.windows]
    Path(path).write_text("".join(lines), encoding="utf-8")


def write_sweep(path, result, cfg: RunConfig) -> None:
    lines = [f"# format: contact-nozzle-sweep 1\n"]
    lines += [f"# config.{k}: {v}\n" for k, v in cfg.echo()]
    lines.append(f"# segment: 0 {_fmt(result.segment)}\n")
    for L, s in zip(result.lengths, result.solutions):
        lines.append(f"# STATUS L={L!r}: {s.report.status} outer_cycles={s.report.outer_cycles}\n")
    lines.append("L_a\tL_b\tfield\tsup\tl2\tscale\n")
    for La, Lb, diffs in result.pairs:
        if diffs is None:
            lines.append(f"{La!r}\t{Lb!r}\tfailed\tnan\tnan\tnan\n")
            continue
        for name, d in diffs.items():
            lines.append(f"{La!r}\t{Lb!r}\t{name}\t{_fmt(d['sup'])}\t{_fmt(d['l2'])}\t{_fmt(d['scale'])}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
