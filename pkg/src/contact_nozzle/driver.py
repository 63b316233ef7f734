"""Nested fixed-point iteration and domain continuation.

Innermost: Picard on (phi_hat, psi) with the curve and entropy frozen.
Middle: the contact curve from mass-flux conservation.
Outer: entropy transported along the streamlines of the current flow.
Each outer cycle updates potentials, then the curve, then the entropy.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .elliptic import EllipticSolvers, remainder_divergence
from .errors import CapReached, GuardViolated, SolverError
from .free_boundary import update_boundary
from .gas import (GasParams, background, contact_neumann_A, density_H, pressure_from,
                  sound_speed, vorticity_source_G)
from .geometry import (CutDomain, EntropyField, FreeBoundary, MappedGrid,
                       compare_on_common_domain)
from .inlet import InletProfile, inlet_potential_trace, perturbation_size
from .transport import transport_step


@dataclass(frozen=True)
class IterationConfig:
    tol_inner: float = 1e-8
    tol_middle: float = 1e-8
    tol_outer: float = 1e-8
    max_inner: int = 50
    max_middle: int = 50
    max_outer: int = 30
    theta: float = 1.0

    def violations(self) -> list[str]:
        out = []
        for name in ("tol_inner", "tol_middle", "tol_outer"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0")
        for name in ("max_inner", "max_middle", "max_outer"):
            if getattr(self, name) < 1:
                out.append(f"{name} must be >= 1")
        if not 0 < self.theta <= 1:
            out.append("theta must lie in (0, 1]")
        return out


@dataclass
class SolveReport:
    status: str = "running"
    failure: str = ""
    failure_site: str = ""
    inner_history: list = field(default_factory=list)
    middle_history: list = field(default_factory=list)
    outer_history: list = field(default_factory=list)
    contraction: list = field(default_factory=list)
    clamped_nodes: int = 0
    sigma: float = 0.0
    norms: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def outer_cycles(self) -> int:
        return len(self.outer_history)

    @property
    def inner_iterations(self) -> int:
        return sum(len(h) for h in self.inner_history)


@dataclass
class Solution:
    params: GasParams
    profile: InletProfile
    domain: CutDomain
    boundary: FreeBoundary
    phi_hat: np.ndarray
    psi: np.ndarray
    S: np.ndarray
    report: SolveReport

    @property
    def grid(self) -> MappedGrid:
        if not hasattr(self, "_grid"):
            self._grid = MappedGrid(self.domain, self.boundary)
        return self._grid

    def velocity(self):
        return flow_velocity(self.grid, self.params, self.phi_hat, self.psi)


def flow_velocity(grid: MappedGrid, params: GasParams, phi_hat, psi):
    """u = grad(phi0 + phi_hat) + perp grad(psi)."""
    q1, q2 = grid.grad(phi_hat)
    r1, r2 = grid.grad(psi)
    return params.u0 + q1 + r2, q2 - r1


def mass_flux(grid: MappedGrid, params: GasParams, S, phi_hat, psi):
    u1, u2 = flow_velocity(grid, params, phi_hat, psi)
    rho = density_H(params, S, (u1, u2), (0.0, 0.0))
    return rho * u1, rho * u2


def _relative_change(new: tuple, old: tuple, floor: float) -> float:
    num = max(float(np.max(np.abs(a - b))) for a, b in zip(new, old))
    den = max(floor, max(float(np.max(np.abs(a))) for a in new))
    return num / den


def check_margins(grid: MappedGrid, params: GasParams, S, phi_hat, psi) -> None:
    """Density and subsonicity margins: rho >= rho0/2 and c - |u| >= (c0 - u0)/2."""
    bg = background(params)
    u1, u2 = flow_velocity(grid, params, phi_hat, psi)
    rho = density_H(params, S, (u1, u2), (0.0, 0.0))
    gap = sound_speed(params, rho, pressure_from(params, S, rho)) - np.hypot(u1, u2)
    if float(rho.min()) < 0.5 * params.rho_plus:
        raise GuardViolated(f"density {float(rho.min()):.4g} below half the background")
    if float(gap.min()) < 0.5 * (bg.c0 - params.u0):
        raise GuardViolated(f"subsonic gap {float(gap.min()):.4g} below half the background gap")


def inner_picard(solvers: EllipticSolvers, S: np.ndarray, phi_en: np.ndarray,
                 phi_hat: np.ndarray, psi: np.ndarray, cfg: IterationConfig,
                 history: Optional[list] = None):
    """Picard iteration on (phi_hat, psi) for a frozen curve and entropy.

    Returns the converged pair and the last measured contraction ratio.
    """
    grid, params = solvers.grid, solvers.params
    S0 = background(params).S0_plus
    eta = grid.grad(S)[1]
    xi = S - S0
    B = contact_neumann_A(params, grid.boundary.f_prime, S[:, 0])
    history = [] if history is None else history
    ratio = 0.0
    for _ in range(cfg.max_inner):
        q1, q2 = grid.grad(phi_hat)
        r = grid.grad(psi)
        G = vorticity_source_G(params, S, eta, (params.u0 + q1, q2), r)
        psi_new = solvers.solve_psi(G, B)
        F = remainder_divergence(grid, params, xi, phi_hat, psi_new)
        phi_new = solvers.solve_phi(F, phi_en)
        change = _relative_change((phi_new, psi_new), (phi_hat, psi), params.u0)
        if history:
            ratio = change / history[-1] if history[-1] > 0 else 0.0
        history.append(change)
        phi_hat, psi = phi_new, psi_new
        if change <= cfg.tol_inner:
            return phi_hat, psi, ratio
    raise CapReached(f"inner Picard did not reach {cfg.tol_inner:g} in {cfg.max_inner} steps")


def middle_boundary_loop(params: GasParams, domain: CutDomain, entropy: EntropyField,
                         phi_en_fn, boundary: FreeBoundary, phi_hat, psi,
                         cfg: IterationConfig, report: SolveReport):
    """Alternate Picard solves and curve updates until the curve settles.

    Returns the curve that produced the final fields, the fields, and the
    entropy sampled on that curve's grid.
    """
    history = []
    report.middle_history.append(history)
    for _ in range(cfg.max_middle):
        grid = MappedGrid(domain, boundary)
        solvers = EllipticSolvers(grid, params)
        S = entropy.sample(grid)
        inner = []
        report.inner_history.append(inner)
        phi_hat, psi, ratio = inner_picard(solvers, S, phi_en_fn, phi_hat, psi, cfg, inner)
        report.contraction.append(ratio)
        rho_u = mass_flux(grid, params, S, phi_hat, psi)
        new = update_boundary(grid, rho_u, params, cfg.theta)
        change = float(np.max(np.abs(new.f - boundary.f)))
        history.append(change)
        if change <= cfg.tol_middle:
            return boundary, grid, phi_hat, psi, S
        boundary = new
    raise CapReached(f"free boundary did not settle to {cfg.tol_middle:g} in {cfg.max_middle} cycles")


def outer_entropy_loop(params: GasParams, profile: InletProfile, domain: CutDomain,
                       cfg: IterationConfig, initial_f: Optional[np.ndarray] = None) -> Solution:
    """Full solve on one cut-off domain; failures are recorded, not raised."""
    t0 = time.perf_counter()
    bg = background(params)
    report = SolveReport(sigma=perturbation_size(profile))
    boundary = (FreeBoundary.flat(domain) if initial_f is None
                else FreeBoundary(np.asarray(initial_f, dtype=float), domain.hx))
    phi_en = inlet_potential_trace(profile, domain.y2)
    phi_en[0] = 0.0
    grid = MappedGrid(domain, boundary)
    dev0 = np.broadcast_to(profile.ds_en(domain.y2)[None, :], domain.shape).copy()
    entropy = EntropyField(boundary, dev0, bg.S0_plus, domain)
    phi_hat = np.zeros(domain.shape)
    psi = np.zeros(domain.shape)
    S = entropy.sample(grid)
    site = "outer"
    try:
        for _ in range(cfg.max_outer):
            site = "middle"
            boundary, grid, phi_hat, psi, S = middle_boundary_loop(
                params, domain, entropy, phi_en, boundary, phi_hat, psi, cfg, report)
            site = "transport"
            rho_u1, _ = mass_flux(grid, params, S, phi_hat, psi)
            dev, clamped = transport_step(grid, rho_u1, profile, params)
            report.clamped_nodes += clamped
            change = float(np.max(np.abs(bg.S0_plus + dev - S))) / bg.S0_plus
            report.outer_history.append(change)
            entropy = EntropyField(boundary, dev, bg.S0_plus, domain)
            site = "outer"
            if change <= cfg.tol_outer:
                S = entropy.values()
                site = "margins"
                check_margins(grid, params, S, phi_hat, psi)
                report.status = "converged"
                break
        else:
            raise CapReached(f"entropy did not settle to {cfg.tol_outer:g} in {cfg.max_outer} cycles")
    except SolverError as exc:
        report.status = exc.status
        report.failure = f"{type(exc).__name__}: {exc}"
        report.failure_site = site
    # Round phi_hat through the stored total potential so files reproduce it bitwise.
    x1 = MappedGrid(domain, boundary).x1
    phi_hat = (params.u0 * x1 + phi_hat) - params.u0 * x1
    sol = Solution(params, profile, domain, boundary, phi_hat, psi, S, report)
    report.norms = solution_norms(sol)
    report.seconds = time.perf_counter() - t0
    return sol


def solution_norms(sol: Solution) -> dict:
    bg = background(sol.params)
    try:
        u1, u2 = sol.velocity()
        du = float(np.max(np.hypot(u1 - sol.params.u0, u2)))
    except (FloatingPointError, ValueError):
        du = float("nan")
    return {
        "f": sol.boundary.sup(),
        "phi_hat": float(np.max(np.abs(sol.phi_hat))),
        "psi": float(np.max(np.abs(sol.psi))),
        "S_dev": float(np.max(np.abs(sol.S - bg.S0_plus))),
        "u_dev": du,
    }


def solve(params: GasParams, profile: InletProfile, domain: CutDomain,
          cfg: Optional[IterationConfig] = None, initial_f=None) -> Solution:
    return outer_entropy_loop(params, profile, domain, cfg or IterationConfig(), initial_f)


@dataclass
class SweepResult:
    lengths: list
    solutions: list
    pairs: list  # (L_a, L_b, {field: {"sup", "l2", "scale"}})
    segment: float

    def difference(self, La: float, Lb: float, name: str) -> float:
        """Sup difference of one field between two lengths, relative to its scale."""
        for a, b, diffs in self.pairs:
            if (a, b) == (La, Lb) and diffs is not None:
                d = diffs[name]
                return d["sup"] / d["scale"] if d["scale"] > 0 else d["sup"]
        return float("nan")

    def cauchy_trend(self, floor: float = 1e-8) -> bool:
        """Differences to the longest run shrink as the shorter length grows.

        Differences below ``floor`` (relative) count as converged.
        """
        L = self.lengths
        names = next((d for _, _, d in self.pairs if d is not None), None)
        if len(L) < 3 or names is None:
            return False
        for k in range(len(L) - 2):
            for name in names:
                near = self.difference(L[k + 1], L[-1], name)
                far = self.difference(L[k], L[-1], name)
                if not (near <= max(far, floor)):
                    return False
        return True


def sweep_thread_count(n_jobs: int) -> int:
    env = os.environ.get("NOZZLE_THREADS")
    cap = int(env) if env and env.isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(cap, n_jobs))


def continuation_sweep(params: GasParams, profile: InletProfile, lengths, nx_per_length: float,
                       ny: int, cfg: Optional[IterationConfig] = None,
                       threads: Optional[int] = None) -> SweepResult:
    """Solve on each length with a fixed axial spacing and compare on [0, L_min/2]."""
    lengths = sorted(float(L) for L in lengths)
    if len(lengths) < 2:
        raise ValueError("a sweep needs at least two lengths")
    cfg = cfg or IterationConfig()
    domains = [CutDomain(L, max(8, int(round(nx_per_length * L))), ny) for L in lengths]
    workers = threads or sweep_thread_count(len(domains))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        sols = list(pool.map(lambda d: solve(params, profile, d, cfg), domains))
    segment = lengths[0] / 2
    S0 = background(params).S0_plus
    pairs = []
    for a in range(len(sols)):
        for b in range(a + 1, len(sols)):
            sa, sb = sols[a], sols[b]
            if sa.report.status != "converged" or sb.report.status != "converged":
                pairs.append((lengths[a], lengths[b], None))
                continue
            diffs = compare_on_common_domain(
                sa.grid, {"phi_hat": sa.phi_hat, "psi": sa.psi, "S": sa.S - S0},
                sb.grid, {"phi_hat": sb.phi_hat, "psi": sb.psi, "S": sb.S - S0}, segment)
            pairs.append((lengths[a], lengths[b], diffs))
    return SweepResult(lengths, sols, pairs, segment)
