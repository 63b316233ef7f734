"""Linear elliptic solves for the stream function and the potential.

Both problems are discretised by second-order finite differences on the
mapped rectangle.  The mapped operator keeps the cross-derivative and slope
terms produced by the change of variables, so the discrete problem is the
physical one up to O(h^2).  Systems are factorised once per contact curve
and reused across Picard steps.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import SolverDiverged
from .gas import GasParams, background, background_coefficients, momentum_F
from .geometry import MappedGrid

RESIDUAL_TOL = 1e-10


def ellipticity(a11: float, a22: float) -> float:
    """Largest nu with nu I <= diag(a11, a22) <= I / nu."""
    lo, hi = min(a11, a22), max(a11, a22)
    return min(lo, 1.0 / hi)


def smooth_cutoff(x1, L: float) -> np.ndarray:
    """C-infinity step: 1 for x1 <= L/3, 0 for x1 >= 2L/3."""
    t = (np.asarray(x1, dtype=float) - L / 3) / (L / 3)
    t = np.clip(t, 0.0, 1.0)

    def e(s):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)

    return e(1.0 - t) / (e(1.0 - t) + e(t))


class _Triplets:
    def __init__(self, n: int):
        self.n = n
        self.rows, self.cols, self.vals = [], [], []

    def add(self, r, c, v):
        r, c, v = np.broadcast_arrays(np.ravel(r), np.ravel(c), np.ravel(v))
        self.rows.append(r)
        self.cols.append(c)
        self.vals.append(v.astype(float))

    def matrix(self):
        return sparse.csc_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n, self.n))


def _interior(t: _Triplets, idx, hx, hy, c11, c12, c22, c2):
    """c11 V11 + c12 V12 + c22 V22 + c2 V2 at interior nodes."""
    s = (slice(1, -1), slice(1, -1))
    k = idx[s]
    c11, c12, c22, c2 = (np.broadcast_to(c, idx.shape)[s] for c in (c11, c12, c22, c2))
    ny1 = idx.shape[1]
    t.add(k, k, -2 * c11 / hx**2 - 2 * c22 / hy**2)
    t.add(k, k + ny1, c11 / hx**2)
    t.add(k, k - ny1, c11 / hx**2)
    t.add(k, k + 1, c22 / hy**2 + c2 / (2 * hy))
    t.add(k, k - 1, c22 / hy**2 - c2 / (2 * hy))
    q = c12 / (4 * hx * hy)
    t.add(k, k + ny1 + 1, q)
    t.add(k, k - ny1 - 1, q)
    t.add(k, k + ny1 - 1, -q)
    t.add(k, k - ny1 + 1, -q)


def _d1_rows(t: _Triplets, k, step, h, weight, side):
    """weight * one-sided second-order first derivative along ``step``."""
    sgn = 1 if side == "forward" else -1
    t.add(k, k, -3 * sgn * weight / (2 * h))
    t.add(k, k + sgn * step, 4 * sgn * weight / (2 * h))
    t.add(k, k + 2 * sgn * step, -sgn * weight / (2 * h))


def _d1_central(t: _Triplets, k, step, h, weight):
    t.add(k, k + step, weight / (2 * h))
    t.add(k, k - step, -weight / (2 * h))


class _Factor:
    def __init__(self, A):
        self.A = A
        self.lu = splu(A)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x = self.lu.solve(rhs)
        scale = np.linalg.norm(rhs)
        res = np.linalg.norm(self.A @ x - rhs)
        if not np.all(np.isfinite(x)) or res > RESIDUAL_TOL * max(scale, 1e-300) and scale > 0:
            raise SolverDiverged(f"linear residual {res:.3e} relative to {scale:.3e}")
        return x


class EllipticSolvers:
    """Factorised stream-function and potential operators for one grid."""

    def __init__(self, grid: MappedGrid, params: GasParams):
        self.grid = grid
        self.params = params
        self.a11, self.a22 = background_coefficients(params)
        d = grid.domain
        self.idx = np.arange((d.nx + 1) * (d.ny + 1)).reshape(d.shape)
        self._psi = None
        self._phi = None
        x1 = d.y1
        self.eta = smooth_cutoff(x1, d.L)

    # stream function
    def psi_matrix(self):
        g, d, idx = self.grid, self.grid.domain, self.idx
        hx, hy, ny1 = d.hx, d.hy, d.ny + 1
        t = _Triplets(idx.size)
        _interior(t, idx, hx, hy, 1.0, 2 * g.a, g.a**2 + g.b**2, g.a_x1)
        top = idx[:, -1]
        t.add(top, top, 1.0)
        for i, side in ((0, "forward"), (d.nx, "backward")):
            k = idx[i, 1:-1]
            _d1_rows(t, k, ny1, hx, 1.0, side)
            _d1_central(t, k, 1, hy, g.a[i, 1:-1])
        fp = g.boundary.f_prime
        jac = g.jac[:, 0]
        k = idx[:, 0]
        _d1_rows(t, k, 1, hy, (1 + fp**2) / jac, "forward")
        _d1_central(t, k[1:-1], ny1, hx, -fp[1:-1])
        _d1_rows(t, k[:1], ny1, hx, -fp[:1], "forward")
        _d1_rows(t, k[-1:], ny1, hx, -fp[-1:], "backward")
        return t.matrix()

    def solve_psi(self, G_field: np.ndarray, B_trace: np.ndarray) -> np.ndarray:
        """Poisson problem for psi with wall, end and contact conditions."""
        if self._psi is None:
            self._psi = _Factor(self.psi_matrix())
        rhs = np.array(G_field, dtype=float, copy=True)
        rhs[:, -1] = 0.0
        rhs[0, 1:-1] = 0.0
        rhs[-1, 1:-1] = 0.0
        fp = self.grid.boundary.f_prime
        rhs[:, 0] = np.sqrt(1 + fp**2) * B_trace
        return self._psi.solve(rhs.ravel()).reshape(self.grid.shape)

    # potential
    def phi_matrix(self):
        g, d, idx = self.grid, self.grid.domain, self.idx
        a11, a22 = self.a11, self.a22
        t = _Triplets(idx.size)
        _interior(t, idx, d.hx, d.hy, a11, 2 * a11 * g.a,
                  a11 * g.a**2 + a22 * g.b**2, a11 * g.a_x1)
        dirichlet = np.unique(np.concatenate((idx[0], idx[-1], idx[:, 0])))
        t.add(dirichlet, dirichlet, 1.0)
        _d1_rows(t, idx[1:-1, -1], 1, d.hy, 1.0, "backward")
        return t.matrix()

    def lift(self, phi_en_trace: np.ndarray) -> np.ndarray:
        return self.eta[:, None] * np.asarray(phi_en_trace)[None, :]

    def solve_phi(self, F_field: np.ndarray, phi_en_trace: np.ndarray) -> np.ndarray:
        """Potential perturbation with inlet data phi_en, homogenised by the lift."""
        if self._phi is None:
            self._phi = _Factor(self.phi_matrix())
        lift = self.lift(phi_en_trace)
        rhs = np.array(F_field, dtype=float, copy=True)
        rhs[0] = rhs[-1] = 0.0
        rhs[:, 0] = 0.0
        rhs[1:-1, -1] = 0.0
        rhs = rhs.ravel() - self._phi.A @ lift.ravel()
        interior = np.ones(self.grid.shape, dtype=bool)
        interior[0] = interior[-1] = False
        interior[:, 0] = False
        rhs[~interior.ravel()] = 0.0
        hom = self._phi.solve(rhs).reshape(self.grid.shape)
        return hom + lift


def remainder_F(params: GasParams, xi, q, r):
    """Nonlinear remainder of the mass flux about the background.

    ``xi`` is S - S0+, ``q`` the gradient of the potential perturbation and
    ``r`` the gradient of psi.
    """
    bg = background(params)
    a11, a22 = background_coefficients(params)
    u0 = params.u0
    zero = (0.0, 0.0)
    F0 = momentum_F(params, bg.S0_plus, (u0, 0.0), zero)
    Fq = momentum_F(params, bg.S0_plus + np.asarray(xi), (u0 + np.asarray(q[0]), q[1]), r)
    return (-(Fq[0] - F0[0] - a11 * np.asarray(q[0])),
            -(Fq[1] - F0[1] - a22 * np.asarray(q[1])))


def remainder_divergence(grid: MappedGrid, params: GasParams, xi, phi_hat, psi):
    q = grid.grad(phi_hat)
    r = grid.grad(psi)
    F1, F2 = remainder_F(params, xi, q, r)
    return grid.div(F1, F2)
