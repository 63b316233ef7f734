"""Cut-off nozzle geometry on the mapped rectangle.

The upper region {0 < x1 < L, f(x1) < x2 < 1} is carried to [0, L] x [0, 1]
by y2 = (x2 - f) / (1 - f).  Every grid function lives on the rectangle nodes
(y1_i, y2_j) and is stored as an array indexed ``[i, j]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .errors import CompatibilityViolated, DegenerateBoundary

# Coefficients of the C^2 reflection of the entropy below the contact.
EXTENSION_COEFFS = (6.0, -32.0, 27.0)


@dataclass(frozen=True)
class CutDomain:
    L: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.nx < 8 or self.ny < 8:
            raise ValueError("nx and ny must be at least 8")

    @property
    def hx(self) -> float:
        return self.L / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    @cached_property
    def y1(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.nx + 1)

    @cached_property
    def y2(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.ny + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nx + 1, self.ny + 1


def _first_derivative(f: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(f)
    d[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def _second_derivative(f: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(f)
    h2 = 12 * h * h
    d[2:-2] = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / h2
    d[0] = (35 * f[0] - 104 * f[1] + 114 * f[2] - 56 * f[3] + 11 * f[4]) / h2
    d[1] = (11 * f[0] - 20 * f[1] + 6 * f[2] + 4 * f[3] - f[4]) / h2
    d[-1] = (35 * f[-1] - 104 * f[-2] + 114 * f[-3] - 56 * f[-4] + 11 * f[-5]) / h2
    d[-2] = (11 * f[-1] - 20 * f[-2] + 6 * f[-3] + 4 * f[-4] - f[-5]) / h2
    return d


@dataclass(frozen=True)
class FreeBoundary:
    """Sampled contact curve with derivatives on the axial nodes.

    The endpoint slopes are set to zero; the raw finite-difference slopes
    before that are kept in ``raw_end_slopes`` for compatibility checks.
    """

    f: np.ndarray
    hx: float
    f_prime: np.ndarray = field(init=False, repr=False)
    f_second: np.ndarray = field(init=False, repr=False)
    raw_end_slopes: tuple[float, float] = field(init=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if np.any(f >= 1.0):
            raise DegenerateBoundary("contact curve reaches the upper wall")
        fp = _first_derivative(f, self.hx)
        raw = (float(fp[0]), float(fp[-1]))
        fp[0] = fp[-1] = 0.0
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "f_prime", fp)
        object.__setattr__(self, "f_second", _second_derivative(f, self.hx))
        object.__setattr__(self, "raw_end_slopes", raw)

    @classmethod
    def flat(cls, domain: CutDomain) -> "FreeBoundary":
        return cls(np.zeros(domain.nx + 1), domain.hx)

    @property
    def L(self) -> float:
        return self.hx * (len(self.f) - 1)

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(0.0, self.L, len(self.f))

    @cached_property
    def spline(self) -> CubicSpline:
        return CubicSpline(self.x1, self.f, bc_type="clamped")

    def __call__(self, x1):
        return self.spline(x1)

    def sup(self) -> float:
        return float(np.max(np.abs(self.f)))


def map_to_rectangle(boundary: FreeBoundary, x1, x2):
    fx = boundary(x1)
    if np.any(fx >= 1.0):
        raise DegenerateBoundary("1 - f must stay positive")
    return np.asarray(x1, dtype=float), (np.asarray(x2) - fx) / (1.0 - fx)


def map_from_rectangle(boundary: FreeBoundary, y1, y2):
    fy = boundary(y1)
    return np.asarray(y1, dtype=float), (1.0 - np.asarray(y2)) * fy + np.asarray(y2)


class MappedGrid:
    """Rectangle grid plus the metric of the map for one contact curve.

    For v(x1, x2) = V(y1, y2):
        d/dx1 = d/dy1 + a d/dy2,   d/dx2 = b d/dy2,
    with b = 1/(1 - f) and a = f' (y2 - 1)/(1 - f).
    """

    def __init__(self, domain: CutDomain, boundary: FreeBoundary):
        if len(boundary.f) != domain.nx + 1:
            raise ValueError("boundary samples do not match the axial grid")
        self.domain = domain
        self.boundary = boundary
        f, fp, fpp = boundary.f, boundary.f_prime, boundary.f_second
        jac = 1.0 - f
        y2m1 = domain.y2[None, :] - 1.0
        self.jac = jac[:, None] * np.ones((1, domain.ny + 1))
        self.b = 1.0 / self.jac
        self.a = fp[:, None] * y2m1 / jac[:, None]
        # d(a)/dx1 at fixed x2
        self.a_x1 = fpp[:, None] * y2m1 / jac[:, None] + 2 * fp[:, None] ** 2 * y2m1 / jac[:, None] ** 2
        # d(a)/dx2
        self.a_x2 = (fp / jac**2)[:, None] * np.ones((1, domain.ny + 1))
        self.x1 = domain.y1[:, None] * np.ones((1, domain.ny + 1))
        self.x2 = f[:, None] + domain.y2[None, :] * jac[:, None]

    @property
    def shape(self):
        return self.domain.shape

    def mapped_gradient(self, V):
        """Fourth-order differences along y1, second-order along y2.

        Second order in y2 matches the one-sided rows of the contact and wall
        conditions; fourth order in y1 keeps the inlet column as accurate as
        the interior, so column fluxes carry no spurious kink at x1 = 0.
        """
        return _first_derivative(V, self.domain.hx), np.gradient(V, self.domain.hy, axis=1,
                                                                   edge_order=2)

    def grad(self, V):
        """Physical gradient (d/dx1, d/dx2) of a nodal field."""
        V1, V2 = self.mapped_gradient(V)
        return V1 + self.a * V2, self.b * V2

    def div(self, F1, F2):
        F1_1, F1_2 = self.mapped_gradient(F1)
        _, F2_2 = self.mapped_gradient(F2)
        return F1_1 + self.a * F1_2 + self.b * F2_2

    def column_integral(self, V):
        """Integral over f(x1) < x2 < 1 of each column (trapezoid)."""
        return self.jac[:, 0] * trapezoid(V, dx=self.domain.hy, axis=1)

    def cumulative_from_top(self, V):
        """W(x1, x2) = integral from 1 to x2 of V dt (trapezoid), so W = 0 on the wall."""
        h = self.domain.hy
        cells = 0.5 * (V[:, 1:] + V[:, :-1]) * h
        W = np.zeros_like(V)
        W[:, :-1] = -np.cumsum(cells[:, ::-1], axis=1)[:, ::-1]
        return W * self.jac

    def area_weights(self):
        """Trapezoid weights for integrals over the physical upper region."""
        d = self.domain
        wx = np.full(d.nx + 1, d.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(d.ny + 1, d.hy)
        wy[[0, -1]] *= 0.5
        return wx[:, None] * wy[None, :] * self.jac


def reflect_even_extension(boundary: FreeBoundary, tol: float = 1e-6):
    """Even reflection of f across x1 = 0 and x1 = L onto [-1, L + 1]."""
    s0, sL = boundary.raw_end_slopes
    if abs(s0) > tol or abs(sL) > tol:
        raise CompatibilityViolated(f"end slopes f'(0)={s0:.3g}, f'(L)={sL:.3g}")
    f, h = boundary.f, boundary.hx
    m = int(np.floor(1.0 / h + 1e-9))
    m = min(m, len(f) - 1)
    left = f[1:m + 1][::-1]
    right = f[-m - 1:-1][::-1]
    ext = np.concatenate((left, f, right))
    x = h * np.arange(-m, len(f) + m)
    return x, ext


def _column_interp(values: np.ndarray, h: float, y: np.ndarray) -> np.ndarray:
    """Four-point Lagrange interpolation along axis 1 on a uniform grid.

    ``y`` has the same shape as ``values``' leading axis by query count and is
    interpolated column by column (row i of y queries row i of values).
    """
    n = values.shape[1] - 1
    t = np.clip(y, 0.0, 1.0) / h
    k = np.clip(np.floor(t).astype(int) - 1, 0, n - 3)
    s = t - k
    w0 = -(s - 1) * (s - 2) * (s - 3) / 6
    w1 = s * (s - 2) * (s - 3) / 2
    w2 = -s * (s - 1) * (s - 3) / 2
    w3 = s * (s - 1) * (s - 2) / 6
    rows = np.arange(values.shape[0])[:, None]
    return (w0 * values[rows, k] + w1 * values[rows, k + 1]
            + w2 * values[rows, k + 2] + w3 * values[rows, k + 3])


@dataclass
class EntropyField:
    """Entropy on the region x2 > -1/2 of the cut-off nozzle.

    Above the contact curve it is the stored field; below, the three-term
    reflection in mapped coordinates.  Stored as the deviation from S0 so a
    uniform field stays exactly uniform under resampling.
    """

    boundary: FreeBoundary
    deviation: np.ndarray
    S0: float
    domain: CutDomain

    @classmethod
    def from_values(cls, grid: MappedGrid, S: np.ndarray, S0: float) -> "EntropyField":
        return cls(grid.boundary, np.asarray(S) - S0, S0, grid.domain)

    def values(self) -> np.ndarray:
        return self.S0 + self.deviation

    def at_mapped(self, y_old: np.ndarray) -> np.ndarray:
        """Evaluate at mapped coordinates of the stored curve (y >= -1)."""
        h = self.domain.hy
        above = _column_interp(self.deviation, h, np.maximum(y_old, 0.0))
        below = sum(c * _column_interp(self.deviation, h, np.clip(-y_old / i, 0.0, 1.0))
                    for i, c in enumerate(EXTENSION_COEFFS, start=1))
        return self.S0 + np.where(y_old >= 0.0, above, below)

    def at_physical(self, x2: np.ndarray) -> np.ndarray:
        """x2 has one row per axial node of the stored curve."""
        f = self.boundary.f[:, None]
        return self.at_mapped((x2 - f) / (1.0 - f))

    def sample(self, grid: MappedGrid) -> np.ndarray:
        """Entropy on the nodes of another mapped grid with the same axial nodes."""
        if np.array_equal(grid.boundary.f, self.boundary.f):
            return self.S0 + self.deviation
        return self.at_physical(grid.x2)


def extend_entropy_below(grid: MappedGrid, S: np.ndarray, S0: float) -> EntropyField:
    return EntropyField.from_values(grid, S, S0)


def compare_on_common_domain(grid_a: MappedGrid, fields_a: dict, grid_b: MappedGrid,
                             fields_b: dict, x1_max: float | None = None) -> dict:
    """Sup and L2 differences of two solutions over a shared axial segment.

    Fields of B are composed with the map that carries N_{L,fA} onto
    N_{L,fB} preserving mapped height, which on the rectangle is plain
    interpolation at equal (y1, y2).
    """
    x1_max = min(grid_a.domain.L, grid_b.domain.L) if x1_max is None else x1_max
    ia = grid_a.domain.y1 <= x1_max + 1e-12
    y1, y2 = grid_a.domain.y1[ia], grid_a.domain.y2
    same_nodes = (np.isclose(grid_a.domain.hx, grid_b.domain.hx)
                  and grid_a.domain.ny == grid_b.domain.ny)
    w = grid_a.area_weights()[ia]
    out = {}
    for name, va in fields_a.items():
        va = np.asarray(va)[ia]
        vb = np.asarray(fields_b[name])
        if same_nodes:
            vb = vb[:len(y1)]
        else:
            spline = RectBivariateSpline(grid_b.domain.y1, grid_b.domain.y2, vb, kx=3, ky=3, s=0)
            vb = spline(y1, y2)
        d = va - vb
        out[name] = {"sup": float(np.max(np.abs(d))),
                     "l2": float(np.sqrt(np.sum(w * d * d))),
                     "scale": float(np.max(np.abs(va)))}
    fa = grid_a.boundary.f[ia]
    fb = grid_b.boundary(y1) if not same_nodes else grid_b.boundary.f[:len(y1)]
    df = fa - fb
    out["f"] = {"sup": float(np.max(np.abs(df))),
                "l2": float(np.sqrt(trapezoid(df * df, y1))),
                "scale": float(np.max(np.abs(fa)))}
    return out
