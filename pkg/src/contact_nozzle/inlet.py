"""Inlet data: entropy and transverse-velocity profiles on 0 <= x2 <= 1."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidProfile

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(6)


def bump(t):
    """C-infinity bump on (0, 1) with bump(1/2) = 1, zero outside."""
    t = np.asarray(t, dtype=float)
    s = 2.0 * t - 1.0
    inside = np.abs(s) < 1.0
    out = np.zeros_like(t)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


@dataclass(frozen=True)
class InletProfile:
    """Inlet traces for the upper layer.

    ``ds_en`` is the entropy deviation S_en - S0+, kept separately so that
    profile scaling is exact in floating point.
    """

    S0: float
    ds_en: Callable
    v_en: Callable
    epsilon: float = 0.05
    alpha: float = 0.5
    a_S: Optional[float] = None
    a_v: Optional[float] = None

    def s_en(self, x2):
        return self.S0 + self.ds_en(x2)

    @property
    def is_background(self) -> bool:
        x = np.linspace(0.0, 1.0, 257)
        return not np.any(self.ds_en(x)) and not np.any(self.v_en(x))


def build_profiles(S0: float, a_S: float = 0.0, a_v: float = 0.0,
                   epsilon: float = 0.05, alpha: float = 0.5) -> InletProfile:
    if not 0.0 < epsilon < 0.1:
        raise InvalidProfile(f"epsilon must lie in (0, 1/10), got {epsilon}")
    if not (np.isfinite(a_S) and np.isfinite(a_v)):
        raise InvalidProfile("profile amplitudes must be finite")
    if S0 + min(a_S, 0.0) <= 0.0:
        raise InvalidProfile("entropy profile must stay positive")
    width = 1.0 - 2.0 * epsilon

    def ds(x2):
        return a_S * bump((np.asarray(x2, dtype=float) - epsilon) / width)

    def v(x2):
        return a_v * bump((np.asarray(x2, dtype=float) - epsilon) / width)

    return InletProfile(S0, ds, v, epsilon, alpha, a_S, a_v)


def read_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column text table (x2, value); '#' starts a comment."""
    data = np.loadtxt(Path(path), comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise InvalidProfile(f"{path}: expected two columns, got {data.shape[1]}")
    x, y = data[:, 0], data[:, 1]
    if np.any(np.diff(x) <= 0):
        raise InvalidProfile(f"{path}: x2 column must be strictly increasing")
    if x[0] > 0.0 or x[-1] < 1.0:
        raise InvalidProfile(f"{path}: table must cover [0, 1]")
    return x, y


def profiles_from_tables(S0: float, s_table, v_table=None, epsilon: float = 0.05,
                         alpha: float = 0.5, tol: float = 1e-10) -> InletProfile:
    """Build a profile from tabulated (x2, value) pairs.

    Tables are validated against the endpoint conditions: v_en must vanish and
    S_en must be flat on [0, eps] and [1 - eps, 1].
    """
    if not 0.0 < epsilon < 0.1:
        raise InvalidProfile(f"epsilon must lie in (0, 1/10), got {epsilon}")
    xs, s = (np.asarray(a, dtype=float) for a in s_table)
    if np.any(s <= 0):
        raise InvalidProfile("tabulated entropy must be positive")
    lo, hi = xs <= epsilon, xs >= 1.0 - epsilon
    for band in (lo, hi):
        if band.any() and np.ptp(s[band]) > tol:
            raise InvalidProfile("entropy must be constant on the end bands")
    s_spline = CubicSpline(xs, s - S0, bc_type="clamped")

    if v_table is None:
        def v(x2):
            return np.zeros_like(np.asarray(x2, dtype=float))
    else:
        xv, vv = (np.asarray(a, dtype=float) for a in v_table)
        band = (xv <= epsilon) | (xv >= 1.0 - epsilon)
        if np.any(np.abs(vv[band]) > tol):
            raise InvalidProfile("v_en must vanish on [0, eps] and [1 - eps, 1]")
        v_spline = CubicSpline(xv, vv, bc_type="clamped")

        def v(x2):
            x2 = np.asarray(x2, dtype=float)
            out = v_spline(x2)
            return np.where((x2 <= epsilon) | (x2 >= 1.0 - epsilon), 0.0, out)

    def ds(x2):
        return s_spline(np.asarray(x2, dtype=float))

    return InletProfile(S0, ds, v, epsilon, alpha)


def inlet_potential_trace(profile: InletProfile, x2) -> np.ndarray:
    """phi_en(x2) = integral of v_en from 0 to x2.

    Composite 6-point Gauss-Legendre on the cells between sorted query points,
    so a grid column costs one vectorised pass.
    """
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    order = np.argsort(x2)
    nodes = np.concatenate(([0.0], x2[order]))
    a, b = nodes[:-1], nodes[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GAUSS_X[None, :]
    cell = half * (profile.v_en(pts) @ _GAUSS_W)
    out = np.empty_like(x2)
    out[order] = np.cumsum(cell)
    return out


def _holder_quotient(x: np.ndarray, g: np.ndarray, alpha: float) -> float:
    dx = np.abs(x[:, None] - x[None, :])
    dg = np.abs(g[:, None] - g[None, :])
    np.fill_diagonal(dx, 1.0)
    return float(np.max(dg / dx**alpha))


def perturbation_size(profile: InletProfile, n: int = 513) -> float:
    """Discrete stand-in for the C^{2,a} + C^{1,a} size of the inlet data.

    Sup norms of the entropy deviation and its first two derivatives, plus a
    sampled Hoelder quotient of the second derivative; likewise for v_en up
    to first order.
    """
    if n < 64:
        raise ValueError("perturbation_size needs at least 64 samples")
    x = np.linspace(0.0, 1.0, n)
    h = x[1] - x[0]
    a = profile.alpha
    ds = profile.ds_en(x)
    ds1 = np.gradient(ds, h, edge_order=2)
    ds2 = np.gradient(ds1, h, edge_order=2)
    v = profile.v_en(x)
    v1 = np.gradient(v, h, edge_order=2)
    terms = [
        np.max(np.abs(ds)), np.max(np.abs(ds1)), np.max(np.abs(ds2)),
        _holder_quotient(x, ds2, a),
        np.max(np.abs(v)), np.max(np.abs(v1)),
        _holder_quotient(x, v1, a),
    ]
    return float(sum(terms))
