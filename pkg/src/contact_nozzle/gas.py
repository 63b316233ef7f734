"""Gas constants, the two-layer background state, and pointwise closures.

All closures accept scalars or numpy arrays (broadcast elementwise).  Gradients
``q`` (of the potential) and ``r`` (of the stream function) are passed as
pairs ``(q1, q2)`` and ``(r1, r2)``; the velocity is ``q + r_perp`` with
``r_perp = (r2, -r1)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import AxialVelocityDegenerate, NonPhysicalState

# G rejects states with q1 + r2 below this fraction of u0.
AXIAL_GUARD = 0.1


@dataclass(frozen=True)
class GasParams:
    gamma: float
    rho_plus: float
    rho_minus: float
    p0: float
    u0: float

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not self.gamma > 1:
            out.append("gamma must be > 1")
        for name in ("rho_plus", "rho_minus", "p0", "u0"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0")
        if not out and not self.u0 < math.sqrt(self.gamma * self.p0 / self.rho_plus):
            out.append("background must be subsonic: u0 < sqrt(gamma*p0/rho_plus)")
        return out


@dataclass(frozen=True)
class BackgroundState:
    """Derived constants of the reference two-layer flow."""

    params: GasParams
    S0_plus: float = field(init=False)
    S0_minus: float = field(init=False)
    B0_plus: float = field(init=False)
    B0_minus: float = field(init=False)
    c0: float = field(init=False)
    phi0_slope: float = field(init=False)

    def __post_init__(self):
        g, p0 = self.params.gamma, self.params.p0
        rp, rm, u0 = self.params.rho_plus, self.params.rho_minus, self.params.u0
        object.__setattr__(self, "S0_plus", p0 / rp**g)
        object.__setattr__(self, "S0_minus", p0 / rm**g)
        object.__setattr__(self, "B0_plus", u0**2 / 2 + g * p0 / ((g - 1) * rp))
        object.__setattr__(self, "B0_minus", g * p0 / ((g - 1) * rm))
        object.__setattr__(self, "c0", math.sqrt(g * p0 / rp))
        object.__setattr__(self, "phi0_slope", u0)

    @property
    def mass_flux(self) -> float:
        return self.params.rho_plus * self.params.u0


@functools.lru_cache(maxsize=64)
def background(params: GasParams) -> BackgroundState:
    return BackgroundState(params)


def _velocity(q, r):
    return np.add(q[0], r[1]), np.subtract(q[1], r[0])


def _H_from_speed2(params: GasParams, xi, speed2):
    g = params.gamma
    B0 = background(params).B0_plus
    xi = np.asarray(xi, dtype=float)
    radicand = (g - 1) * (B0 - 0.5 * np.asarray(speed2)) / (g * np.where(xi > 0, xi, 1.0))
    if np.any(xi <= 0) or np.any(radicand <= 0):
        raise NonPhysicalState("density closure radicand <= 0 or entropy <= 0")
    return radicand ** (1.0 / (g - 1))


def density_H(params: GasParams, xi, q, r):
    """Density H(xi, q, r) from the Bernoulli law with B = B0+."""
    v1, v2 = _velocity(q, r)
    return _H_from_speed2(params, xi, v1 * v1 + v2 * v2)


def momentum_F(params: GasParams, xi, q, r):
    """Mass flux H * (q + r_perp) as a pair of components."""
    v1, v2 = _velocity(q, r)
    h = _H_from_speed2(params, xi, v1 * v1 + v2 * v2)
    return h * v1, h * v2


def vorticity_source_G(params: GasParams, xi, eta, q, r):
    """Right-hand side of the stream-function Poisson equation.

    ``eta`` is the x2-derivative of the entropy.
    """
    g = params.gamma
    axial = np.add(q[0], r[1])
    if np.any(axial < AXIAL_GUARD * params.u0):
        raise AxialVelocityDegenerate(
            f"q1 + r2 below {AXIAL_GUARD} * u0 (min {float(np.min(axial)):.4g})"
        )
    h = density_H(params, xi, q, r)
    return -np.asarray(eta) * h ** (g - 1) / ((g - 1) * axial)


def contact_speed(params: GasParams, S):
    """Speed on the contact implied by p = p0 and B = B0+."""
    g, p0 = params.gamma, params.p0
    B0 = background(params).B0_plus
    S = np.asarray(S, dtype=float)
    rad = 2 * (B0 - g * p0 ** (1 - 1 / g) * np.abs(S) ** (1 / g) / (g - 1))
    if np.any(S <= 0) or np.any(rad < 0):
        raise NonPhysicalState("contact speed radicand negative")
    return np.sqrt(rad)


def contact_neumann_A(params: GasParams, f_slope, S_at_contact):
    """Conormal datum for the stream function on the contact curve."""
    tangential_bg = params.u0 / np.sqrt(1.0 + np.square(f_slope))
    return contact_speed(params, S_at_contact) - tangential_bg


def bernoulli(params: GasParams, u, rho, p):
    g = params.gamma
    return 0.5 * (np.square(u[0]) + np.square(u[1])) + g * np.asarray(p) / ((g - 1) * np.asarray(rho))


def pressure_from(params: GasParams, S, H_value):
    return np.asarray(S) * np.asarray(H_value) ** params.gamma


def sound_speed(params: GasParams, rho, p):
    return np.sqrt(params.gamma * np.asarray(p) / np.asarray(rho))


def background_coefficients(params: GasParams) -> tuple[float, float]:
    """Diagonal of the Jacobian of A(q) = H q at the background state.

    a11 = rho0 (1 - u0^2/c0^2) and a22 = rho0; the off-diagonals vanish.
    """
    bg = background(params)
    rho = params.rho_plus
    return rho * (1.0 - params.u0**2 / bg.c0**2), rho


class StatePoint(NamedTuple):
    xi: float
    q: tuple
    r: tuple


def background_point(params: GasParams) -> StatePoint:
    return StatePoint(background(params).S0_plus, (params.u0, 0.0), (0.0, 0.0))
