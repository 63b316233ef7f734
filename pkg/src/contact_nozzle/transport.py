"""Entropy transport along streamlines of the mass flux.

S is constant on streamlines, so it is read off from the inlet:
S = S_en(Y0) with Y0 = G^{-1}(w), where w is the column stream function
measured from the upper wall and G its inlet trace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ForwardFlowLost
from .gas import GasParams
from .geometry import MappedGrid
from .inlet import InletProfile

FORWARD_GUARD = 0.1


def stream_function(grid: MappedGrid, V1: np.ndarray, params: GasParams) -> np.ndarray:
    """w(x1, x2) = integral from 1 to x2 of the axial mass flux; w = 0 on the wall."""
    floor = FORWARD_GUARD * params.rho_plus * params.u0
    low = float(np.min(V1))
    if low < floor:
        raise ForwardFlowLost(f"axial mass flux {low:.4g} below {floor:.4g}")
    return grid.cumulative_from_top(V1)


@dataclass
class InletStreamMap:
    """Monotone map from inlet height to the inlet stream-function value."""

    heights: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.values) <= 0):
            raise ForwardFlowLost("inlet stream function is not increasing")
        self._inverse = PchipInterpolator(self.values, self.heights)
        self._forward = PchipInterpolator(self.heights, self.values)
        self.clamped = 0

    @classmethod
    def from_stream_function(cls, grid: MappedGrid, w: np.ndarray) -> "InletStreamMap":
        # f(0) = 0, so the inlet column sits at x2 = y2.
        return cls(grid.domain.y2.copy(), w[0].copy())

    def __call__(self, y):
        return self._forward(y)

    def inverse(self, w: np.ndarray) -> np.ndarray:
        lo, hi = self.values[0], self.values[-1]
        out = (w < lo) | (w > hi)
        self.clamped += int(np.count_nonzero(out))
        return np.clip(self._inverse(np.clip(w, lo, hi)), 0.0, 1.0)


def pullback_Y0(w: np.ndarray, G: InletStreamMap) -> np.ndarray:
    """Inlet height of the streamline through each node."""
    return G.inverse(w)


def transport_entropy(profile: InletProfile, Y0: np.ndarray) -> np.ndarray:
    """Entropy deviation S - S0+ carried from the inlet."""
    return profile.ds_en(Y0)


def transport_step(grid: MappedGrid, V1: np.ndarray, profile: InletProfile,
                   params: GasParams) -> tuple[np.ndarray, int]:
    """Deviation field S - S0+ on the grid and the number of clamped nodes."""
    w = stream_function(grid, V1, params)
    G = InletStreamMap.from_stream_function(grid, w)
    Y0 = pullback_Y0(w, G)
    Y0[0] = grid.domain.y2
    return transport_entropy(profile, Y0), G.clamped
