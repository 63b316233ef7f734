import numpy as np
import pytest
from scipy.optimize import brentq

from contact_nozzle.errors import ForwardFlowLost
from contact_nozzle.geometry import CutDomain, FreeBoundary, MappedGrid
from contact_nozzle.inlet import build_profiles
from contact_nozzle.transport import (InletStreamMap, pullback_Y0, stream_function,
                                      transport_entropy, transport_step)

DELTA = 0.02


def _flat(nx=32, ny=32, L=2.0):
    d = CutDomain(L, nx, ny)
    return MappedGrid(d, FreeBoundary.flat(d))


def _h(x1, x2):
    """Manufactured stream function: zero on the wall, constant on the axis."""
    return 0.5 * (x2 - 1) + DELTA * np.sin(np.pi * x2) * (1 + 0.5 * np.sin(x1))


def _h_x2(x1, x2):
    return 0.5 + DELTA * np.pi * np.cos(np.pi * x2) * (1 + 0.5 * np.sin(x1))


def test_background_stream_function(gas):
    g = _flat(16, 16)
    V1 = np.full(g.shape, 0.5)
    w = stream_function(g, V1, gas)
    assert np.allclose(w[:, 8], -0.25, atol=1e-15)
    assert np.all(w[:, -1] == 0.0)
    assert np.allclose(stream_function(g, 2 * V1, gas), 2 * w, atol=1e-15)


def test_forward_flow_guard(gas):
    g = _flat(16, 16)
    V1 = np.full(g.shape, 0.5)
    V1[3, 4] = 0.01
    with pytest.raises(ForwardFlowLost):
        stream_function(g, V1, gas)


def test_background_pullback(gas):
    g = _flat(16, 16)
    w = stream_function(g, np.full(g.shape, 0.5), gas)
    G = InletStreamMap.from_stream_function(g, w)
    Y0 = pullback_Y0(w, G)
    assert np.allclose(Y0, g.x2, atol=1e-14)
    assert np.all(Y0[:, -1] == 1.0)


def _label_error(n, gas):
    g = _flat(n, n)
    w = stream_function(g, _h_x2(g.x1, g.x2), gas)
    Y0 = pullback_Y0(w, InletStreamMap.from_stream_function(g, w))
    exact = np.empty_like(Y0)
    for i, x1 in enumerate(g.domain.y1):
        for j, x2 in enumerate(g.domain.y2):
            target = _h(x1, x2)
            exact[i, j] = 0.0 if j == 0 else brentq(lambda y: _h(0.0, y) - target, -1e-12, 1.0 + 1e-12, xtol=1e-15)
    return np.max(np.abs(Y0 - exact))


def test_pullback_manufactured_streamlines(gas):
    errs = [_label_error(n, gas) for n in (16, 32, 64)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8), (errs, orders)


def test_transport_constant_and_uniform(gas):
    g = _flat(16, 16)
    V1 = np.full(g.shape, 0.5)
    dev, clamped = transport_step(g, V1, build_profiles(1.0), gas)
    assert np.all(dev == 0.0) and clamped == 0
    prof = build_profiles(1.0, a_S=0.01)
    dev, _ = transport_step(g, V1, prof, gas)
    assert np.allclose(dev, prof.ds_en(g.x2), atol=1e-15)


def _transport_error(n, gas):
    g = _flat(n, n)
    prof = build_profiles(1.0, a_S=0.01)
    dev, _ = transport_step(g, _h_x2(g.x1, g.x2), prof, gas)
    exit_h = _h(g.domain.L, g.domain.y2[1:-1])
    labels = [brentq(lambda y: _h(0.0, y) - t, 0.0, 1.0, xtol=1e-15) for t in exit_h]
    return np.max(np.abs(dev[-1, 1:-1] - prof.ds_en(np.array(labels))))


def test_transport_follows_streamlines(gas):
    errs = [_transport_error(n, gas) for n in (32, 64, 128)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert errs[-1] < 1e-7 and np.all(orders > 1.8), (errs, orders)
    prof = build_profiles(1.0, a_S=0.01)
    assert np.all(transport_entropy(prof, np.array([0.0, 1.0])) == 0.0)


def test_inlet_map_rejects_reversal():
    with pytest.raises(ForwardFlowLost):
        InletStreamMap(np.array([0.0, 0.5, 1.0]), np.array([-0.5, -0.6, 0.0]))
