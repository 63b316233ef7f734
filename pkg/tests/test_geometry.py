import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given, settings, strategies as st

from contact_nozzle.errors import CompatibilityViolated, DegenerateBoundary
from contact_nozzle.geometry import (EXTENSION_COEFFS, CutDomain, EntropyField, FreeBoundary,
                                     MappedGrid, compare_on_common_domain, extend_entropy_below,
                                     map_from_rectangle, map_to_rectangle, reflect_even_extension)


def _quartic_boundary(L=4.0, nx=80, c=0.01):
    x = np.linspace(0, L, nx + 1)
    return FreeBoundary(c * x**2 * (x - L) ** 2 / L**4, L / nx)


def test_domain_spacing():
    d = CutDomain(20.0, 256, 64)
    assert d.hx == 20.0 / 256 and d.hy == 1 / 64
    assert d.shape == (257, 65)
    with pytest.raises(ValueError):
        CutDomain(1.0, 4, 64)


def test_flat_map_is_identity():
    b = FreeBoundary.flat(CutDomain(2.0, 16, 8))
    x1 = np.linspace(0, 2, 5)
    assert np.array_equal(map_to_rectangle(b, x1, np.full(5, 0.3))[1], np.full(5, 0.3))


def test_constant_shift_map():
    d = CutDomain(2.0, 16, 8)
    b = FreeBoundary(np.full(17, 0.2), d.hx)
    _, y2 = map_to_rectangle(b, np.array([0.7]), np.array([0.6]))
    assert y2[0] == pytest.approx(0.5, abs=1e-15)


def test_round_trip_random_points():
    b = _quartic_boundary(c=0.3)
    rng = np.random.default_rng(7)
    x1 = rng.uniform(0, b.L, 1000)
    x2 = b(x1) + rng.uniform(0, 1, 1000) * (1 - b(x1))
    y1, y2 = map_to_rectangle(b, x1, x2)
    _, back = map_from_rectangle(b, y1, y2)
    assert np.max(np.abs(back - x2)) <= 1e-14


def test_degenerate_boundary():
    with pytest.raises(DegenerateBoundary):
        FreeBoundary(np.full(17, 1.0), 0.1)


def test_reflection():
    flat = FreeBoundary.flat(CutDomain(4.0, 40, 8))
    assert np.all(reflect_even_extension(flat)[1] == 0.0)
    b = _quartic_boundary()
    x, fe = reflect_even_extension(b)
    assert x[0] == pytest.approx(-1.0) and x[-1] == pytest.approx(b.L + 1.0)
    i0 = int(np.argmin(np.abs(x)))
    k = int(round(0.1 / b.hx))
    assert fe[i0 - k] == b.f[k]
    h = b.hx
    d2 = (fe[2:] - 2 * fe[1:-1] + fe[:-2]) / h**2
    assert abs(d2[i0 - 2] - d2[i0]) <= 1e-10
    iL = i0 + len(b.f) - 1
    assert abs(d2[iL - 2] - d2[iL]) <= 1e-10


def test_reflection_rejects_sloped_ends():
    x = np.linspace(0, 4, 81)
    with pytest.raises(CompatibilityViolated):
        reflect_even_extension(FreeBoundary(0.01 * x, 0.05))


def test_extension_moments():
    c = np.array(EXTENSION_COEFFS)
    i = np.arange(1, 4)
    for m in range(3):
        assert abs(np.sum(c * (-1.0 / i) ** m) - 1.0) <= 1e-12


def _flat_grid(L=2.0, nx=16, ny=20):
    d = CutDomain(L, nx, ny)
    return MappedGrid(d, FreeBoundary.flat(d))


def test_extension_reproduces_quadratic():
    g = _flat_grid()
    ext = extend_entropy_below(g, 1.0 + g.x2**2, 1.0)
    val = ext.at_physical(np.full((17, 1), -0.3))
    assert np.max(np.abs(val - 1.0 - 0.09)) <= 1e-12
    const = extend_entropy_below(g, np.full(g.shape, 1.3), 1.0)
    assert np.max(np.abs(const.at_physical(np.full((17, 3), -0.4)) - 1.3)) <= 1e-14


def test_extension_continuous_at_contact():
    b = _quartic_boundary(nx=16, c=0.2)
    g = MappedGrid(CutDomain(b.L, 16, 32), b)
    S = 1.0 + 0.1 * np.sin(3 * g.x2)
    ext = EntropyField.from_values(g, S, 1.0)
    assert np.allclose(ext.at_mapped(np.zeros((17, 1)))[:, 0], S[:, 0], atol=1e-14)
    assert np.array_equal(ext.sample(g), S)


def test_metric_derivatives():
    b = _quartic_boundary(nx=160, c=0.3)
    g = MappedGrid(CutDomain(b.L, 160, 64), b)
    v = np.sin(g.x1) * np.cos(2 * g.x2)
    d1, d2 = g.grad(v)
    e1 = np.cos(g.x1) * np.cos(2 * g.x2)
    e2 = -2 * np.sin(g.x1) * np.sin(2 * g.x2)
    assert np.max(np.abs(d1 - e1)) < 2e-3
    assert np.max(np.abs(d2 - e2)) < 2e-3
    dv = g.div(e1, e2)
    assert np.max(np.abs(dv + 5 * v)) < 2e-2


def test_column_integral_and_cumulative():
    b = _quartic_boundary(nx=40, c=0.3)
    g = MappedGrid(CutDomain(b.L, 40, 64), b)
    ones = np.ones(g.shape)
    assert np.allclose(g.column_integral(ones), 1 - b.f, atol=1e-14)
    W = g.cumulative_from_top(ones)
    assert np.allclose(W, g.x2 - 1.0, atol=1e-14)
    assert g.area_weights().sum() == pytest.approx(trapezoid(1 - b.f, dx=b.hx), rel=1e-13)


def test_compare_identical_and_shifted():
    g = _flat_grid()
    phi = np.sin(g.x1) * g.x2
    same = compare_on_common_domain(g, {"phi": phi}, g, {"phi": phi})
    assert same["phi"]["sup"] == 0.0 and same["f"]["sup"] == 0.0
    shifted = compare_on_common_domain(g, {"phi": phi}, g, {"phi": phi + 1.0})
    assert shifted["phi"]["sup"] == pytest.approx(1.0, abs=1e-15)


def test_compare_across_resolutions():
    errs = []
    for n in (16, 32, 64):
        ga, gb = _flat_grid(nx=n, ny=n), _flat_grid(nx=2 * n, ny=2 * n)
        fa = np.sin(2 * ga.x1) * np.cos(3 * ga.x2)
        fb = np.sin(2 * gb.x1) * np.cos(3 * gb.x2)
        errs.append(compare_on_common_domain(ga, {"v": fa}, gb, {"v": fb})["v"]["sup"])
    assert errs[2] < 1e-12


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-0.5, 0.5), y1=st.floats(0, 4), y2=st.floats(0, 1))
def test_map_round_trip_property(c, y1, y2):
    b = _quartic_boundary(c=c)
    x1, x2 = map_from_rectangle(b, np.array([y1]), np.array([y2]))
    _, back = map_to_rectangle(b, x1, x2)
    assert back[0] == pytest.approx(y2, abs=1e-13)


def test_compare_interpolation_order():
    errs = []
    for n in (16, 32, 64):
        ga, gb = _flat_grid(nx=2 * n, ny=2 * n), _flat_grid(nx=n + n // 2, ny=n + n // 2)
        fa = np.sin(2 * ga.x1) * np.cos(3 * ga.x2)
        fb = np.sin(2 * gb.x1) * np.cos(3 * gb.x2)
        errs.append(compare_on_common_domain(ga, {"v": fa}, gb, {"v": fb})["v"]["sup"])
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.5)
