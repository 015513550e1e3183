import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from casimirlab.errors import DomainError, TruncationError
from casimirlab.kernels import (TraceGrid, TraceKind, auto_window, aux_trace, cylinder_trace,
                                energy_density_cutoff, halfline_energy_density,
                                halfline_phi_squared_wall, heat_trace, interval_density_integral,
                                local_cylinder_kernel, local_heat_kernel, mode_energy_density,
                                phi_squared, regularized_energy, tail_bound, trace_grid)
from casimirlab.spectrum import Spectrum, build_interval_spectrum

from conftest import D, N, R, interval


def test_heat_trace_dirichlet_pi(dirichlet_pi):
    est = heat_trace(dirichlet_pi, 1.0)
    oracle = float(mp.nsum(lambda n: mp.exp(-n * n), [1, mp.inf]))
    assert est.value == pytest.approx(0.386319, abs=1e-6)
    assert abs(est.value - oracle) < 1e-15
    assert est.error < 1e-12


def test_heat_trace_theta_oracle(dirichlet_spec):
    t = 0.01
    # K(t) = (theta_3(0, e^{-pi^2 t}) - 1)/2 exactly
    mp.mp.dps = 30
    exact = float((mp.jtheta(3, 0, mp.exp(-mp.pi ** 2 * t)) - 1) / 2)
    est = heat_trace(dirichlet_spec, t)
    assert abs(est.value - (1 / (2 * math.sqrt(math.pi * t)) - 0.5)) < 1e-10
    assert est.value == pytest.approx(2.320948, abs=1e-6)
    assert abs(est.value - exact) < 1e-14


def test_empty_spectrum_traces():
    e = Spectrum.empty()
    for f in (heat_trace, cylinder_trace, regularized_energy, aux_trace):
        assert f(e, 0.3).value == 0


def test_cylinder_trace_geometric_oracles(dirichlet_pi, dirichlet_spec):
    assert cylinder_trace(dirichlet_pi, 1.0).value == pytest.approx(1 / (math.e - 1), rel=1e-14)
    v = cylinder_trace(dirichlet_spec, 0.1).value
    assert v == pytest.approx(1 / math.expm1(0.1 * math.pi), rel=1e-14)
    assert v == pytest.approx(2.709236, abs=1e-6)


def test_regularized_energy_oracles(dirichlet_pi, dirichlet_spec):
    e = math.e
    assert regularized_energy(dirichlet_pi, 1.0).value == pytest.approx(0.5 * e / (e - 1) ** 2,
                                                                         rel=1e-14)
    one = Spectrum([4.0], weyl_constant=0)
    assert regularized_energy(one, 0.5).value == pytest.approx(math.exp(-1), rel=1e-15)
    q = math.exp(0.3 * math.pi)
    assert regularized_energy(dirichlet_spec, 0.3).value == pytest.approx(
        (math.pi / 2) * q / (q - 1) ** 2, rel=1e-14)


def test_aux_trace(dirichlet_pi):
    assert aux_trace(dirichlet_pi, 1.0).value == pytest.approx(-math.log(1 - math.exp(-1)),
                                                               rel=1e-14)
    with pytest.raises(DomainError):
        aux_trace(Spectrum([1.0]), 0.0)
    h = 1e-4
    deriv = -(aux_trace(dirichlet_pi, 0.7 + h).value - aux_trace(dirichlet_pi, 0.7 - h).value) / (
        2 * h)
    assert abs(deriv - cylinder_trace(dirichlet_pi, 0.7).value) < 1e-8


def test_truncation_error_reported(dirichlet_pi):
    with pytest.raises(TruncationError) as info:
        heat_trace(dirichlet_pi, 1e-7, tol=1e-12)
    assert info.value.achievable > 1e-12


def test_tail_bound_covers_missing_modes():
    short = build_interval_spectrum(interval(), 50)
    full = build_interval_spectrum(interval(), 5000)
    for kind in (TraceKind.HEAT, TraceKind.CYLINDER, TraceKind.ENERGY):
        t = 0.0005 if kind is TraceKind.HEAT else 0.05
        v_short, _ = trace_grid(short, kind, [t]).values, None
        v_full = trace_grid(full, kind, [t]).values
        missing = float(v_full[0] - v_short[0])
        assert 0 < missing <= tail_bound(short, kind, t)


def test_trace_grid_validation():
    with pytest.raises(DomainError):
        TraceGrid([0.2, 0.1], [1, 2], [0, 0], "heat")
    with pytest.raises(DomainError):
        TraceGrid([0.1, 0.2], [1, 2], [0, np.inf], "heat")


def test_auto_window_heuristic(dirichlet_spec):
    lo, hi = auto_window(dirichlet_spec, "cylinder")
    assert hi == pytest.approx(100 * lo)
    v = cylinder_trace(dirichlet_spec, lo).value
    eps = float(np.finfo(np.longdouble).eps)
    assert tail_bound(dirichlet_spec, "cylinder", lo) == pytest.approx(10 * eps * v, rel=1e-6)


def test_local_cylinder_kernel_midpoint(dirichlet_pi):
    geom = interval(math.pi)
    v = local_cylinder_kernel(geom, 1.0, math.pi / 2)
    oracle = (2 / math.pi) * math.exp(-1) / (1 - math.exp(-2))
    assert v.value == pytest.approx(oracle, rel=1e-13)
    assert v.value == pytest.approx(0.270856, abs=1e-6)


def test_local_kernel_flat_space_limit():
    v = local_cylinder_kernel(interval(10.0), 0.05, 5.0)
    assert v.value == pytest.approx(1 / (math.pi * 0.05), rel=1e-2)


@pytest.mark.parametrize("bc", [D, N, R(-2.0)])
def test_local_kernel_reflection_symmetry(bc):
    geom = interval(1.3, bc)
    x = np.array([0.1, 0.37, 0.6])
    a = local_cylinder_kernel(geom, 0.05, x).value
    b = local_cylinder_kernel(geom, 0.05, 1.3 - x).value
    assert np.allclose(a, b, rtol=1e-12)
    h1 = local_heat_kernel(geom, 0.01, x).value
    h2 = local_heat_kernel(geom, 0.01, 1.3 - x).value
    assert np.allclose(h1, h2, rtol=1e-12)


def _dirichlet_density_oracle(xi, t, x):
    # T00 = 1/2 sum n pi q^n - 2 xi sum n pi q^n cos(2 n pi x),  q = e^{-pi t}
    q = mp.exp(-mp.pi * t)
    z = q * mp.exp(2j * mp.pi * x)
    plain = mp.pi * q / (1 - q) ** 2 / 2
    osc = mp.pi * mp.re(z / (1 - z) ** 2)
    return float(plain - 2 * xi * osc)


@pytest.mark.parametrize("xi", [0.0, 0.25, 1 / 6])
@pytest.mark.parametrize("x", [0.5, 0.3])
def test_dirichlet_cutoff_density_closed_form(xi, x):
    mp.mp.dps = 30
    v = energy_density_cutoff(interval(), xi, 0.5, x)
    assert v.value == pytest.approx(_dirichlet_density_oracle(xi, 0.5, x), rel=1e-13)


@pytest.mark.parametrize("x", [0.5, 0.3])
def test_density_xi_term_is_phi2_curvature(x):
    # T00(xi) - T00(0) = -xi d^2<phi^2>/dx^2; the slope vanishes at the symmetric point
    geom = interval(1.0, R(-1.5))
    a = energy_density_cutoff(geom, 0.0, 0.2, x).value
    b = energy_density_cutoff(geom, 0.3, 0.2, x).value
    h = 1e-3
    p = phi_squared(geom, 0.2, [x - h, x, x + h]).value
    curv = (p[0] - 2 * p[1] + p[2]) / h ** 2
    assert b - a == pytest.approx(-0.3 * curv, rel=1e-5)
    if x == 0.5:
        assert abs(p[2] - p[0]) < 1e-14


def test_single_mode_hand_value():
    x = 0.5
    phi = math.sqrt(2) * math.sin(math.pi * x)
    dphi = math.sqrt(2) * math.pi * math.cos(math.pi * x)
    d2phi = -math.pi ** 2 * phi
    # normalized so that omega = 1 for the toy spectrum
    v = mode_energy_density(np.array([1.0]), np.array([[phi]]), np.array([[dphi]]),
                            np.array([[d2phi]]), 0.0, 1.0)
    assert float(v[0]) == pytest.approx(0.5 * math.exp(-1), abs=1e-15)
    assert float(v[0]) == pytest.approx(0.183940, abs=1e-6)


@pytest.mark.parametrize("bc", [D, R(-1.0), R(-3.0)])
@pytest.mark.parametrize("xi", [0.0, 0.25])
def test_density_integral_methods_agree(bc, xi):
    geom = interval(1.0, bc, D)
    a = interval_density_integral(geom, xi, 0.05)
    b = interval_density_integral(geom, xi, 0.05, method="quadrature")
    assert abs(a.value - b.value) <= 1e-12 * abs(a.value)


def test_halfline_dirichlet_conformal_is_flat():
    for x in (1e-3, 0.1, 10.0, 1e3):
        assert halfline_energy_density(D, 0.0, 0.0, x, renormalized=True).value == 0.0


def test_halfline_neumann_is_reflected_dirichlet():
    for x in (0.05, 0.2):
        d = halfline_energy_density(D, 0.25, 0.01, x, renormalized=True).value
        n = halfline_energy_density(N, 0.25, 0.01, x, renormalized=True).value
        assert n == pytest.approx(-d, rel=1e-12)


def _halfline_oracle(g, xi, t, x):
    mp.mp.dps = 30
    f = lambda k: k * mp.cos(2 * k * x + 2 * mp.atan(k / g)) * mp.exp(-k * t)
    val = mp.quadosc(f, [0, mp.inf], omega=2 * x)
    return float(-(2 * xi / mp.pi) * val)


def test_halfline_robin_against_quadrature_oracle():
    v = halfline_energy_density(R(-1.0), 0.25, 0.01, 0.1, renormalized=True)
    oracle = _halfline_oracle(1.0, 0.25, 0.01, 0.1)
    assert math.isfinite(v.value)
    assert v.value == pytest.approx(oracle, rel=1e-8)


def test_halfline_phi2_wall():
    v = halfline_phi_squared_wall(R(-1.0), 0.1)
    mp.mp.dps = 30
    oracle = mp.quad(lambda k: k * mp.exp(-k * 0.1) / (k * k + 1), [0, 1, 10, mp.inf]) / mp.pi
    assert v.value == pytest.approx(float(oracle), rel=1e-11)
    assert halfline_phi_squared_wall(D, 0.1).value == 0.0


def test_local_density_positions_checked():
    with pytest.raises(DomainError):
        energy_density_cutoff(interval(), 0.0, 0.1, 1.0)


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.01, 2.0))
def test_aux_derivative_property(t):
    spec = build_interval_spectrum(interval(math.pi), 400)
    h = 1e-5 * t
    d = -(aux_trace(spec, t + h).value - aux_trace(spec, t - h).value) / (2 * h)
    c = cylinder_trace(spec, t).value
    assert abs(d - c) < 1e-6 * max(1.0, c)


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.02, 1.0))
def test_energy_is_minus_half_cylinder_derivative(t):
    spec = build_interval_spectrum(interval(1.0), 2000)
    h = 1e-5 * t
    d = (cylinder_trace(spec, t + h).value - cylinder_trace(spec, t - h).value) / (2 * h)
    e = regularized_energy(spec, t).value
    assert abs(e + d / 2) < 1e-6 * e


@settings(max_examples=15, deadline=None)
@given(x=st.floats(0.05, 0.95), t=st.floats(0.02, 0.5))
def test_local_cylinder_integrates_to_trace(x, t):
    geom = interval(1.0, R(-1.0), D)
    spec = build_interval_spectrum(geom, 4000)
    # trace = integral of the diagonal; check positivity and the bound by the trace
    v = local_cylinder_kernel(geom, t, x).value
    assert 0 < v
    xs, ws = np.polynomial.legendre.leggauss(200)
    xs = (xs + 1) / 2
    integral = float(np.dot(local_cylinder_kernel(geom, t, xs).value, ws / 2))
    assert integral == pytest.approx(cylinder_trace(spec, t).value, rel=1e-9)
