import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from casimirlab import coeffs as cf
from casimirlab import fit as fitmod
from casimirlab.errors import ConditioningError, CrossValidationError, DomainError, FitError
from casimirlab.fit import (ExpansionModel, WindowWarning, cylinder_terms, extract_coefficient_set,
                            fit_adaptive, fit_expansion, fit_trace, heat_terms, least_squares,
                            parse_terms)
from casimirlab.kernels import TraceGrid, trace_grid
from casimirlab.spectrum import LD

EPS = np.finfo(np.longdouble).eps


def synthetic(fun, lo=0.01, hi=1.0, n=64, kind="cylinder", magnitude=None):
    """Grid of fun(t); error bounds are rounding of ``magnitude`` (default |fun|)."""
    t = np.geomspace(lo, hi, n)
    tl = t.astype(LD)
    v = fun(tl)
    mag = np.abs(v if magnitude is None else magnitude(tl)).astype(float)
    return TraceGrid(t, v, 4 * float(EPS) * mag, kind)


def test_exact_model_recovery():
    g = synthetic(lambda t: 2 / t - LD("0.5") + LD("0.3") * t)
    m = fit_expansion(g, [-1, 0, 1])
    assert np.allclose(m.coefficients, [2, -0.5, 0.3], rtol=0, atol=1e-10)


def test_log_model_recovery():
    g = synthetic(lambda t: t * np.log(t) + t)
    m = fit_expansion(g, [(1, True), (1, False)])
    assert m.coefficient(1, True) == pytest.approx(1, abs=1e-8)
    assert m.coefficient(1) == pytest.approx(1, abs=1e-8)


@pytest.fixture(scope="module")
def deep_dirichlet():
    from conftest import interval
    from casimirlab.spectrum import build_interval_spectrum
    return build_interval_spectrum(interval(), 1_000_000)


def test_dirichlet_cylinder_short_model(deep_dirichlet):
    # The omitted t^3 term (-pi^3/720) biases the t^2 slot by about 0.1 t_max,
    # so the t^2 coefficient is checked against its own error bar.
    g = trace_grid(deep_dirichlet, "cylinder", np.geomspace(2e-5, 2e-4, 64))
    m = fit_expansion(g, [-1, 0, 1, 2])
    assert np.allclose(m.coefficients[:3], [1 / math.pi, -0.5, math.pi / 12], rtol=0, atol=1e-5)
    assert abs(m.coefficient(2)) < max(3 * m.error(2), 1e-5)
    assert abs(m.coefficient(2)) < 1e-4


def test_dirichlet_cylinder_with_next_term(deep_dirichlet):
    g = trace_grid(deep_dirichlet, "cylinder", np.geomspace(2e-4, 2e-3, 64))
    m = fit_expansion(g, [-1, 0, 1, 2, 3])
    expected = [1 / math.pi, -0.5, math.pi / 12, 0.0, -math.pi ** 3 / 720]
    assert np.allclose(m.coefficients[:4], expected[:4], rtol=0, atol=1e-5)
    assert m.coefficient(3) == pytest.approx(expected[4], abs=1e-4)


def test_window_too_wide_warns(dirichlet_spec):
    g = trace_grid(dirichlet_spec, "cylinder", np.geomspace(2e-3, 0.5, 64))
    with pytest.warns(WindowWarning, match="window too wide"):
        m = fit_expansion(g, [-1, 0, 1])
    assert m.warnings


def test_conditioning_refused():
    g = synthetic(lambda t: 1 / t, lo=1.0, hi=1.001)
    with pytest.raises(ConditioningError, match="shrink the window"):
        fit_expansion(g, [-1, 0, 1, 2, 3])


def test_too_few_points():
    g = synthetic(lambda t: 1 / t, n=10)
    with pytest.raises(FitError):
        fit_expansion(g, [-1, 0, 1])


def test_error_bound_precondition():
    t = np.geomspace(0.1, 1, 32)
    g = TraceGrid(t, 1 / t, 0.01 / t, "cylinder")
    with pytest.raises(FitError, match="error bounds"):
        fit_expansion(g, [-1, 0])


def test_parse_terms():
    assert parse_terms("-1, 0, 1L, 1") == [(-1, False), (0, False), (1, True), (1, False)]
    with pytest.raises(DomainError):
        parse_terms("x")
    with pytest.raises(DomainError):
        fit_expansion(synthetic(lambda t: t), [1, 1])


def test_term_families():
    assert heat_terms(1, 2) == [(-0.5, False), (0, False), (0.5, False)] or [
        float(p) for p, _ in heat_terms(1, 2)] == [-0.5, 0.0, 0.5]
    fam = cylinder_terms(1, 3)
    assert (1, True) in [(int(p), lg) for p, lg in fam]
    en = cylinder_terms(1, 3, energy=True)
    assert all(not (p == -1 and not lg) for p, lg in en)


def test_model_serialization():
    g = synthetic(lambda t: 2 / t + LD(1))
    m = fit_expansion(g, [-1, 0])
    d = m.to_dict()
    assert d["terms"][0]["power"] == "-1"
    assert set(d) >= {"window", "chi2_reduced", "condition_number", "n_points"}
    assert isinstance(m, ExpansionModel) and m.has(0) and not m.has(1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_oracle_recovery_property(c):
    terms = [(-1, False), (0, False), (1, True), (1, False), (2, False)]
    fun = lambda t: (LD(c[0]) / t + LD(c[1]) + LD(c[2]) * t * np.log(t) + LD(c[3]) * t
                     + LD(c[4]) * t * t)
    # terms may cancel, so the rounding scale is the sum of their sizes
    mag = lambda t: (abs(LD(c[0])) / t + abs(LD(c[1])) + abs(LD(c[2]) * t * np.log(t))
                     + abs(LD(c[3])) * t + abs(LD(c[4])) * t * t)
    m = fit_expansion(synthetic(fun, 0.01, 0.5, magnitude=mag), terms)
    assert np.allclose(m.coefficients, c, rtol=0, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-2, 2))
def test_least_squares_scale_invariance(scale, offset):
    x = np.geomspace(0.1, 1, 40)
    y = (offset + scale * x).astype(LD)
    a = least_squares(x, y, np.full(40, 1e-15), [0, 1])
    b = least_squares(x, y * 3, np.full(40, 3e-15), [0, 1])
    assert np.allclose(b.coefficients, 3 * a.coefficients, rtol=1e-12, atol=1e-13)


def test_window_stability(dirichlet_spec):
    lo, hi = 1.4e-3, 0.14
    full = fit_trace(dirichlet_spec, "cylinder", 1, window=(lo, hi), include_zero_modes=True)
    half = fit_trace(dirichlet_spec, "cylinder", 1, window=(lo, hi / 2), include_zero_modes=True)
    for term in [(-1, False), (0, False), (1, False)]:
        a, b = full.coefficient(*term), half.coefficient(*term)
        comb = math.hypot(full.error(*term), half.error(*term))
        assert abs(a - b) < 2 * comb


def test_adaptive_accepts_stable_order():
    g = synthetic(lambda t: 1 / t + LD(2) + LD("0.25") * t ** 2)
    m = fit_adaptive(g, lambda k: [(p, False) for p in range(-1, k)], 1, 6)
    assert m.coefficient(-1) == pytest.approx(1, abs=1e-12)
    assert "orders_tried" in m.meta


def test_extract_dirichlet(dirichlet_spec):
    cs = extract_coefficient_set(dirichlet_spec, s_max=2)
    assert cs.value("b", 0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), abs=1e-8)
    assert cs.value("b", 1) == pytest.approx(-0.5, abs=1e-8)
    assert cs.value("b", 2) == pytest.approx(0, abs=1e-6)
    assert cs.value("e", 0) == pytest.approx(1 / math.pi, abs=1e-8)
    assert cs.value("e", 1) == pytest.approx(-0.5, abs=1e-8)
    assert cs.value("f", 2) == pytest.approx(0, abs=1e-6)
    assert cs.value("e", 2) == pytest.approx(math.pi / 12, abs=1e-6)
    assert cs.get("e", 2).provenance == "heat-blind"
    assert cs.passed


def test_extract_neumann_sign_flip(neumann_spec):
    cs = extract_coefficient_set(neumann_spec)
    assert cs.value("b", 0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), abs=1e-8)
    assert cs.value("b", 1) == pytest.approx(0.5, abs=1e-8)
    assert cs.value("e", 1) == pytest.approx(0.5, abs=1e-8)


def test_extract_robin_log_term(robin_spec):
    cs = extract_coefficient_set(robin_spec)
    f2, b2 = cs.value("f", 2), cs.value("b", 2)
    assert b2 != 0 and f2 != 0
    assert f2 == pytest.approx(-b2 / math.sqrt(math.pi), rel=0.02)
    assert cs.passed


@pytest.mark.parametrize("bcs", [("dirichlet", "neumann"), ("robin:-2", "dirichlet"),
                                 ("robin:1", "robin:2")])
def test_theorem_holds_on_intervals(bcs):
    from casimirlab.spectrum import BoundaryCondition, IntervalGeometry, build_interval_spectrum
    geom = IntervalGeometry(1.0, *(BoundaryCondition.parse(b) for b in bcs))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        spec = build_interval_spectrum(geom, 10000)
    cs = extract_coefficient_set(spec)
    assert cs.passed and len(cs.checks) == 4


def test_theorem_holds_on_2d_box(box2_spec):
    cs = extract_coefficient_set(box2_spec)
    names = [(c.name, c.s) for c in cs.checks]
    assert names == [("e", 0), ("e", 1), ("e", 2), ("f", 3), ("e", 4)]
    assert cs.value("e", 0) == pytest.approx(1 / (2 * math.pi), rel=1e-10)


def test_theorem_holds_on_3d_box(box3_spec):
    cs = extract_coefficient_set(box3_spec)
    assert [(c.name, c.s) for c in cs.checks][-2:] == [("f", 4), ("e", 5)]
    assert cs.value("e", 0) == pytest.approx(1 / math.pi ** 2, rel=1e-10)


def test_cross_validation_failure_report(dirichlet_spec, monkeypatch):
    real = cf.e_from_b_factor
    monkeypatch.setattr(cf, "e_from_b_factor",
                        lambda d, s: real(d, s) * cf.HalfGamma(1 + (s == 1)))
    with pytest.raises(CrossValidationError) as info:
        extract_coefficient_set(dirichlet_spec)
    assert "e_1" in str(info.value)
    assert not info.value.report.passed


def test_deep_orders_flagged_experimental(dirichlet_spec):
    cs = extract_coefficient_set(dirichlet_spec, s_max=5, strict=False)
    assert cs.diagnostics["experimental"]
    assert cs.diagnostics["s_max"] == 5
    assert fitmod.N_POINTS == 64
