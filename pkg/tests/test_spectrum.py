import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from casimirlab.errors import (DomainError, InsufficientCeilingError, OutOfRangeError)
from casimirlab.spectrum import (BCKind, BoundaryCondition, BoxGeometry, IntervalGeometry,
                                 Spectrum, build_box_spectrum, build_interval_spectrum,
                                 counting_function, interval_frequencies, product_spectrum,
                                 secular)

from conftest import D, N, R, interval


def test_boundary_condition_parse():
    assert BoundaryCondition.parse("dirichlet") == D
    assert BoundaryCondition.parse("N") == N
    bc = BoundaryCondition.parse("robin:-1.5")
    assert bc.kind is BCKind.ROBIN and bc.gamma == -1.5
    assert bc.coefficients == (1.5, 1.0)
    with pytest.raises(DomainError):
        BoundaryCondition.parse("periodic")
    with pytest.raises(DomainError):
        BoundaryCondition.robin(0.0)
    with pytest.raises(DomainError):
        BoundaryCondition("dirichlet", 1.0)


def test_dirichlet_pi_first_three():
    spec = build_interval_spectrum(interval(math.pi), 3)
    assert np.allclose(spec.lam, [1, 4, 9], rtol=0, atol=1e-15)
    assert not spec.has_zero_mode


def test_neumann_excluding_zero_mode():
    spec = build_interval_spectrum(interval(1.0, N), 2)
    assert spec.has_zero_mode
    positive = spec.lam[spec.positive_mask]
    assert np.allclose(positive, [math.pi ** 2, 4 * math.pi ** 2], rtol=1e-15)


def test_small_robin_approaches_neumann():
    # the would-be zero mode sits at lambda ~ 2|gamma|/a and is excluded
    spec = build_interval_spectrum(interval(1.0, R(-1e-9)), 3)
    assert spec.lam[0] == pytest.approx(2e-9, rel=1e-6)
    assert np.allclose(spec.lam[1:], [math.pi ** 2, 4 * math.pi ** 2], rtol=1e-7)


def _robin_oracle(g, a=1.0):
    # phi = cos(w x) + c sin(w x); phi'(0) = -g phi(0) and phi'(a) = g phi(a)
    mp.mp.dps = 40
    f = lambda w: (w * w - g * g) * mp.sin(w * a) + 2 * w * g * mp.cos(w * a)
    lo, hi = mp.mpf("0.01"), mp.mpf(math.pi)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mp.sign(f(mid)) == mp.sign(f(lo)):
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def test_robin_first_root_against_bisection_oracle():
    g = -1.0
    spec = build_interval_spectrum(interval(1.0, R(g)), 1)
    w = _robin_oracle(g)
    assert abs(float(spec.omega[0]) - float(w)) < 1e-15
    # the eigenfunction satisfies both boundary conditions
    c = -g / w
    phi = lambda x: mp.cos(w * x) + c * mp.sin(w * x)
    dphi = lambda x: -w * mp.sin(w * x) + c * w * mp.cos(w * x)
    assert abs(-dphi(0) - g * phi(0)) < 1e-30
    assert abs(dphi(1) - g * phi(1)) < 1e-30
    assert abs(float(secular(interval(1.0, R(g)), spec.omega[:1])[0])) < 1e-12


def test_robin_roots_interlace_dirichlet():
    omega, zero, neg = interval_frequencies(interval(1.0, R(-1.0)), 200)
    n = np.arange(1, 201)
    assert not zero and neg == 0
    assert np.all(omega.astype(float) > (n - 1) * math.pi)
    assert np.all(omega.astype(float) < n * math.pi)


@pytest.mark.parametrize("g, expected", [(1.0, 1), (3.0, 2)])
def test_positive_gamma_counts_negative_modes(g, expected):
    # even bound state for any g > 0, odd one once g*a > 2
    with pytest.warns(RuntimeWarning, match="negative"):
        spec = build_interval_spectrum(interval(1.0, R(g)), 5)
    assert spec.negative_count == expected
    assert np.all(spec.lam > 0)


def test_neumann_zero_mode_stored_in_addition():
    spec = build_interval_spectrum(interval(2.0, N), 4)
    assert spec.values[0] == 0 and spec.count == 5


def test_counting_function_examples(dirichlet_pi):
    assert counting_function(dirichlet_pi, 10.0) == 3
    assert counting_function(dirichlet_pi, 0.0) == 0
    nn = build_interval_spectrum(interval(math.pi, N), 10)
    assert counting_function(nn, 0.5) == 1
    with pytest.raises(OutOfRangeError):
        counting_function(build_interval_spectrum(interval(math.pi), 3), 10.0)
    with pytest.raises(DomainError):
        counting_function(dirichlet_pi, -1.0)


def test_product_first_three():
    f = build_interval_spectrum(interval(math.pi), 3)
    p = product_spectrum([f, f], 3)
    assert p.entries == [(2.0, 1), (5.0, 2)]


def test_product_count_brute_force():
    f = build_interval_spectrum(interval(math.pi), 10)
    p = product_spectrum([f, f])
    brute = sum(1 for i in range(1, 11) for j in range(1, 11) if i * i + j * j <= 10)
    assert counting_function(p, 10.0) == brute == 6


def test_single_factor_product_is_identity(dirichlet_pi):
    assert product_spectrum([dirichlet_pi]) is dirichlet_pi


def test_product_ceiling_too_low():
    f = build_interval_spectrum(interval(math.pi), 3)
    with pytest.raises(InsufficientCeilingError):
        product_spectrum([f, f], 9)


def test_box_multiplicities_and_weyl():
    box = BoxGeometry((interval(), interval(), interval()))
    spec = build_box_spectrum(box, 40, 2000)
    assert spec.dim == 3
    assert spec.multiplicities[0] == 1 and spec.multiplicities[1] == 3
    assert spec.weyl_constant == pytest.approx(1 / (6 * math.pi ** 2))
    assert spec.count >= 2000


def test_spectrum_validation():
    with pytest.raises(DomainError):
        Spectrum([2.0, 1.0])
    with pytest.raises(DomainError):
        Spectrum([0.0, 1.0])
    with pytest.raises(DomainError):
        Spectrum([1.0], [0])
    s = Spectrum([1.0, 2.0], [1, 2])
    with pytest.raises(AttributeError):
        s.dim = 2
    with pytest.raises(ValueError):
        s.values[0] = 3


def test_digest_is_deterministic(dirichlet_pi):
    again = build_interval_spectrum(interval(math.pi), 400)
    assert again.digest() == dirichlet_pi.digest()


@settings(max_examples=25, deadline=None)
@given(g=st.floats(-20.0, -0.05), a=st.floats(0.3, 3.0))
def test_robin_spectrum_properties(g, a):
    geom = interval(a, R(g))
    omega, zero, neg = interval_frequencies(geom, 30)
    w = omega.astype(float)
    assert not zero and neg == 0
    assert np.all(np.diff(w) > 0)
    n = np.arange(1, 31)
    # symmetric Robin with gamma < 0 lies strictly between Neumann and Dirichlet levels
    assert np.all(w > (n - 1) * math.pi / a) and np.all(w < n * math.pi / a)
    res = np.abs(secular(geom, omega).astype(float))
    assert np.all(res < 1e-10 * (1 + w ** 2))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=1, max_size=4, unique=True),
       st.lists(st.integers(1, 30), min_size=1, max_size=4, unique=True))
def test_product_counts_all_pairs(xs, ys):
    a = Spectrum(sorted(xs), ceiling=math.inf, weyl_constant=0)
    b = Spectrum(sorted(ys), ceiling=math.inf, weyl_constant=0)
    p = product_spectrum([a, b])
    assert p.count == len(xs) * len(ys)
    assert sorted(x + y for x in xs for y in ys)[0] == p.lam[0]
