"""Traced and local heat/cylinder kernels and cutoff energy densities.

All spectral sums run in extended precision and return ``Estimate`` pairs
(value, error bound).  The bound combines a Weyl-law integral comparison
for the eigenvalues beyond the certified ceiling with a rounding estimate.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NormalizationError, QuadratureError, TruncationError
from .spectrum import LD, BCKind, BoundaryCondition, interval_frequencies

EPS_LD = float(np.finfo(np.longdouble).eps)
CUT = 60.0  # terms with omega*t beyond this are below 1e-26 and skipped


class Estimate(NamedTuple):
    value: object
    error: object


class TraceKind(str, enum.Enum):
    HEAT = "heat"
    CYLINDER = "cylinder"
    ENERGY = "energy"
    AUX = "aux"


@dataclass
class TraceGrid:
    """Trace values on an increasing grid of cutoff times.

    ``values`` are kept in extended precision for fitting; ``errors`` are
    per-point bounds (tail plus rounding).
    """

    t: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    kind: TraceKind
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=LD)
        self.errors = np.asarray(self.errors, dtype=float)
        if self.t.ndim != 1 or not (self.t.shape == self.values.shape == self.errors.shape):
            raise DomainError("t, values and errors must be 1-D arrays of equal length")
        if np.any(np.diff(self.t) <= 0):
            raise DomainError("t values must be strictly increasing")
        if not np.all(np.isfinite(self.errors)):
            raise DomainError("truncation errors must be finite")
        self.kind = TraceKind(self.kind)

    def __len__(self):
        return self.t.size

    def window(self, t_min, t_max):
        m = (self.t >= t_min * (1 - 1e-12)) & (self.t <= t_max * (1 + 1e-12))
        return TraceGrid(self.t[m], self.values[m], self.errors[m], self.kind, dict(self.meta))

    def to_dict(self):
        return {"kind": self.kind.value, "t": self.t.tolist(),
                "values": self.values.astype(float).tolist(),
                "errors": self.errors.tolist(), "meta": self.meta}


@dataclass
class DensityProfile:
    """Energy density sampled at positions x (t = 0 means renormalized)."""

    x: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    xi: float
    t: float
    geometry: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)

    def to_dict(self):
        return {"x": self.x.tolist(), "values": self.values.tolist(),
                "errors": self.errors.tolist(), "xi": self.xi, "t": self.t,
                "geometry": self.geometry, "meta": self.meta}


# -- traces -------------------------------------------------------------------

def _upper_gamma(s, x):
    """Gamma(s, x) for s >= 0 (s = 0 is the exponential integral)."""
    if s == 0:
        return float(special.exp1(x))
    return float(special.gammaincc(s, x) * special.gamma(s))


def tail_bound(spec, kind, t):
    """Bound on the contribution of eigenvalues above the certified ceiling.

    Uses mu(omega) <= M(omega) = (1+eta) C omega^d + 2, with eta = 0 in one
    dimension (Dirichlet interlacing) and 1 otherwise, and
    sum_{omega_n > W} g(omega_n) <= g(W)(M(W) - mu(W)) + int_W^inf g dM.
    """
    kind = TraceKind(kind)
    C = spec.weyl_constant
    if C == 0 or not math.isfinite(spec.ceiling):
        return 0.0
    d = spec.dim
    W = math.sqrt(spec.ceiling)
    eta = 0.0 if d == 1 else 1.0
    M_W = (1 + eta) * C * W ** d + 2 * int(spec.multiplicities.max(initial=1))
    jump = max(M_W - spec.count, 0.0)
    pref = (1 + eta) * C * d
    if kind is TraceKind.HEAT:
        gW = math.exp(-W * W * t)
        integral = 0.5 * t ** (-d / 2) * _upper_gamma(d / 2, W * W * t)
    elif kind is TraceKind.CYLINDER:
        gW = math.exp(-W * t)
        integral = t ** (-d) * _upper_gamma(d, W * t)
    elif kind is TraceKind.ENERGY:
        gW = 0.5 * W * math.exp(-W * t)
        integral = 0.5 * t ** (-d - 1) * _upper_gamma(d + 1, W * t)
    else:
        gW = math.exp(-W * t) / W
        integral = t ** (-(d - 1)) * _upper_gamma(d - 1, W * t)
    return gW * jump + pref * integral


def _terms(spec, kind, include_zero_modes):
    lam = spec.values
    mult = spec.multiplicities.astype(LD)
    if kind is TraceKind.HEAT:
        keep = np.ones(lam.shape, bool) if include_zero_modes else lam > 0
    else:
        keep = lam > 0
        if include_zero_modes and kind is TraceKind.CYLINDER:
            keep = np.ones(lam.shape, bool)
    return lam[keep], mult[keep]


def _sum_one(kind, lam, omega, mult, t):
    tl = LD(t)
    if kind is TraceKind.HEAT:
        n = int(np.searchsorted(lam, LD(CUT) / tl, side="right"))
        terms = mult[:n] * np.exp(-lam[:n] * tl)
    else:
        n = int(np.searchsorted(omega, LD(CUT) / tl, side="right"))
        w = omega[:n]
        e = np.exp(-w * tl)
        if kind is TraceKind.CYLINDER:
            terms = mult[:n] * e
        elif kind is TraceKind.ENERGY:
            terms = mult[:n] * w * e / 2
        else:
            terms = mult[:n] * e / w
    total = terms.sum(dtype=LD)
    # entries cut off inside the spectrum: count times the largest skipped term
    rest = float(mult[n:].sum())
    w_cut = CUT / t
    if kind is TraceKind.ENERGY:
        skipped = rest * 0.5 * w_cut * math.exp(-CUT)
    elif kind is TraceKind.AUX:
        skipped = rest * math.exp(-CUT) / w_cut
    else:
        skipped = rest * math.exp(-CUT)
    return total, n, skipped


def trace_values(spec, kind, t, include_zero_modes=False):
    """Extended-precision trace sums and error bounds on an array of t."""
    kind = TraceKind(kind)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise DomainError("cutoff time must be positive")
    lam, mult = _terms(spec, kind, include_zero_modes)
    omega = np.sqrt(lam)
    vals = np.empty(t.shape, dtype=LD)
    errs = np.empty(t.shape, dtype=float)
    for i, ti in enumerate(t):
        total, n, skipped = _sum_one(kind, lam, omega, mult, ti)
        vals[i] = total
        rounding = EPS_LD * (2 + math.sqrt(max(n, 1))) * abs(float(total))
        errs[i] = tail_bound(spec, kind, ti) + rounding + skipped
    return vals, errs


def _scalar_trace(spec, kind, t, tol, include_zero_modes=False):
    if not np.isscalar(t) and np.ndim(t) != 0:
        raise DomainError("scalar t expected; use trace_grid for arrays")
    t = float(t)
    if not t > 0:
        raise DomainError("cutoff time must be positive")
    v, e = trace_values(spec, kind, [t], include_zero_modes)
    if tol is not None and e[0] > tol:
        raise TruncationError(
            f"{TraceKind(kind).value} trace at t={t:g}: error bound {e[0]:.3e} exceeds "
            f"tolerance {tol:.3e}; increase N", achievable=float(e[0]))
    return Estimate(float(v[0]), float(e[0]))


def heat_trace(spec, t, tol=None):
    """K(t) = sum mult exp(-lambda t), zero modes included.

    >>> from casimirlab.spectrum import IntervalGeometry, build_interval_spectrum
    >>> s = build_interval_spectrum(IntervalGeometry(3.141592653589793), 50)
    >>> round(heat_trace(s, 1.0).value, 6)
    0.386319
    """
    return _scalar_trace(spec, TraceKind.HEAT, t, tol, include_zero_modes=True)


def cylinder_trace(spec, t, tol=None, include_zero_modes=False):
    """T(t) = sum mult exp(-omega t); zero modes excluded unless requested."""
    return _scalar_trace(spec, TraceKind.CYLINDER, t, tol, include_zero_modes)


def regularized_energy(spec, t, tol=None):
    """E(t) = 1/2 sum mult omega exp(-omega t)."""
    return _scalar_trace(spec, TraceKind.ENERGY, t, tol)


def aux_trace(spec, t, tol=None):
    """sum mult exp(-omega t)/omega over positive modes.

    Zero modes are excluded; ``spec.has_zero_mode`` records that they exist.
    """
    return _scalar_trace(spec, TraceKind.AUX, t, tol)


def trace_grid(spec, kind, t_values, include_zero_modes=None):
    """TraceGrid for ``kind`` on the given cutoff times."""
    kind = TraceKind(kind)
    if include_zero_modes is None:
        include_zero_modes = kind is TraceKind.HEAT
    t = np.asarray(t_values, dtype=float)
    vals, errs = trace_values(spec, kind, t, include_zero_modes)
    return TraceGrid(t, vals, errs, kind,
                     {"spectrum": spec.digest(), "include_zero_modes": bool(include_zero_modes),
                      "n_entries": len(spec), "ceiling": spec.ceiling})


def _min_length(geometry):
    """Smallest interval length recorded in a geometry description."""
    if isinstance(geometry, dict):
        found = [geometry["length"]] if "length" in geometry else []
        found += [_min_length(v) for v in geometry.values() if isinstance(v, (dict, list))]
    elif isinstance(geometry, list):
        found = [_min_length(v) for v in geometry]
    else:
        return math.inf
    return min(found, default=math.inf)


def auto_window(spec, kind, factor=100.0, rel=10 * EPS_LD):
    """Fit window (t_min, factor * t_min).

    t_min is where the tail bound equals ``rel`` times the trace itself.
    For a cavity of smallest side L the upper end is capped where the
    small-t expansion stops being efficient: L^2/44 for the heat trace
    (image terms exp(-L^2/t) below extended epsilon) and L/(2 pi) for the
    cylinder-type traces (1/(4 pi) of the radius of convergence 2L, set by the
    shortest periodic orbit).
    """
    kind = TraceKind(kind)
    if spec.weyl_constant == 0 or not math.isfinite(spec.ceiling):
        raise DomainError("automatic window needs a truncated spectrum with Weyl data")
    lam, mult = _terms(spec, kind, kind is TraceKind.HEAT)
    omega = np.sqrt(lam)

    def excess(logt):
        t = math.exp(logt)
        v = float(_sum_one(kind, lam, omega, mult, t)[0])
        return math.log(tail_bound(spec, kind, t) + 1e-300) - math.log(rel * abs(v) + 1e-300)

    W = math.sqrt(spec.ceiling)
    scale = 1.0 / (W * W) if kind is TraceKind.HEAT else 1.0 / W
    lo, hi = math.log(scale * 1e-2), math.log(scale * 1e4)
    if excess(hi) > 0:
        raise TruncationError("spectrum too shallow for any cutoff window; increase N")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    t_min = math.exp(hi)
    L = _min_length(spec.geometry)
    cap = L * L / 44.0 if kind is TraceKind.HEAT else L / (2 * math.pi)
    t_max = min(factor * t_min, cap)
    if t_max <= 2 * t_min:
        raise TruncationError(f"spectrum too shallow: window ({t_min:.3g}, {t_max:.3g}) "
                              "is too narrow for a fit; increase N")
    return t_min, t_max


# -- interval eigenfunctions --------------------------------------------------

@dataclass
class IntervalModes:
    """phi_n(x) = sin(omega_n x + theta_n) / sqrt(norm2_n)."""

    omega: np.ndarray
    theta: np.ndarray
    norm2: np.ndarray
    length: float
    zero_mode: bool

    def phi(self, x):
        return np.sin(np.multiply.outer(self.omega, x) + self.theta[:, None]) / np.sqrt(
            self.norm2)[:, None]

    def arrays(self, x):
        """phi, phi', phi'' on a grid; shape (modes, points)."""
        arg = np.multiply.outer(self.omega, np.asarray(x, dtype=LD)) + self.theta[:, None]
        inv = 1 / np.sqrt(self.norm2)[:, None]
        s, c = np.sin(arg) * inv, np.cos(arg) * inv
        w = self.omega[:, None]
        return s, w * c, -w * w * s


_GL_ORDER = 32
_GL_BASE = np.polynomial.legendre.leggauss(_GL_ORDER)


def _gauss_legendre(a, max_freq):
    """Composite Gauss-Legendre nodes on [0, a] for integrands oscillating up to ``max_freq``.

    Each 32-point panel spans k h <= 24 (h the half-width), which keeps
    the rule at rounding level for trigonometric integrands.
    """
    panels = max(1, int(math.ceil(max_freq * a / (2 * 24.0))))
    x0, w0 = _GL_BASE
    L = a / panels
    left = np.arange(panels) * L
    x = (left[:, None] + (x0 + 1) * L / 2).ravel()
    w = np.tile(w0 * L / 2, panels)
    return x, w


@functools.lru_cache(maxsize=8)
def interval_modes(geom, n, check=True):
    """Normalized eigenfunctions of the first n positive modes.

    Results are cached per (geometry, n); the arrays must not be modified.
    """
    omega, zero, _ = interval_frequencies(geom, n)
    alpha, beta = geom.left.coefficients
    theta = np.arctan2(LD(beta) * omega, LD(alpha))
    a = LD(geom.length)
    norm2 = a / 2 - (np.sin(2 * omega * a + 2 * theta) - np.sin(2 * theta)) / (4 * omega)
    modes = IntervalModes(omega, theta, norm2, geom.length, zero)
    if check and geom.has_robin:
        idx = np.unique(np.concatenate([np.arange(min(n, 20)), np.arange(max(n - 3, 0), n)]))
        xq, wq = _gauss_legendre(geom.length, 2 * float(omega[idx].max()) + 64)
        sub = IntervalModes(omega[idx], theta[idx], norm2[idx], geom.length, zero)
        ints = (sub.phi(xq.astype(LD)) ** 2 @ wq.astype(LD)).astype(float)
        resid = np.abs(ints - 1)
        if resid.max() > 1e-10:
            k = int(idx[resid.argmax()])
            raise NormalizationError(
                f"mode {k + 1}: normalization residual {resid.max():.3e}")
        # boundary condition at the right end, using the stored phase
        a_r, b_r = geom.right.coefficients
        s = np.sin(omega * a + theta)
        c = np.cos(omega * a + theta)
        bc = np.abs(a_r * s + b_r * omega * c) / (abs(a_r) + abs(b_r) * omega)
        if float(bc.max()) > 1e-11:
            raise NormalizationError(f"right boundary residual {float(bc.max()):.3e}")
    return modes


def _modes_for(geom, t, n_modes):
    if n_modes is None:
        n_modes = int(math.ceil(CUT * geom.length / (math.pi * t))) + 8
    return interval_modes(geom, n_modes)


def _local_sum(geom, t, x, weight, n_modes=None, chunk=2048, xi=0.0):
    """sum_n weight(omega, phi, phi', phi'') exp(-omega t) at positions x."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    a = geom.length
    if np.any((x <= 0) | (x >= a)):
        raise DomainError("positions must lie strictly inside the interval")
    if not t > 0:
        raise DomainError("cutoff time must be positive")
    modes = _modes_for(geom, t, n_modes)
    tl = LD(t)
    total = np.zeros(x.shape, dtype=LD)
    absum = np.zeros(x.shape, dtype=LD)
    nterm = 0
    for start in range(0, modes.omega.size, chunk):
        sl = slice(start, start + chunk)
        sub = IntervalModes(modes.omega[sl], modes.theta[sl], modes.norm2[sl], a, False)
        p, dp, d2p = sub.arrays(x)
        w = sub.omega[:, None]
        terms = weight(w, p, dp, d2p) * np.exp(-w * tl)
        total += terms.sum(axis=0)
        absum += np.abs(terms).sum(axis=0)
        nterm += sub.omega.size
    # modes beyond the last one: |term| <= sup|phi|^2 (1 + 4|xi|) omega e^{-omega t}
    W = float(modes.omega[-1])
    sup = 1.0 / float(modes.norm2.min())
    tail = 2 * sup * (1 + 4 * abs(xi)) * (a / math.pi) * (W / t + 1 / t ** 2 + 1) * math.exp(-W * t)
    vals = total.astype(float)
    # returned doubles carry their own rounding
    err = (EPS_LD * (2 + math.sqrt(nterm)) * absum.astype(float) + tail
           + np.finfo(float).eps * np.abs(vals))
    if scalar:
        return Estimate(float(vals[0]), float(err[0]))
    return Estimate(vals, err)


def local_cylinder_kernel(geom, t, x, n_modes=None):
    """T(t, x, x) = sum exp(-omega_n t) phi_n(x)^2 over positive modes."""
    return _local_sum(geom, t, x, lambda w, p, dp, d2p: p * p, n_modes)


def local_heat_kernel(geom, t, x, n_modes=None):
    """K(t, x, x) = sum exp(-lambda_n t) phi_n(x)^2 (Neumann zero mode included)."""
    x = np.asarray(x, dtype=float)
    if n_modes is None:
        n_modes = int(math.ceil(math.sqrt(CUT / t) * geom.length / math.pi)) + 8
    modes = interval_modes(geom, n_modes)
    p = modes.phi(np.atleast_1d(x).astype(LD))
    vals = (p * p * np.exp(-(modes.omega ** 2)[:, None] * LD(t))).sum(axis=0)
    if modes.zero_mode and (geom.left.kind, geom.right.kind) == (BCKind.NEUMANN,
                                                                  BCKind.NEUMANN):
        vals = vals + 1 / LD(geom.length)
    vals = vals.astype(float)
    err = EPS_LD * (2 + math.sqrt(n_modes)) * np.abs(vals) + 1e-25
    if x.ndim == 0:
        return Estimate(float(vals[0]), float(err[0]))
    return Estimate(vals, err)


def mode_energy_density(omega, phi, dphi, d2phi, xi, t):
    """Cutoff energy density of a set of normal modes.

    Each mode contributes
    exp(-omega t)/4 * [omega phi^2 + ((1-4 xi) phi'^2 - 4 xi phi phi'')/omega].

    Parameters
    ----------
    omega : array_like, shape (m,)
    phi, dphi, d2phi : array_like, shape (m, ...)
        Mode functions and derivatives at the evaluation points.
    """
    omega = np.asarray(omega)
    w = omega.reshape(omega.shape + (1,) * (np.ndim(phi) - omega.ndim))
    dens = 0.25 * np.exp(-w * t) * (w * phi * phi + ((1 - 4 * xi) * dphi * dphi
                                                      - 4 * xi * phi * d2phi) / w)
    return dens.sum(axis=0)


def _density_weight(xi):
    xi = LD(xi)
    return lambda w, p, dp, d2p: (w * p * p + ((1 - 4 * xi) * dp * dp - 4 * xi * p * d2p) / w) / 4


def energy_density_cutoff(geom, xi, t, x, n_modes=None):
    """Cutoff-regularized energy density T00(t, x) on an interval."""
    return _local_sum(geom, t, x, _density_weight(xi), n_modes, xi=xi)


def phi_squared(geom, t, x, n_modes=None):
    """<phi(x)^2>(t) = sum phi_n(x)^2 exp(-omega_n t) / (2 omega_n); x may be an endpoint."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x < 0) | (x > geom.length)):
        raise DomainError("positions must lie in the closed interval")
    modes = _modes_for(geom, t, n_modes)
    p = modes.phi(x.astype(LD))
    vals = (p * p * (np.exp(-modes.omega * LD(t)) / (2 * modes.omega))[:, None]).sum(axis=0)
    vals = vals.astype(float)
    return Estimate(vals, EPS_LD * (2 + math.sqrt(modes.omega.size)) * np.abs(vals) + 1e-25)


def interval_density_integral(geom, xi, t, n_modes=None, method="modes"):
    """int_0^a T00(t, x) dx over the positive modes.

    ``method="modes"`` integrates each mode exactly: with unit-normalized
    phi, int phi phi'' = -omega^2 and int phi'^2 = omega^2 C_n, so a mode
    contributes omega/4 [1 + 4 xi + (1 - 4 xi) C_n] e^{-omega t}.
    ``method="quadrature"`` sums the pointwise density on composite
    Gauss-Legendre nodes (double-precision trigonometry) as a cross-check.
    """
    modes = _modes_for(geom, t, n_modes)
    w, th, n2 = modes.omega, modes.theta, modes.norm2
    a = LD(geom.length)
    xi_l = LD(xi)
    damp = np.exp(-w * LD(t))
    if method == "modes":
        cn = (a / 2 + (np.sin(2 * w * a + 2 * th) - np.sin(2 * th)) / (4 * w)) / n2
        terms = w / 4 * (1 + 4 * xi_l + (1 - 4 * xi_l) * cn) * damp
        total = float(terms.sum())
        err = EPS_LD * (2 + math.sqrt(w.size)) * float(np.abs(terms).sum())
        return Estimate(total, err + np.finfo(float).eps * abs(total))
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")
    xq, wq = _gauss_legendre(geom.length, 2 * float(w[-1]) + 64)
    nodes = xq.size
    vals = np.zeros(xq.shape, dtype=LD)
    chunk = max(1, 4_000_000 // max(nodes, 1))
    for start in range(0, w.size, chunk):
        sl = slice(start, start + chunk)
        om = w[sl].astype(float)[:, None]
        arg = om * xq + th[sl].astype(float)[:, None]
        inv = 1 / np.sqrt(n2[sl].astype(float))[:, None]
        p, dp = np.sin(arg) * inv, om * np.cos(arg) * inv
        dens = (om * p * p + ((1 - 4 * xi) * dp * dp + 4 * xi * om * om * p * p) / om) / 4
        vals += (dens.astype(LD) * damp[sl][:, None]).sum(axis=0)
    total = float(vals @ wq.astype(LD))
    eps = np.finfo(float).eps
    return Estimate(total, eps * (2 + math.sqrt(w.size)) * float(w[-1] * a) * abs(total)
                    + 1e-14 * abs(total))


# -- Robin half-line ----------------------------------------------------------

def _halfline_g(bc):
    """g = -gamma >= 0 for the half-line condition; inf for Dirichlet."""
    if isinstance(bc, str):
        bc = BoundaryCondition.parse(bc)
    if isinstance(bc, BoundaryCondition):
        if bc.kind is BCKind.DIRICHLET:
            return math.inf
        if bc.kind is BCKind.NEUMANN:
            return 0.0
        gamma = bc.gamma
    else:
        gamma = float(bc)
    if gamma > 0:
        raise DomainError("half-line Robin condition needs gamma < 0 (gamma > 0 binds a mode)")
    if gamma == 0:
        return 0.0
    return -gamma


def _fourier(f, w, label, t, opts):
    """int_0^inf f(k) cos|sin(w k) dk.

    QAWF handles many oscillations; when the exponential cutoff kills the
    integrand within a few hundred cycles a plain adaptive rule on the
    truncated range is more reliable.
    """
    if t > 0 and w * CUT / t < 400:
        trig = math.cos if label == "cos" else math.sin
        res = integrate.quad(lambda k: f(k) * trig(w * k), 0, CUT / t, full_output=1,
                             limit=500, **opts)
    else:
        res = integrate.quad(f, 0, np.inf, weight=label, wvar=w, full_output=1,
                             limlst=200, limit=200, **opts)
    bad = len(res) > 3 or not (math.isfinite(res[0]) and abs(res[0]) < 1e100)
    if bad:
        msg = res[3].strip().splitlines()[0] if len(res) > 3 else "non-finite result"
        raise QuadratureError(f"Fourier quadrature over k in (0, inf) with frequency {w:g} "
                              f"did not converge: {msg}", k_range=(0.0, math.inf))
    return res[0], res[1]


def halfline_reflected(bc, t, x, epsabs=1e-11):
    """I(t, x) = int_0^inf k cos(2kx + 2 delta_k) exp(-kt) dk for the half-line.

    tan(delta_k) = k/g with g = -gamma.  The large-k parts are integrated
    in closed form; the remainders decay and are done by QAWF.
    """
    g = _halfline_g(bc)
    t, x = float(t), float(x)
    r2 = t * t + 4 * x * x
    dirichlet = (t * t - 4 * x * x) / (r2 * r2)    # int k cos(2kx) e^{-kt}
    sin_free = 2 * x / r2                          # int sin(2kx) e^{-kt}
    if math.isinf(g):
        return dirichlet, 0.0
    if g == 0:
        return -dirichlet, 0.0
    opts = {"epsabs": epsabs * g * g, "epsrel": 1e-10}
    p1, e1 = _fourier(lambda k: 2 * g * g * k / (k * k + g * g) * math.exp(-k * t), 2 * x,
                      "cos", t, opts)
    p2, e2 = _fourier(lambda k: 2 * g ** 3 / (k * k + g * g) * math.exp(-k * t), 2 * x,
                      "sin", t, opts)
    return -dirichlet + p1 - 2 * g * sin_free + p2, e1 + e2


def halfline_energy_density(bc, xi, t, x, renormalized=False):
    """Cutoff energy density outside a single wall at x = 0.

    Scattering modes sqrt(2/pi) sin(kx + delta_k) give
    T00(t, x) = 1/(2 pi t^2) - (2 xi/pi) int k cos(2kx + 2 delta_k) e^{-kt} dk.
    The first term is the free (wall-independent) density; ``renormalized``
    drops it, which also allows t = 0.
    """
    t, x = float(t), float(x)
    if not x > 0:
        raise DomainError("x must be positive")
    if t < 0 or (t == 0 and not renormalized):
        raise DomainError("cutoff time must be positive")
    if xi == 0:
        refl, err = 0.0, 0.0
        _halfline_g(bc)
    else:
        refl, err = halfline_reflected(bc, t, x)
    val = -(2 * xi / math.pi) * refl
    err = abs(2 * xi / math.pi) * err + 1e-15 * abs(val)
    if not renormalized:
        val += 1 / (2 * math.pi * t * t)
    return Estimate(val, err)


def halfline_density_profile(bc, xi, x, t=0.0):
    """Renormalized (t = 0) or cutoff half-line density on a grid."""
    x = np.asarray(x, dtype=float)
    out = [halfline_energy_density(bc, xi, t, xv, renormalized=(t == 0)) for xv in x]
    g = _halfline_g(bc)
    return DensityProfile(x, [o.value for o in out], [o.error for o in out], xi, t,
                          {"type": "halfline", "gamma": None if math.isinf(g) else -g})


def halfline_phi_squared_wall(bc, t):
    """<phi(0)^2>(t) = (1/pi) int_0^inf k exp(-kt)/(k^2 + g^2) dk."""
    g = _halfline_g(bc)
    if not t > 0:
        raise DomainError("cutoff time must be positive")
    if math.isinf(g):
        return Estimate(0.0, 0.0)
    if g == 0:
        return Estimate(math.inf, 0.0)
    val, err, info = integrate.quad(lambda k: k * math.exp(-k * t) / (k * k + g * g), 0, np.inf,
                                    epsabs=0, epsrel=1e-13, limit=400, full_output=1)[:3]
    return Estimate(val / math.pi, err / math.pi)
