"""Renormalized vacuum energies, densities and boundary studies.

Renormalization here always means taking the constant term of the
small-t expansion of a cutoff quantity.  The coefficient of ln t, when the
expansion has one, is reported alongside as a sentinel: if it is nonzero
the finite part depends on an arbitrary scale.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .errors import CasimirLabError, ConditioningError, DomainError, FitError
from .fit import WindowWarning, fit_adaptive, fit_trace, least_squares
from .kernels import (DensityProfile, Estimate, TraceGrid, TraceKind, _halfline_g,
                      energy_density_cutoff, halfline_energy_density, halfline_phi_squared_wall,
                      interval_density_integral, _modes_for, phi_squared, regularized_energy)
from .spectrum import BCKind, IntervalGeometry, build_interval_spectrum

SENTINEL_SIGMA = 3.0


@dataclass
class CasimirResult:
    """Renormalized energy with its extraction record.

    ``force`` is -dE/da; negative means attraction.
    """

    geometry: dict
    energy: float
    stderr: float
    force: float | None = None
    force_stderr: float | None = None
    log_coefficient: float = 0.0
    log_stderr: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def scale_dependent(self):
        """True if the ln t coefficient is significantly nonzero."""
        return abs(self.log_coefficient) > SENTINEL_SIGMA * max(self.log_stderr, 1e-300)

    def to_dict(self):
        return {"geometry": self.geometry, "E_ren": self.energy, "stderr": self.stderr,
                "force": self.force, "force_stderr": self.force_stderr,
                "ln_t_coefficient": self.log_coefficient, "ln_t_stderr": self.log_stderr,
                "scale_dependent": self.scale_dependent, "diagnostics": self.diagnostics}


# -- interval -----------------------------------------------------------------

def _interval_energy(geom, N, window):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        spec = build_interval_spectrum(geom, N)
    model = fit_trace(spec, TraceKind.ENERGY, 3, window)
    probe = fit_trace(spec, TraceKind.ENERGY, 3, window, extra=[(-1, False)])
    return spec, model, probe


def interval_casimir(geom, N=10000, xi=None, window=None, force=True):
    """Renormalized vacuum energy of a scalar field on an interval.

    Parameters
    ----------
    geom : IntervalGeometry
    N : int
        Number of eigenvalues used.
    xi : float, optional
        Accepted for interface symmetry and ignored: the total energy is
        fixed by the spectrum alone.
    window : (t_min, t_max), optional
        Fit window for E(t); automatic by default.
    force : bool
        Also compute -dE/da.  Scale-free conditions use E proportional to
        1/a; Robin conditions use a central difference.

    Examples
    --------
    >>> from casimirlab.spectrum import IntervalGeometry, BoundaryCondition
    >>> D = BoundaryCondition.dirichlet()
    >>> r = interval_casimir(IntervalGeometry(1.0, D, D), N=2000)
    >>> round(r.energy, 6)
    -0.1309
    """
    del xi
    spec, model, probe = _interval_energy(geom, N, window)
    E, Ese = model.coefficient(0), model.error(0)
    lg = model.coefficient(0, True) if model.has(0, True) else 0.0
    lgse = model.error(0, True) if model.has(0, True) else 0.0
    diag = {"spectrum": spec.digest(), "N": N, "fit": model.to_dict(),
            "t_inverse": {"coefficient": probe.coefficient(-1), "stderr": probe.error(-1)},
            "negative_modes": spec.negative_count}
    res = CasimirResult(geom.to_dict(), E, Ese, log_coefficient=lg, log_stderr=lgse,
                        diagnostics=diag)
    if force:
        if not geom.has_robin:
            res.force, res.force_stderr = E / geom.length, Ese / geom.length
            diag["force_method"] = "scaling"
        else:
            h = 1e-3 * geom.length
            vals = []
            for sgn in (1, -1):
                g2 = IntervalGeometry(geom.length + sgn * h, geom.left, geom.right)
                m = _interval_energy(g2, N, None)[1]
                vals.append((m.coefficient(0), m.error(0)))
            res.force = -(vals[0][0] - vals[1][0]) / (2 * h)
            res.force_stderr = math.hypot(vals[0][1], vals[1][1]) / (2 * h)
            diag["force_method"] = f"central difference, h={h:g}"
    return res


# -- parallel plates ----------------------------------------------------------

def plate_energy_trace(d, a, t, bc="dirichlet", epsrel=1e-14):
    """Cutoff energy per unit transverse area between two flat plates.

    Each mode of the separation direction carries a (d-1)-dimensional
    transverse continuum; the isotropic integral is done radially with the
    cutoff inside the integrand.  The error bound is the change against a
    100x looser tolerance (the built-in estimate saturates near 1e-11
    relative, far above the actual error) plus summation rounding.
    """
    if d not in (2, 3):
        raise DomainError("plates are supported for d = 2, 3")
    kind = BCKind(str(bc).lower())
    if kind is BCKind.ROBIN:
        raise DomainError("plates support Dirichlet or Neumann walls")
    m = d - 1
    shell = 2 * math.pi ** (m / 2) / math.gamma(m / 2)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    err = np.empty_like(t)
    first = 1 if kind is BCKind.DIRICHLET else 0
    eps = np.finfo(float).eps
    for i, tv in enumerate(t):
        nmax = int(math.ceil(45 * a / (math.pi * tv))) + 2
        c = np.arange(first, nmax + 1) * math.pi / a * tv

        def f(q, c=c):
            w = np.sqrt(q * q + c * c)
            return q ** (m - 1) * 0.5 * w * np.exp(-(w - c))
        sums = []
        for tol in (100 * epsrel, epsrel):
            I = integrate.quad_vec(f, 0, np.inf, epsabs=0, epsrel=tol, norm="max",
                                   limit=400)[0]
            sums.append(math.fsum(I * np.exp(-c)))
        pref = shell / (2 * math.pi) ** m / tv ** (m + 1)
        out[i] = sums[1] * pref
        err[i] = (abs(sums[1] - sums[0]) + 4 * eps * abs(sums[1])) * pref
    return out, err


def plate_energy_per_area(d, a=1.0, bc="dirichlet", t_window=None, n_points=48):
    """Casimir energy per unit area between parallel plates.

    Flat walls have no heat coefficients beyond the surface term, so E(t)
    is fitted on t^-(d+1), t^-d and even powers t^0, t^2, ...

    Returns
    -------
    CasimirResult
        ``energy`` is E/A; ``diagnostics["energy_density"]`` is E/(A a)
        and ``force`` is the pressure -d(E/A)/da.
    """
    if t_window is None:
        t_window = (0.02 * a, 0.3 * a)
    t = np.geomspace(*t_window, n_points)
    vals, errs = plate_energy_trace(d, a, t, bc)
    grid = TraceGrid(t, vals, errs, TraceKind.ENERGY, {"d": d, "a": a, "bc": str(bc)})

    def family(k):
        return [(-(d + 1), False), (-d, False)] + [(2 * j, False) for j in range(k + 1)]
    model = fit_adaptive(grid, family, 1, 10)
    E, Ese = model.coefficient(0), model.error(0)
    geom = {"type": "plates", "d": d, "separation": a, "bc": str(bc)}
    return CasimirResult(geom, E, Ese, force=d * E / a, force_stderr=d * Ese / a,
                         diagnostics={"fit": model.to_dict(), "energy_density": E / a,
                                      "energy_density_stderr": Ese / a})


# -- local densities ----------------------------------------------------------

def renormalized_density(geom, xi, x_grid, n_t=64, nuisance=10):
    """Pointwise constant term of the cutoff energy density on an interval.

    For each x the cutoff density is fitted on t^-2, t^-1, 1 plus up to
    ``nuisance`` regular powers t, t^2, ...  The window ends at a tenth of
    the distance to the nearer wall, well inside the radius where the
    image expansion converges.  Failed points are NaN and listed in ``meta["failures"]``.
    """
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    a = geom.length
    if np.any((x_grid <= 0) | (x_grid >= a)):
        raise DomainError("positions must lie strictly inside the interval")
    vals = np.full(x_grid.shape, np.nan)
    errs = np.full(x_grid.shape, np.nan)
    fits, failures = [], []
    dmin = float(np.min(np.minimum(x_grid, a - x_grid)))
    n_modes = _modes_for(geom, dmin / 200, None).omega.size
    for i, x in enumerate(x_grid):
        dist = min(x, a - x)
        t = np.geomspace(dist / 200, dist / 10, n_t)
        try:
            est = [energy_density_cutoff(geom, xi, tv, x, n_modes=n_modes) for tv in t]
            grid = TraceGrid(t, [e.value for e in est], [e.error for e in est],
                             TraceKind.ENERGY, {"x": float(x)})
            model = fit_adaptive(grid, lambda k: [-2, -1, 0] + list(range(1, k + 1)),
                                 0, nuisance)
        except (CasimirLabError, np.linalg.LinAlgError) as exc:
            failures.append({"x": float(x), "error": str(exc)})
            continue
        vals[i], errs[i] = model.coefficient(0), model.error(0)
        fits.append({"x": float(x), "chi2": model.chi2, "window": list(model.window),
                     "t_inverse": model.coefficient(-1)})
    return DensityProfile(x_grid, vals, errs, xi, 0.0, geom.to_dict(),
                          {"fits": fits, "failures": failures})


@dataclass
class BoundaryFit:
    """Near-wall fit rho(x) ~ c2/x^2 + c1/x + cl ln x + c0."""

    coefficients: dict
    stderr: dict
    xi: float
    gamma: float | None
    window: tuple
    chi2: float
    model: dict = field(default_factory=dict)

    LABELS = ("x^-2", "x^-1", "ln x", "1")

    def consistent_with_zero(self, k=3.0):
        return all(abs(self.coefficients[n]) <= k * self.stderr[n] for n in self.LABELS)

    def to_dict(self):
        return {"coefficients": self.coefficients, "stderr": self.stderr, "xi": self.xi,
                "gamma": self.gamma, "window": list(self.window), "chi2_reduced": self.chi2,
                "model": self.model}


_BOUNDARY_TERMS = [(-2, False), (-1, False), (0, True), (0, False)]
_KEYS = dict(zip(BoundaryFit.LABELS, _BOUNDARY_TERMS))


def halfline_fit_profile(gamma, xi, n=48, window=None):
    """Renormalized half-line profile on a window with x|gamma| small."""
    g = _halfline_g(gamma)
    if window is None:
        scale = 1.0 if math.isinf(g) or g == 0 else 1.0 / g
        window = (1e-5 * scale, 1e-3 * scale)
    from .kernels import halfline_density_profile
    return halfline_density_profile(gamma, xi, np.geomspace(*window, n))


def boundary_expansion_fit(profile, gamma=None, xi=None, max_nuisance=3):
    """Fit a renormalized half-line profile on {x^-2, x^-1, ln x, 1}.

    Regular corrections x^k ln x, x^k (k = 1, 2, ...) are added as
    nuisance terms until the residuals are consistent with the error
    bounds.  An identically zero profile yields zero coefficients.
    """
    xi = profile.xi if xi is None else xi
    if gamma is None:
        gamma = profile.geometry.get("gamma")
    x, y = profile.x, profile.values
    scale = np.max(np.abs(y), initial=0.0)
    sig = np.maximum(profile.errors, 1e-15 * np.abs(y))
    if scale == 0:
        sig = 1e-15 * x ** -2.0
    else:
        sig = np.maximum(sig, 1e-300)
    best = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WindowWarning)
        for k in range(max_nuisance + 1):
            terms = list(_BOUNDARY_TERMS)
            for j in range(1, k + 1):
                terms += [(j, True), (j, False)]
            try:
                model = least_squares(x, y, sig, terms, variable="x")
            except (ConditioningError, FitError):
                if best is None:
                    raise
                break
            best = model
            if model.chi2 <= 4:
                break
    coefs = {n: best.coefficient(*_KEYS[n]) for n in BoundaryFit.LABELS}
    errs = {n: best.error(*_KEYS[n]) for n in BoundaryFit.LABELS}
    return BoundaryFit(coefs, errs, xi, gamma, best.window, best.chi2, best.to_dict())


# -- surface energy and the boundary study -----------------------------------

@dataclass
class SurfaceDecomposition:
    t: np.ndarray
    volume: np.ndarray
    volume_err: np.ndarray
    surface: np.ndarray
    surface_err: np.ndarray
    phi2_wall: np.ndarray
    xi: float
    gamma: float | None

    def to_dict(self):
        return {"t": self.t.tolist(), "E_vol": self.volume.tolist(),
                "E_vol_err": self.volume_err.tolist(), "E_surf": self.surface.tolist(),
                "E_surf_err": self.surface_err.tolist(), "phi2_wall": self.phi2_wall.tolist(),
                "xi": self.xi, "gamma": self.gamma}


def _halfline_volume_quadrature(bc, xi, t, x_max=1e3):
    """Direct x-quadrature of the wall-induced density (slow cross-check).

    The tail beyond ``x_max`` is closed with the 1/x^2 law.
    """
    f = lambda x: halfline_energy_density(bc, xi, t, x, renormalized=True).value
    g = _halfline_g(bc)
    pts = sorted({0.0, t, 10 * t, x_max} | ({1 / g, 10 / g} if 0 < g < math.inf else set()))
    pts = [p for p in pts if p <= x_max]
    total, err = 0.0, 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, e = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=400)
        total, err = total + v, err + e
    tail = f(x_max) * x_max
    return total + tail, err + abs(tail) * 1e-2


def surface_decomposition(gamma, xi, t, method="swap"):
    """Volume integral and surface term of the half-line energy.

    E_vol(t) is the x-integral of the cutoff density with the free
    (wall-independent) density removed.  Doing the x-integral first,
    int_0^inf cos(2kx + 2 delta_k) dx = -sin(2 delta_k)/(2k), leaves
    E_vol(t) = (2 xi g/pi) int_0^inf k e^{-kt}/(k^2 + g^2) dk with g = -gamma;
    ``method="x-quadrature"`` integrates the density over x directly instead.
    E_surf(t) = (4 xi - 1)/2 gamma <phi(0)^2>(t).  Both diverge as t -> 0.
    """
    g = _halfline_g(gamma)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise DomainError("cutoff time must be positive")
    if method not in ("swap", "x-quadrature"):
        raise DomainError(f"unknown method {method!r}")
    vol, vol_e, surf, surf_e, p2 = (np.zeros_like(t) for _ in range(5))
    for i, tv in enumerate(t):
        if 0 < g < math.inf:
            est = halfline_phi_squared_wall(gamma, tv)
            p2[i] = est.value
            pref = 0.5 * (4 * xi - 1) * (-g)
            surf[i], surf_e[i] = pref * est.value, abs(pref) * est.error
            if method == "swap":
                # pi <phi(0)^2> is the k-integral above
                vol[i], vol_e[i] = 2 * xi * g * est.value, abs(2 * xi * g) * est.error
        elif g == 0:
            p2[i] = math.inf
        if method == "x-quadrature" and xi != 0:
            vol[i], vol_e[i] = _halfline_volume_quadrature(gamma, xi, tv)
        # Dirichlet and Neumann: the reflected density integrates to zero
    gam = None if math.isinf(g) else -g
    return SurfaceDecomposition(t, vol, vol_e, surf, surf_e, p2, xi, gam)


def halfline_phi2_closed(gamma, t):
    """<phi(0)^2>(t) via sine and cosine integrals."""
    g = _halfline_g(gamma)
    si, ci = special.sici(g * t)
    return (-ci * math.cos(g * t) - (si - math.pi / 2) * math.sin(g * t)) / math.pi


@dataclass
class StudyResult:
    t: np.ndarray
    integral: np.ndarray
    surface: np.ndarray
    energy: np.ndarray
    delta: np.ndarray
    errors: np.ndarray
    xi: float
    geometry: dict
    model: dict = field(default_factory=dict)

    def to_dict(self):
        return {"t": self.t.tolist(), "integral": self.integral.tolist(),
                "surface": self.surface.tolist(), "energy": self.energy.tolist(),
                "delta": self.delta.tolist(), "errors": self.errors.tolist(), "xi": self.xi,
                "geometry": self.geometry, "model": self.model}


def boundary_concentration_study(geom, xi, t_grid):
    """Delta(t) = int T00(t, x) dx + E_surf(t) - E(t) on an interval.

    All three pieces come from the same positive modes at the same t.  A
    small-t model on t^-2, t^-1, 1, t is fitted to Delta and returned with
    the raw curve; no limiting value is imposed.
    """
    t = np.sort(np.atleast_1d(np.asarray(t_grid, dtype=float)))
    if np.any(t <= 0):
        raise DomainError("cutoff times must be positive")
    n = _modes_for(geom, float(t.min()), None).omega.size
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        spec = build_interval_spectrum(geom, n)
    I, S, E, err = (np.empty_like(t) for _ in range(4))
    for i, tv in enumerate(t):
        vi = interval_density_integral(geom, xi, tv, n_modes=n)
        surf, serr = 0.0, 0.0
        for bc, pos in ((geom.left, 0.0), (geom.right, geom.length)):
            if bc.kind is BCKind.ROBIN:
                p = phi_squared(geom, tv, [pos], n_modes=n)
                pref = 0.5 * (4 * xi - 1) * bc.gamma
                surf += pref * float(p.value[0])
                serr += abs(pref) * float(p.error[0])
        ve = regularized_energy(spec, tv)
        I[i], S[i], E[i] = vi.value, surf, ve.value
        err[i] = vi.error + serr + ve.error
    delta = I + S - E
    model = {}
    if t.size >= 16:
        sig = np.maximum(err, 1e-300)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WindowWarning)
            m = least_squares(t, delta, sig, [-2, -1, 0, 1])
        model = m.to_dict()
    return StudyResult(t, I, S, E, delta, err, xi, geom.to_dict(), model)


# -- nonrelativistic null check ------------------------------------------------

def nonrel_energy(spec, m=1.0, window=None):
    """Renormalized nonrelativistic energy (1/4m) 2! [t^2 coefficient of T(t)].

    The mass only rescales the result.  Zero modes are excluded.

    Returns
    -------
    Estimate
    """
    if not m > 0:
        raise DomainError("mass must be positive")
    d = spec.dim
    model = fit_trace(spec, TraceKind.CYLINDER, d + 2, window, include_zero_modes=False)
    c, e = model.coefficient(Fraction(2)), model.error(Fraction(2))
    return Estimate(c / (2 * m), e / (2 * m))
