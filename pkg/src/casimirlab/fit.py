"""Weighted least-squares extraction of asymptotic expansion coefficients.

Models are finite sums of c * t^p and c * t^p ln t.  The design matrix is
built in extended precision with each column scaled to unit maximum.  It
is factorized once in double precision (SVD) and the solution is polished
by iterative refinement with residuals in extended precision, so the
attainable accuracy is set by the data rather than by double rounding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import coeffs as cf
from .errors import ConditioningError, CrossValidationError, DomainError, FitError
from .kernels import TraceKind, auto_window, trace_grid
from .spectrum import LD

MAX_CONDITION = 1e12
MIN_POINTS_PER_TERM = 4
CHI2_GOOD = 4.0
CHI2_WARN = 100.0
N_POINTS = 64


class WindowWarning(UserWarning):
    """Residuals are inconsistent with the fitted model on this window."""


def _norm_term(term):
    if isinstance(term, tuple):
        p, lg = term
    else:
        p, lg = term, False
    return (Fraction(p).limit_denominator(8) if not isinstance(p, Fraction) else p, bool(lg))


def parse_terms(text):
    """Parse a term list such as ``"-1, 0, 1L, 1"``; ``L`` marks a log term."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        lg = tok.upper().endswith("L")
        body = tok[:-1] if lg else tok
        try:
            out.append((Fraction(body), lg))
        except ValueError:
            raise DomainError(f"bad term {tok!r}") from None
    return out


def _sorted_terms(terms):
    terms = [_norm_term(t) for t in terms]
    if len(set(terms)) != len(terms):
        raise DomainError("duplicate (power, log) terms in model")
    return sorted(terms, key=lambda pl: (pl[0], not pl[1]))


@dataclass
class ExpansionModel:
    """Fitted expansion sum_k c_k x^(p_k) (ln x)^(l_k)."""

    terms: list
    coefficients: np.ndarray
    stderr: np.ndarray
    window: tuple
    chi2: float
    condition: float
    n_points: int
    variable: str = "t"
    warnings: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def index(self, power, log=False):
        key = _norm_term((power, log))
        try:
            return self.terms.index(key)
        except ValueError:
            raise KeyError(f"term {key} not in model") from None

    def has(self, power, log=False):
        return _norm_term((power, log)) in self.terms

    def coefficient(self, power, log=False):
        return float(self.coefficients[self.index(power, log)])

    def error(self, power, log=False):
        return float(self.stderr[self.index(power, log)])

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for (p, lg), c in zip(self.terms, self.coefficients):
            out += c * x ** float(p) * (np.log(x) if lg else 1.0)
        return out

    def to_dict(self):
        return {
            "variable": self.variable,
            "terms": [{"power": str(p), "log": lg, "coefficient": float(c), "stderr": float(e)}
                      for (p, lg), c, e in zip(self.terms, self.coefficients, self.stderr)],
            "window": list(self.window), "chi2_reduced": self.chi2,
            "condition_number": self.condition, "n_points": self.n_points,
            "warnings": list(self.warnings), "meta": self.meta,
        }


def least_squares(x, y, sigma, terms, variable="t", refine=6, absolute_sigma=True):
    """Weighted fit of y(x) on the basis {x^p, x^p ln x}.

    Parameters
    ----------
    x : array_like of float, positive
    y : array_like, may be ``np.longdouble``
    sigma : array_like of float
        Per-point error bounds, used as weights.
    terms : sequence of (power, log)
    absolute_sigma : bool
        If True, ``sigma`` are genuine bounds and standard errors are only
        inflated when chi^2 exceeds 1.  If False, ``sigma`` are relative
        weights and standard errors are scaled by the residual chi^2.

    Returns
    -------
    ExpansionModel
    """
    terms = _sorted_terms(terms)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=LD)
    sigma = np.asarray(sigma, dtype=float)
    n, k = x.size, len(terms)
    if k == 0:
        raise DomainError("empty model")
    if n < MIN_POINTS_PER_TERM * k:
        raise FitError(f"{n} points cannot support {k} terms "
                       f"(need {MIN_POINTS_PER_TERM} per term)")
    if np.any(x <= 0):
        raise DomainError("expansion variable must be positive")
    # no point is known better than its own extended-precision rounding
    ay = np.abs(y.astype(float))
    floor = np.maximum(float(np.finfo(LD).eps) * ay, max(1e-25 * np.max(ay, initial=0.0), 1e-300))
    sig = np.maximum(sigma, floor)
    if np.all(sigma <= 0):
        sig = np.ones_like(sigma)
    # common scale keeps the weighted system within double range
    unit = float(np.max(sig))
    sig = sig / unit
    y = y / LD(unit)
    xl = x.astype(LD)
    lx = np.log(xl)
    A = np.empty((n, k), dtype=LD)
    for j, (p, lg) in enumerate(terms):
        col = np.power(xl, LD(p.numerator) / LD(p.denominator))
        A[:, j] = col * lx if lg else col
    scale = np.abs(A).max(axis=0)
    scale[scale == 0] = 1
    Aw = A / scale / sig.astype(LD)[:, None]
    yw = y / sig.astype(LD)
    U, s, Vt = np.linalg.svd(Aw.astype(float), full_matrices=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    if cond > MAX_CONDITION:
        lo, hi = float(x.min()), float(x.max())
        suggest = (lo, math.sqrt(lo * hi))
        raise ConditioningError(
            f"basis condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}; "
            f"shrink the window, e.g. to ({suggest[0]:.4g}, {suggest[1]:.4g})",
            condition=cond, suggested_window=suggest)
    coef = np.zeros(k, dtype=LD)
    for _ in range(refine):
        r = yw - Aw @ coef
        coef = coef + (Vt.T @ ((U.T @ r.astype(float)) / s)).astype(LD)
    res = (yw - Aw @ coef).astype(float)
    dof = max(n - k, 1)
    chi2 = float(res @ res) / dof
    cov = (Vt.T / s ** 2) @ Vt
    inflate = max(1.0, chi2) if absolute_sigma else chi2
    se = unit * np.sqrt(np.diag(cov) * inflate) / scale.astype(float)
    values = (coef * LD(unit) / scale).astype(float)
    # the reported double cannot be more precise than its own rounding
    se = np.hypot(se, np.finfo(float).eps * np.abs(values))
    model = ExpansionModel(terms, values, se, (float(x.min()), float(x.max())), chi2, cond, n,
                           variable)
    if absolute_sigma and chi2 > CHI2_WARN:
        msg = (f"reduced chi^2 = {chi2:.3g} on window {model.window}: residuals exceed the "
               "error bounds, window too wide or model too short")
        model.warnings.append(msg)
        warnings.warn(msg, WindowWarning, stacklevel=2)
    return model


def fit_expansion(grid, terms, window=None):
    """Fit a TraceGrid (optionally restricted to ``window``) on ``terms``.

    >>> import numpy as np
    >>> from casimirlab.kernels import TraceGrid
    >>> t = np.geomspace(0.01, 1, 40)
    >>> g = TraceGrid(t, 2 / t - 0.5 + 0.3 * t, np.full(40, 1e-12), "cylinder")
    >>> m = fit_expansion(g, [-1, 0, 1])
    >>> [round(float(c), 10) for c in m.coefficients]
    [2.0, -0.5, 0.3]
    """
    if window is not None:
        grid = grid.window(*window)
    vals = np.abs(grid.values.astype(float))
    bad = grid.errors > 1e-3 * np.maximum(vals, 1e-300)
    if np.any(bad & (vals > 0)):
        raise FitError("grid error bounds exceed 1e-3 of the trace values; "
                       "move the window to larger t or increase N")
    model = least_squares(grid.t, grid.values, grid.errors, terms)
    model.meta.update({"kind": grid.kind.value, **grid.meta})
    return model


# -- model families -----------------------------------------------------------

def heat_terms(d, order):
    """t^((s-d)/2) for s = 0..order."""
    return [(Fraction(s - d, 2), False) for s in range(order + 1)]


def cylinder_terms(d, order, energy=False):
    """Cylinder (or energy, if ``energy``) expansion terms through s = order.

    T: t^(s-d) for all s, plus t^(s-d) ln t when s-d is odd and positive.
    E = -T'/2: the constant of T drops out and every power shifts by -1.
    """
    out = []
    for s in range(order + 1):
        p = Fraction(s - d)
        log = cf.is_log_order(d, s)
        if energy:
            if s == d:
                continue
            p -= 1
        out.append((p, False))
        if log:
            out.append((p, True))
    return out


def _stable(lower, higher):
    """Shared coefficients agree within the higher model's standard errors."""
    for term, c, e in zip(lower.terms, lower.coefficients, lower.stderr):
        j = higher.terms.index(term)
        if abs(c - higher.coefficients[j]) > max(higher.stderr[j], e):
            return False
    return True


def _add_truncation_error(lower, higher):
    """Fold the shift to the next order into the standard errors.

    A short model can fit with small chi^2 while an omitted term that is
    nearly collinear with the basis biases the coefficients; the change on
    adding that term is the direct estimate of this bias.
    """
    shifts = np.array([abs(c - higher.coefficients[higher.terms.index(t)])
                       for t, c in zip(lower.terms, lower.coefficients)])
    lower.stderr = np.hypot(lower.stderr, shifts)
    lower.meta["truncation_shift"] = shifts.tolist()


def fit_adaptive(grid, family, min_order, max_order=None, window=None, extra=()):
    """Increase the expansion order until the fit is consistent and stable.

    An order is accepted when its reduced chi^2 is <= 4 and adding the
    next order moves none of its coefficients by more than a standard
    error.  The shift is then added to the reported standard errors.  The
    search also ends when the basis becomes ill-conditioned or
    the points run out, returning the best model found.  ``family(order)``
    returns the term list for an order.
    """
    if window is not None:
        grid = grid.window(*window)
    if max_order is None:
        max_order = min_order + 16
    best, prev, tried = None, None, []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WindowWarning)
        for order in range(min_order, max_order + 1):
            terms = list(family(order)) + [t for t in extra]
            terms = list(dict.fromkeys(_norm_term(t) for t in terms))
            try:
                model = fit_expansion(grid, terms)
            except (ConditioningError, FitError) as exc:
                tried.append({"order": order, "stopped": type(exc).__name__})
                if best is None:
                    raise
                break
            tried.append({"order": order, "chi2": model.chi2, "condition": model.condition})
            if prev is not None and prev.chi2 <= CHI2_GOOD and _stable(prev, model):
                best = prev
                _add_truncation_error(prev, model)
                break
            if best is None or model.chi2 < best.chi2 or best.chi2 > CHI2_GOOD:
                best = model
            if model.chi2 <= CHI2_GOOD:
                best = model
            prev = model
    best.meta["orders_tried"] = tried
    if best.chi2 > CHI2_WARN:
        msg = f"adaptive fit ended with reduced chi^2 = {best.chi2:.3g}; window too wide"
        best.warnings.append(msg)
        warnings.warn(msg, WindowWarning, stacklevel=2)
    return best


def geometric_grid(window, n=N_POINTS):
    return np.geomspace(window[0], window[1], n)


def fit_trace(spec, kind, min_order, window=None, extra=(), n_points=N_POINTS,
              include_zero_modes=None, max_order=None):
    """Sample a trace on a geometric grid and fit it adaptively."""
    kind = TraceKind(kind)
    d = spec.dim
    if window is None:
        window = auto_window(spec, kind)
    grid = trace_grid(spec, kind, geometric_grid(window, n_points), include_zero_modes)
    if kind is TraceKind.HEAT:
        family = lambda k: heat_terms(d, k)
    elif kind is TraceKind.CYLINDER:
        family = lambda k: cylinder_terms(d, k)
    elif kind is TraceKind.ENERGY:
        family = lambda k: cylinder_terms(d, k, energy=True)
    else:
        raise DomainError("no expansion family for the auxiliary trace")
    model = fit_adaptive(grid, family, min_order, max_order, extra=extra)
    model.meta["window_requested"] = list(window)
    return model


# -- theorem harness ------------------------------------------------------------

def _check(name, s, fitted, fitted_se, factor, source, source_se, nsig=3.0):
    pred = float(factor) * source
    pred_se = math.hypot(abs(float(factor)) * source_se, np.finfo(float).eps * abs(pred))
    comb = math.hypot(fitted_se, pred_se)
    z = abs(fitted - pred) / comb if comb > 0 else (0.0 if fitted == pred else math.inf)
    return cf.CrossCheck(name, s, fitted, fitted_se, pred, pred_se, z, z <= nsig)


def extract_coefficient_set(spec, d=None, s_max=None, strict=True, heat_window=None,
                            cylinder_window=None, n_points=N_POINTS):
    """Fit heat and cylinder traces and cross-validate them.

    Every e_s (or f_s) determined by b_s is predicted from the fitted heat
    coefficient and compared with its independently fitted value; the
    comparison passes within 3 combined standard errors.  The nonlocal e_s
    (s-d odd and positive) are stored with provenance ``heat-blind``.

    Both traces include zero modes here so that they describe the same
    operator.

    Raises
    ------
    CrossValidationError
        If ``strict`` and any comparison fails.
    """
    d = spec.dim if d is None else int(d)
    if d != spec.dim:
        raise DomainError(f"spectrum has dimension {spec.dim}, not {d}")
    s_max = d + 2 if s_max is None else int(s_max)
    heat = fit_trace(spec, TraceKind.HEAT, s_max, heat_window, n_points=n_points,
                     include_zero_modes=True)
    cyl = fit_trace(spec, TraceKind.CYLINDER, s_max, cylinder_window, n_points=n_points,
                    include_zero_modes=True)
    cs = cf.CoefficientSet(d)
    cs.diagnostics = {"heat": heat.to_dict(), "cylinder": cyl.to_dict(),
                      "spectrum": spec.digest(), "s_max": s_max,
                      "experimental": s_max > d + 2}
    for s in range(s_max + 1):
        p = Fraction(s - d, 2)
        b, bse = heat.coefficient(p), heat.error(p)
        cs.set("b", s, b, bse)
        a_ss = float(cf.a_from_b(d, s, b))
        a_se = abs(float(cf.a_from_b(d, s, 1.0))) * bse
        cs.set("a", s, a_ss, a_se, "derived")
        q = Fraction(s - d)
        e, ese = cyl.coefficient(q), cyl.error(q)
        if cf.is_log_order(d, s):
            f, fse = cyl.coefficient(q, True), cyl.error(q, True)
            cs.set("e", s, e, ese, "heat-blind")
            cs.set("f", s, f, fse)
            cs.set("dlog", s, float(cf.d_from_a(d, s, a_ss)),
                   abs(float(cf.d_from_a_factor(d, s))) * a_se, "derived")
            cs.checks.append(_check("f", s, f, fse, cf.f_from_b_factor(d, s), b, bse))
        else:
            cs.set("e", s, e, ese)
            cs.set("c", s, float(cf.c_from_a(d, s, a_ss)),
                   abs(float(cf.c_from_a_factor(d, s))) * a_se, "derived")
            cs.checks.append(_check("e", s, e, ese, cf.e_from_b_factor(d, s), b, bse))
    if strict and not cs.passed:
        failed = [c for c in cs.checks if not c.passed]
        lines = [f"{c.name}_{c.s}: fitted {c.fitted:.12g} +- {c.fitted_stderr:.3g}, "
                 f"predicted {c.predicted:.12g} +- {c.predicted_stderr:.3g} (z = {c.z:.2f})"
                 for c in failed]
        raise CrossValidationError("heat/cylinder cross-validation failed:\n  "
                                   + "\n  ".join(lines), report=cs)
    return cs
