"""Riesz means of the counting function and their asymptotic fits.

R^alpha_lambda(L) = L^(-alpha) * sum_{lambda_n <= L} mult_n (L - lambda_n)^alpha,
R^alpha_omega(W)  = W^(-alpha) * sum_{omega_n <= W} mult_n (W - omega_n)^alpha.

Both are alpha-fold iterated integrals of the staircase taken from 0,
written in closed form, so no quadrature is involved.  With this
normalization the Laplace transform of the lambda-mean reproduces the heat
coefficients as b_s = Gamma(alpha + (d-s)/2 + 1) / alpha! * a_{alpha s}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import coeffs as cf
from .errors import DomainError, OutOfRangeError
from .fit import least_squares
from .spectrum import LD

N_POINTS = 64
MAX_ALPHA = 4


@dataclass(frozen=True)
class RieszMean:
    alpha: int
    variable: str
    points: np.ndarray
    values: np.ndarray
    spectrum: str

    def to_dict(self):
        return {"alpha": self.alpha, "variable": self.variable, "spectrum": self.spectrum,
                "points": self.points.tolist(), "values": np.asarray(self.values, float).tolist()}


@dataclass
class RieszCoefficients:
    """Fitted Riesz coefficients a_{alpha s} (lambda) or c_{alpha s}, d_{alpha s} (omega).

    ``stderr`` combines the statistical error with an estimate of the bias
    from the first omitted remainder term.
    """

    alpha: int
    variable: str
    d: int
    values: dict
    stderr: dict
    log_values: dict
    log_stderr: dict
    window: tuple
    residual: float
    condition: float
    meta: dict = field(default_factory=dict)

    def heat_coefficient(self, s):
        """(b_s, stderr) implied by a lambda fit."""
        if self.variable != "lambda":
            raise DomainError("heat coefficients follow from lambda means")
        f = float(cf.b_from_riesz_lambda(self.d, self.alpha, s, 1.0))
        return f * self.values[s], abs(f) * self.stderr[s]

    def cylinder_coefficients(self, s):
        """(e_s, f_s) implied by an omega fit."""
        if self.variable != "omega":
            raise DomainError("cylinder coefficients follow from omega means")
        return cf.ef_from_riesz_omega(self.d, self.alpha, s, self.values[s],
                                      self.log_values.get(s, 0.0))

    def to_dict(self):
        rows = []
        for s in sorted(self.values):
            row = {"s": s, "value": self.values[s], "stderr": self.stderr[s]}
            if s in self.log_values:
                row.update(log_value=self.log_values[s], log_stderr=self.log_stderr[s])
            rows.append(row)
        return {"alpha": self.alpha, "variable": self.variable, "d": self.d, "table": rows,
                "window": list(self.window), "residual_rms": self.residual,
                "condition_number": self.condition, "meta": self.meta}


def _check_alpha(alpha):
    if int(alpha) != alpha or alpha < 0:
        raise DomainError("alpha must be a nonnegative integer")
    return int(alpha)


def _riesz(steps, mult, alpha, x, chunk=256):
    x = np.atleast_1d(np.asarray(x, dtype=LD))
    out = np.zeros(x.shape, dtype=LD)
    steps = steps.astype(LD)
    mult = mult.astype(LD)
    for i in range(0, x.size, chunk):
        xs = x[i:i + chunk, None]
        diff = xs - steps[None, :]
        w = np.where(diff >= 0, np.maximum(diff, 0) ** alpha if alpha else LD(1), LD(0))
        tot = (w * mult).sum(axis=1)
        xx = x[i:i + chunk]
        with np.errstate(divide="ignore", invalid="ignore"):
            val = tot / xx ** alpha
        # at x = 0 only zero modes contribute, each with weight 1
        val = np.where(xx == 0, (mult * (steps == 0)).sum(), val)
        out[i:i + chunk] = val
    return out


def _range_check(spec, lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("Riesz means are defined for lambda >= 0")
    if np.any(lam > spec.ceiling * (1 + 1e-15)):
        raise OutOfRangeError(f"lambda beyond the certified ceiling {spec.ceiling:.6g}")


def riesz_mean_lambda(spec, alpha, lam):
    """Lambda-Riesz mean of order ``alpha``.

    >>> from casimirlab.spectrum import Spectrum
    >>> float(riesz_mean_lambda(Spectrum([1.0], ceiling=10.0, weyl_constant=0), 1, 2.0))
    0.5
    """
    alpha = _check_alpha(alpha)
    _range_check(spec, lam)
    out = _riesz(spec.values, spec.multiplicities, alpha, lam)
    return out[0] if np.ndim(lam) == 0 else out


def riesz_mean_omega(spec, alpha, omega):
    """Omega-Riesz mean of order ``alpha`` (steps at omega_n = sqrt(lambda_n))."""
    alpha = _check_alpha(alpha)
    om = np.asarray(omega, dtype=float)
    if np.any(om < 0):
        raise DomainError("Riesz means are defined for omega >= 0")
    _range_check(spec, om ** 2)
    out = _riesz(spec.omega, spec.multiplicities, alpha, omega)
    return out[0] if np.ndim(omega) == 0 else out


def riesz_mean(spec, alpha, points, variable="lambda"):
    fun = riesz_mean_lambda if variable == "lambda" else riesz_mean_omega
    vals = np.atleast_1d(fun(spec, alpha, points))
    return RieszMean(int(alpha), variable, np.atleast_1d(np.asarray(points, float)), vals,
                     spec.digest())


def _terms(d, alpha, variable):
    if variable == "lambda":
        return [((Fraction(d - s, 2), False), s) for s in range(alpha + 1)]
    out = []
    for s in range(alpha + 1):
        out.append(((Fraction(d - s), False), s))
        if cf.is_log_order(d, s):
            out.append(((Fraction(d - s), True), s))
    return out


def _fit(spec, alpha, window, variable, n_points):
    alpha = _check_alpha(alpha)
    if alpha > MAX_ALPHA:
        raise DomainError(f"alpha <= {MAX_ALPHA} supported")
    d = spec.dim
    tagged = _terms(d, alpha, variable)
    if spec.count == 0:
        zero = {s: 0.0 for _, s in tagged}
        logs = {s: 0.0 for (p, lg), s in tagged if lg}
        return RieszCoefficients(alpha, variable, d, zero, dict(zero), logs, dict(logs),
                                 tuple(window or (0.0, 0.0)), 0.0, 1.0, {"empty": True})
    top = spec.ceiling if variable == "lambda" else math.sqrt(spec.ceiling)
    if window is None:
        window = (top / 10, top)
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise DomainError("window must satisfy 0 < lo < hi")
    x = np.geomspace(lo, hi, n_points)
    if variable == "lambda":
        x[-1] = min(x[-1], spec.ceiling)
        y = riesz_mean_lambda(spec, alpha, x)
        rem = Fraction(d - alpha - 1, 2)
    else:
        x[-1] = min(x[-1], math.sqrt(spec.ceiling))
        y = riesz_mean_omega(spec, alpha, x)
        rem = Fraction(d - alpha - 1)
    terms = [t for t, _ in tagged]
    sigma = x ** float(rem)
    model = least_squares(x, y, sigma, terms, variable=variable, absolute_sigma=False)
    # bias: the first omitted term at the observed residual amplitude
    probe = least_squares(x, sigma.astype(LD), sigma, terms, variable=variable,
                          absolute_sigma=False)
    amp = math.sqrt(model.chi2)
    vals, errs, lvals, lerrs = {}, {}, {}, {}
    for (p, lg), s in tagged:
        j = model.index(p, lg)
        se = math.hypot(model.stderr[j], amp * abs(probe.coefficients[j]))
        if lg:
            lvals[s], lerrs[s] = float(model.coefficients[j]), se
        else:
            vals[s], errs[s] = float(model.coefficients[j]), se
    resid = np.asarray(y, float) - model.evaluate(x)
    return RieszCoefficients(
        alpha, variable, d, vals, errs, lvals, lerrs, (lo, float(x[-1])),
        float(np.sqrt(np.mean(resid ** 2))), model.condition,
        {"spectrum": spec.digest(), "n_points": n_points, "remainder_power": str(rem),
         "scaled_residual": amp, "terms": [str(p) + ("L" if lg else "") for p, lg in terms]})


def fit_riesz_lambda(spec, alpha, window=None, n_points=N_POINTS):
    """Fit R^alpha_lambda on {lambda^((d-s)/2)}, s = 0..alpha.

    The default window is the top decade below the certified ceiling.
    """
    return _fit(spec, alpha, window, "lambda", n_points)


def fit_riesz_omega(spec, alpha, window=None, n_points=N_POINTS):
    """Fit R^alpha_omega on {omega^(d-s)} plus omega^(d-s) ln omega at log orders."""
    return _fit(spec, alpha, window, "omega", n_points)
