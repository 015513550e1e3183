"""Exact half-integer gamma arithmetic and coefficient conversions.

Conventions
-----------
Heat trace       K(t) ~ sum_s b_s t^((s-d)/2)
Cylinder trace   T(t) ~ sum_s e_s t^(s-d) + sum f_s t^(s-d) ln t
                 (log terms only for s-d odd and positive)
Riesz means      R^alpha_lambda mu = lambda^-alpha sum (lambda - lambda_n)^alpha
                     ~ sum_s a_{alpha s} lambda^((d-s)/2)
                 R^alpha_omega mu  ~ sum_s c_{alpha s} omega^(d-s)
                     + sum d_{alpha s} omega^(d-s) ln omega

Conversions are evaluated exactly when the input is exact (``int``,
``Fraction``, ``HalfGamma`` or ``ExactSum``) and in floating point
otherwise.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, GammaPoleError, UndeterminedCoefficientError

EULER_GAMMA = 0.57721566490153286060651209008240243


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a number here")
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, float):
        f = Fraction(x)
        if f.denominator > 2:
            raise DomainError(f"{x!r} is not a multiple of 1/2")
        return f
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


class HalfGamma:
    """Exact number of the form  rational * (sqrt(pi))**k.

    Every Gamma value at a half-integer (other than a pole) has this form,
    and the class is closed under multiplication and division.

    >>> gamma_half(Fraction(3, 2))
    HalfGamma(1/2, sqrt_pi_power=1)
    """

    __slots__ = ("rational", "sqrt_pi_power")

    def __init__(self, rational, sqrt_pi_power=0):
        self.rational = Fraction(rational)
        self.sqrt_pi_power = int(sqrt_pi_power) if self.rational else 0

    def __repr__(self):
        return f"HalfGamma({self.rational}, sqrt_pi_power={self.sqrt_pi_power})"

    def __str__(self):
        if self.sqrt_pi_power == 0:
            return str(self.rational)
        p = self.sqrt_pi_power
        factor = "sqrt(pi)" if p == 1 else f"pi^({p}/2)"
        return f"{self.rational}*{factor}"

    def __float__(self):
        return float(self.rational) * math.pi ** (self.sqrt_pi_power / 2)

    def __bool__(self):
        return self.rational != 0

    def _coerce(self, other):
        if isinstance(other, HalfGamma):
            return other
        if isinstance(other, (numbers.Rational,)) and not isinstance(other, bool):
            return HalfGamma(Fraction(other), 0)
        return None

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, ExactSum):
                return ExactSum.from_half_gamma(self) * other
            return NotImplemented
        return HalfGamma(self.rational * o.rational, self.sqrt_pi_power + o.sqrt_pi_power)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.rational == 0:
            raise ZeroDivisionError("division by exact zero")
        return HalfGamma(self.rational / o.rational, self.sqrt_pi_power - o.sqrt_pi_power)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return HalfGamma(-self.rational, self.sqrt_pi_power)

    def __pow__(self, n):
        if not isinstance(n, numbers.Integral):
            return NotImplemented
        return HalfGamma(self.rational ** n, self.sqrt_pi_power * n)

    def __add__(self, other):
        return ExactSum.from_half_gamma(self) + other

    __radd__ = __add__

    def __sub__(self, other):
        return ExactSum.from_half_gamma(self) - other

    def __rsub__(self, other):
        return (-self) + other

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, ExactSum):
                return ExactSum.from_half_gamma(self) == other
            return NotImplemented
        return self.rational == o.rational and self.sqrt_pi_power == o.sqrt_pi_power

    def __hash__(self):
        return hash((self.rational, self.sqrt_pi_power))


class ExactSum:
    """Finite sum  sum_{k,j} q_{kj} (sqrt(pi))^k gamma_E^j  with rational q.

    Carries Euler's constant symbolically through psi(n) = H_{n-1} - gamma_E.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {key: Fraction(v) for key, v in (terms or {}).items() if v != 0}

    @classmethod
    def from_half_gamma(cls, h):
        return cls({(h.sqrt_pi_power, 0): h.rational})

    @classmethod
    def euler(cls):
        return cls({(0, 1): Fraction(1)})

    @classmethod
    def _lift(cls, x):
        if isinstance(x, ExactSum):
            return x
        if isinstance(x, HalfGamma):
            return cls.from_half_gamma(x)
        if isinstance(x, numbers.Rational) and not isinstance(x, bool):
            return cls({(0, 0): Fraction(x)})
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for k, v in o.terms.items():
            out[k] = out.get(k, Fraction(0)) + v
        return ExactSum(out)

    __radd__ = __add__

    def __neg__(self):
        return ExactSum({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        out = {}
        for (k1, j1), v1 in self.terms.items():
            for (k2, j2), v2 in o.terms.items():
                key = (k1 + k2, j1 + j2)
                out[key] = out.get(key, Fraction(0)) + v1 * v2
        return ExactSum(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (HalfGamma,)) or (isinstance(other, numbers.Rational)
                                               and not isinstance(other, bool)):
            return self * (HalfGamma(1) / other)
        return NotImplemented

    def __float__(self):
        return math.fsum(float(v) * math.pi ** (k / 2) * EULER_GAMMA ** j
                         for (k, j), v in self.terms.items())

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"ExactSum({self.terms})"

    def simplify(self):
        """Return a HalfGamma when the sum has a single gamma_E-free term."""
        if not self.terms:
            return HalfGamma(0)
        if len(self.terms) == 1:
            (k, j), v = next(iter(self.terms.items()))
            if j == 0:
                return HalfGamma(v, k)
        return self


def gamma_half(z):
    """Exact Gamma(z) for z an integer or half-integer.

    Raises
    ------
    GammaPoleError
        If z is zero or a negative integer.

    Examples
    --------
    >>> str(gamma_half(Fraction(-3, 2)))
    '4/3*sqrt(pi)'
    >>> gamma_half(4)
    HalfGamma(6, sqrt_pi_power=0)
    """
    z = _frac(z)
    if z.denominator == 1:
        n = z.numerator
        if n <= 0:
            raise GammaPoleError(f"Gamma has a pole at {n}")
        return HalfGamma(math.factorial(n - 1), 0)
    if z.denominator != 2:
        raise DomainError(f"{z} is not a half-integer")
    val = HalfGamma(1, 1)
    w = Fraction(1, 2)
    while w < z:
        val = val * w
        w += 1
    while w > z:
        w -= 1
        val = val / w
    return val


def digamma_int(n):
    """psi(n) = H_{n-1} - gamma_E for a positive integer n, exactly."""
    if n < 1:
        raise GammaPoleError("digamma has poles at nonpositive integers")
    harmonic = sum((Fraction(1, k) for k in range(1, n)), Fraction(0))
    return ExactSum({(0, 0): harmonic, (0, 1): Fraction(-1)})


def is_exact(x):
    return (isinstance(x, (HalfGamma, ExactSum, Fraction))
            or (isinstance(x, numbers.Integral) and not isinstance(x, bool)))


def _apply(factor, value):
    """factor * value, exact when value is exact."""
    if is_exact(value):
        out = factor * value
        return out.simplify() if isinstance(out, ExactSum) else out
    return float(factor) * float(value)


def _check_ds(d, s):
    if int(d) != d or d < 1:
        raise DomainError("dimension must be a positive integer")
    if int(s) != s or s < 0:
        raise DomainError("order s must be a nonnegative integer")
    return int(d), int(s)


def is_log_order(d, s):
    """True when s - d is odd and positive (log term, nonlocal e_s)."""
    return s > d and (s - d) % 2 == 1


# -- heat -> cylinder ---------------------------------------------------------

def e_from_b_factor(d, s):
    d, s = _check_ds(d, s)
    if is_log_order(d, s):
        raise UndeterminedCoefficientError(
            f"e_{s} is not determined by heat coefficients in d={d} (s-d odd and positive)")
    return HalfGamma(Fraction(2) ** (d - s), -1) * gamma_half(Fraction(d - s + 1, 2))


def e_from_b(d, s, b_s):
    """Cylinder coefficient e_s from heat coefficient b_s (s-d even or negative).

    >>> round(float(e_from_b(1, 0, 1)), 6)
    1.128379
    """
    return _apply(e_from_b_factor(d, s), b_s)


def f_from_b_factor(d, s):
    d, s = _check_ds(d, s)
    if not is_log_order(d, s):
        raise DomainError(f"f_{s} exists only for s-d odd and positive (d={d})")
    sign = -1 if ((s - d + 1) // 2) % 2 else 1
    return HalfGamma(sign * Fraction(2) ** (d - s + 1), -1) / gamma_half(Fraction(s - d + 1, 2))


def f_from_b(d, s, b_s):
    """Log coefficient f_s from b_s (s-d odd and positive).

    >>> round(float(f_from_b(1, 2, 1)), 6)
    -0.56419
    """
    return _apply(f_from_b_factor(d, s), b_s)


# -- Riesz means <-> traces ---------------------------------------------------

def b_from_a_factor(d, s):
    d, s = _check_ds(d, s)
    return gamma_half(Fraction(d + s, 2) + 1) / gamma_half(s + 1)


def b_from_a(d, s, a_ss):
    """Heat coefficient b_s from the diagonal Riesz coefficient a_ss."""
    return _apply(b_from_a_factor(d, s), a_ss)


def a_from_b(d, s, b_s):
    return _apply(HalfGamma(1) / b_from_a_factor(d, s), b_s)


def b_from_riesz_lambda(d, alpha, s, a_alpha_s):
    """b_s from any a_{alpha s} with s <= alpha.

    Term-by-term Laplace transform of the lambda-mean gives
    b_s = Gamma(alpha + (d-s)/2 + 1) / Gamma(alpha + 1) * a_{alpha s},
    which reduces to ``b_from_a`` on the diagonal.
    """
    d, s = _check_ds(d, s)
    if alpha < s:
        raise DomainError("need s <= alpha")
    factor = gamma_half(Fraction(d - s, 2) + alpha + 1) / gamma_half(alpha + 1)
    return _apply(factor, a_alpha_s)


def c_from_a_factor(d, s):
    d, s = _check_ds(d, s)
    if (d - s) < 0 and (d - s) % 2 == 1:
        raise UndeterminedCoefficientError(
            f"c_{s}{s} is undetermined by a_{s}{s} in d={d} (d-s odd and negative)")
    num = gamma_half(Fraction(d - s + 1, 2)) * gamma_half(Fraction(d + s, 2) + 1)
    den = HalfGamma(Fraction(2) ** s) * gamma_half(Fraction(d + 1, 2)) * gamma_half(
        Fraction(d, 2) + 1)
    return num / den


def c_from_a(d, s, a_ss):
    """c_ss from a_ss when d-s is even or positive.

    >>> c_from_a(1, 0, 1)
    HalfGamma(1, sqrt_pi_power=0)
    """
    return _apply(c_from_a_factor(d, s), a_ss)


def d_from_a_factor(d, s):
    d, s = _check_ds(d, s)
    if not is_log_order(d, s):
        raise DomainError(f"d_{s}{s} exists only for d-s odd and negative (d={d})")
    sign = 1 if (d + 1) % 2 == 0 else -1
    pref = Fraction(sign, math.factorial(s - d - 1) * math.factorial(d))
    return HalfGamma(pref) * gamma_half(Fraction(s - d, 2)) / gamma_half(Fraction(-d - s, 2))


def d_from_a(d, s, a_ss):
    """Log Riesz coefficient d_ss from a_ss when d-s is odd and negative.

    >>> d_from_a(1, 2, 1)
    HalfGamma(3/4, sqrt_pi_power=0)
    """
    return _apply(d_from_a_factor(d, s), a_ss)


def ef_from_cd(d, s, c_ss, d_ss=0):
    """Cylinder coefficients (e_s, f_s) from omega-Riesz coefficients.

    For d-s even or positive, e_s = Gamma(d+1)/Gamma(s+1) c_ss and f_s = 0.
    For d-s odd and negative, f_s = -Gamma(d+1)/Gamma(s+1) d_ss and
    e_s = Gamma(d+1)/Gamma(s+1) [c_ss + psi(d+1) d_ss], with psi kept exact.
    """
    return ef_from_riesz_omega(d, s, s, c_ss, d_ss)


def ef_from_riesz_omega(d, alpha, s, c_alpha_s, d_alpha_s=0):
    """(e_s, f_s) from c_{alpha s}, d_{alpha s} for any alpha >= s.

    Laplace transforming the omega-mean term by term gives the prefactor
    Gamma(alpha+d-s+1)/Gamma(alpha+1) and psi(alpha+d-s+1) in place of
    psi(d+1).
    """
    d, s = _check_ds(d, s)
    if alpha < s:
        raise DomainError("need s <= alpha")
    p = alpha + d - s + 1
    pref = gamma_half(p) / gamma_half(alpha + 1)
    if not is_log_order(d, s):
        return _apply(pref, c_alpha_s), (0 if is_exact(c_alpha_s) else 0.0)
    f = _apply(-pref, d_alpha_s)
    if is_exact(c_alpha_s) and is_exact(d_alpha_s):
        e = pref * (ExactSum._lift(c_alpha_s) + digamma_int(p) * d_alpha_s)
        e = e.simplify() if isinstance(e, ExactSum) else e
    else:
        e = float(pref) * (float(c_alpha_s) + float(digamma_int(p)) * float(d_alpha_s))
    return e, f


# -- coefficient bookkeeping --------------------------------------------------

PROVENANCES = ("fit", "derived", "exact", "heat-blind")
TABLES = ("b", "e", "f", "a", "c", "dlog")


@dataclass
class CoefEntry:
    value: object
    stderr: float | None = None
    provenance: str = "fit"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise DomainError(f"unknown provenance {self.provenance!r}")

    def to_dict(self):
        v = self.value
        return {"value": float(v), "exact": str(v) if is_exact(v) else None,
                "stderr": None if self.stderr is None else float(self.stderr),
                "provenance": self.provenance}


@dataclass
class CrossCheck:
    """One fitted-versus-predicted comparison."""

    name: str
    s: int
    fitted: float
    fitted_stderr: float
    predicted: float
    predicted_stderr: float
    z: float
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class CoefficientSet:
    """Tables b, e, f, a, c, dlog indexed by s for one dimension d."""

    d: int
    tables: dict = field(default_factory=lambda: {k: {} for k in TABLES})
    checks: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def set(self, name, s, value, stderr=None, provenance="fit"):
        if name not in TABLES:
            raise DomainError(f"unknown table {name!r}")
        if name in ("f", "dlog") and not is_log_order(self.d, s):
            raise DomainError(f"{name}[{s}] exists only for s-d odd and positive")
        if name == "e" and is_log_order(self.d, s) and provenance == "fit":
            provenance = "heat-blind"
        self.tables[name][int(s)] = CoefEntry(value, stderr, provenance)

    def get(self, name, s):
        return self.tables[name].get(int(s))

    def value(self, name, s):
        return float(self.tables[name][int(s)].value)

    def stderr(self, name, s):
        return self.tables[name][int(s)].stderr

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def nonlocal_orders(self):
        return sorted(s for s in self.tables["e"] if is_log_order(self.d, s))

    def to_dict(self):
        return {
            "d": self.d,
            "tables": {k: {str(s): e.to_dict() for s, e in sorted(v.items())}
                       for k, v in self.tables.items()},
            "checks": [c.to_dict() for c in self.checks],
            "diagnostics": self.diagnostics,
        }
