"""Eigenvalue spectra of -d^2/dx^2 on intervals and separable boxes.

Boundary conditions are stored in the general form

    alpha * phi + beta * d(phi)/dn = 0,

with d/dn the outward normal derivative.  Dirichlet is (1, 0), Neumann is
(0, 1) and the Robin condition d(phi)/dn = gamma * phi is (-gamma, 1).

Eigenvalues are kept internally in extended precision (``np.longdouble``)
so that spectral sums downstream are not limited by double rounding.
"""

from __future__ import annotations

import enum
import hashlib
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    InsufficientCeilingError,
    MissedRootError,
    OutOfRangeError,
    RootCertificationError,
)

LD = np.longdouble
PI_LD = np.longdouble("3.141592653589793238462643383279502884")

ROOT_RESIDUAL_TOL = 1e-12
MERGE_RTOL = 1e-12


class BCKind(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    ROBIN = "robin"


@dataclass(frozen=True)
class BoundaryCondition:
    """Boundary condition at one endpoint.

    Parameters
    ----------
    kind : BCKind or str
        ``"dirichlet"``, ``"neumann"`` or ``"robin"``.
    gamma : float, optional
        Robin parameter in d(phi)/dn = gamma * phi (inverse length).  Required
        for Robin and forbidden otherwise.  Negative values guarantee a
        nonnegative spectrum.
    """

    kind: BCKind
    gamma: float | None = None

    def __post_init__(self):
        kind = BCKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is BCKind.ROBIN:
            if self.gamma is None:
                raise DomainError("Robin condition needs gamma")
            g = float(self.gamma)
            if not math.isfinite(g):
                raise DomainError("Robin gamma must be finite; use Dirichlet for infinite gamma")
            if g == 0.0:
                raise DomainError("Robin gamma = 0 must be encoded as Neumann")
            object.__setattr__(self, "gamma", g)
        elif self.gamma is not None:
            raise DomainError(f"{kind.value} condition takes no gamma")

    @classmethod
    def dirichlet(cls):
        return cls(BCKind.DIRICHLET)

    @classmethod
    def neumann(cls):
        return cls(BCKind.NEUMANN)

    @classmethod
    def robin(cls, gamma):
        return cls(BCKind.ROBIN, gamma)

    @classmethod
    def parse(cls, text):
        """Parse ``dirichlet``, ``neumann`` or ``robin:<gamma>``."""
        s = text.strip().lower()
        if s in ("d", "dirichlet"):
            return cls.dirichlet()
        if s in ("n", "neumann"):
            return cls.neumann()
        if s.startswith("robin:") or s.startswith("r:"):
            try:
                g = float(s.split(":", 1)[1])
            except ValueError:
                raise DomainError(f"bad Robin parameter in {text!r}") from None
            return cls.robin(g)
        raise DomainError(f"unknown boundary condition {text!r}")

    def __str__(self):
        if self.kind is BCKind.ROBIN:
            return f"robin:{self.gamma:.17g}"
        return self.kind.value

    @property
    def coefficients(self):
        """(alpha, beta) of alpha*phi + beta*d(phi)/dn = 0."""
        if self.kind is BCKind.DIRICHLET:
            return 1.0, 0.0
        if self.kind is BCKind.NEUMANN:
            return 0.0, 1.0
        return -self.gamma, 1.0

    @property
    def safe(self):
        """True unless this condition may create negative eigenvalues."""
        return not (self.kind is BCKind.ROBIN and self.gamma > 0)

    @property
    def robin_gamma(self):
        """gamma for Robin, 0 for Neumann, None for Dirichlet."""
        if self.kind is BCKind.ROBIN:
            return self.gamma
        if self.kind is BCKind.NEUMANN:
            return 0.0
        return None


@dataclass(frozen=True)
class IntervalGeometry:
    """Interval [0, a] with a boundary condition at each end."""

    length: float
    left: BoundaryCondition = field(default_factory=BoundaryCondition.dirichlet)
    right: BoundaryCondition = field(default_factory=BoundaryCondition.dirichlet)

    def __post_init__(self):
        a = float(self.length)
        if not (math.isfinite(a) and a > 0):
            raise DomainError(f"interval length must be positive, got {self.length!r}")
        object.__setattr__(self, "length", a)

    @property
    def symmetric(self):
        return self.left == self.right

    @property
    def has_robin(self):
        return BCKind.ROBIN in (self.left.kind, self.right.kind)

    def to_dict(self):
        return {"type": "interval", "length": self.length,
                "left": str(self.left), "right": str(self.right)}


@dataclass(frozen=True)
class BoxGeometry:
    """Separable box: product of 1 to 3 intervals."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(self.axes)
        if not 1 <= len(axes) <= 3:
            raise DomainError("box dimension must be 1, 2 or 3")
        for ax in axes:
            if not isinstance(ax, IntervalGeometry):
                raise DomainError("box axes must be IntervalGeometry instances")
        object.__setattr__(self, "axes", axes)

    @property
    def dim(self):
        return len(self.axes)

    def to_dict(self):
        return {"type": "box", "axes": [ax.to_dict() for ax in self.axes]}


class Spectrum:
    """Immutable sorted list of eigenvalues with multiplicities.

    Parameters
    ----------
    values : array_like
        Eigenvalues lambda_n >= 0 in ascending order.  Converted to
        ``np.longdouble``.
    multiplicities : array_like of int, optional
        Positive multiplicities; default all ones.
    dim : int
        Spatial dimension d.
    ceiling : float, optional
        Every eigenvalue <= ceiling is present.  Defaults to the largest
        entry; ``inf`` marks a complete finite spectrum.
    weyl_constant : float
        C in the Weyl law mu(lambda) ~ C lambda^(d/2), used for tail
        bounds.  Zero means "no eigenvalues beyond the ceiling".
    has_zero_mode : bool
        Must be set when a zero eigenvalue is present.
    negative_count : int
        Number of negative eigenvalues detected and dropped.
    geometry : dict, optional
        Provenance metadata.
    """

    __slots__ = ("_values", "_mult", "dim", "ceiling", "weyl_constant",
                 "has_zero_mode", "negative_count", "geometry", "_hash", "_frozen")

    def __init__(self, values, multiplicities=None, *, dim=1, ceiling=None,
                 weyl_constant=0.0, has_zero_mode=False, negative_count=0,
                 geometry=None):
        vals = np.array(values, dtype=LD).reshape(-1)
        if multiplicities is None:
            mult = np.ones(vals.shape, dtype=np.int64)
        else:
            mult = np.array(multiplicities, dtype=np.int64).reshape(-1)
        if mult.shape != vals.shape:
            raise DomainError("values and multiplicities differ in length")
        if np.any(mult <= 0):
            raise DomainError("multiplicities must be positive")
        if not np.all(np.isfinite(vals)):
            raise DomainError("eigenvalues must be finite")
        if np.any(vals < 0):
            raise DomainError("negative eigenvalues are not allowed in a Spectrum")
        if np.any(np.diff(vals) < 0):
            raise DomainError("eigenvalues must be sorted ascending")
        if not has_zero_mode and vals.size and vals[0] == 0:
            raise DomainError("zero eigenvalue present but has_zero_mode is false")
        if dim not in (1, 2, 3):
            raise DomainError("dimension must be 1, 2 or 3")
        vals.setflags(write=False)
        mult.setflags(write=False)
        self._values = vals
        self._mult = mult
        self.dim = int(dim)
        if ceiling is None:
            ceiling = float(vals[-1]) if vals.size else math.inf
        self.ceiling = float(ceiling)
        self.weyl_constant = float(weyl_constant)
        self.has_zero_mode = bool(has_zero_mode and vals.size and vals[0] == 0)
        self.negative_count = int(negative_count)
        self.geometry = dict(geometry) if geometry else {}
        self._hash = None
        self._frozen = True

    def __setattr__(self, name, value):
        if getattr(self, "_frozen", False):
            raise AttributeError("Spectrum is immutable")
        object.__setattr__(self, name, value)

    @classmethod
    def empty(cls, dim=1):
        return cls([], dim=dim, ceiling=math.inf)

    @property
    def values(self):
        """Eigenvalues in extended precision (read-only)."""
        return self._values

    @property
    def lam(self):
        """Eigenvalues rounded to float64."""
        return self._values.astype(float)

    @property
    def multiplicities(self):
        return self._mult

    @property
    def omega(self):
        """Frequencies sqrt(lambda) in extended precision."""
        return np.sqrt(self._values)

    @property
    def count(self):
        """Number of eigenvalues counted with multiplicity."""
        return int(self._mult.sum())

    @property
    def tail_exponent(self):
        """Growth exponent p in lambda_n ~ n^p (Weyl: p = 2/d)."""
        return 2.0 / self.dim

    @property
    def positive_mask(self):
        return self._values > 0

    @property
    def entries(self):
        return list(zip(self.lam.tolist(), self._mult.tolist()))

    def __len__(self):
        return int(self._values.size)

    def __repr__(self):
        return (f"Spectrum(dim={self.dim}, entries={len(self)}, count={self.count}, "
                f"ceiling={self.ceiling:.6g}, zero_mode={self.has_zero_mode})")

    def digest(self):
        """SHA-256 of the float64 eigenvalues and multiplicities."""
        if self._hash is None:
            h = hashlib.sha256()
            h.update(np.ascontiguousarray(self.lam).tobytes())
            h.update(np.ascontiguousarray(self._mult).tobytes())
            object.__setattr__(self, "_hash", h.hexdigest())
        return self._hash


def counting_function(spec, lam):
    """Number of eigenvalues <= lam, with multiplicity (zero modes included)."""
    lam = float(lam)
    if lam < 0:
        raise DomainError("counting function needs lambda >= 0")
    if lam > spec.ceiling:
        raise OutOfRangeError(f"lambda={lam:g} above certified ceiling {spec.ceiling:g}")
    k = np.searchsorted(spec.lam, lam, side="right")
    return int(spec.multiplicities[:k].sum())


# -- Robin secular problem ----------------------------------------------------

def _sinc_a(w, a):
    """sin(w a)/w, equal to a at w = 0."""
    w = np.asarray(w, dtype=LD)
    out = np.full(w.shape, LD(a))
    nz = w != 0
    out[nz] = np.sin(w[nz] * a) / w[nz]
    return out


def _tanh_a(k, a):
    k = np.asarray(k, dtype=LD)
    out = np.full(k.shape, LD(a))
    nz = k != 0
    out[nz] = np.tanh(k[nz] * a) / k[nz]
    return out


def secular(geom, omega):
    """Secular function G(omega) = F(omega)/omega; zero at eigenfrequencies.

    F(w) = (aL aR - bL bR w^2) sin(w a) + w (aR bL + aL bR) cos(w a), written
    without tan so there are no poles.  G(0) vanishes iff a zero mode exists.
    """
    (aL, bL), (aR, bR) = geom.left.coefficients, geom.right.coefficients
    a = LD(geom.length)
    w = np.asarray(omega, dtype=LD)
    return (aL * aR - bL * bR * w * w) * _sinc_a(w, a) + (aR * bL + aL * bR) * np.cos(w * a)


def secular_scale(geom, omega):
    """Magnitude scale of the terms of G, for a relative residual test."""
    (aL, bL), (aR, bR) = geom.left.coefficients, geom.right.coefficients
    a = float(geom.length)
    w = np.asarray(omega, dtype=float)
    s_bound = np.minimum(a, 1.0 / np.maximum(w, 1e-300))
    return ((abs(aL * aR) + abs(bL * bR) * w * w) * s_bound
            + abs(aR * bL + aL * bR)) * np.maximum(1.0, w * a)


def _negative_secular(geom, kappa):
    (aL, bL), (aR, bR) = geom.left.coefficients, geom.right.coefficients
    a = LD(geom.length)
    k = np.asarray(kappa, dtype=LD)
    return (aL * aR + bL * bR * k * k) * _tanh_a(k, a) + (aR * bL + aL * bR)


def _bisect(fun, lo, hi, iters=90):
    lo = np.array(lo, dtype=LD)
    hi = np.array(hi, dtype=LD)
    flo = fun(lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        fm = fun(mid)
        same = np.sign(fm) == np.sign(flo)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    return (lo + hi) / 2


def _sign_change_roots(fun, nodes):
    f = fun(nodes)
    sg = np.sign(f)
    exact = nodes[sg == 0]
    idx = np.nonzero(sg[:-1] * sg[1:] < 0)[0]
    roots = _bisect(fun, nodes[idx], nodes[idx + 1]) if idx.size else np.array([], dtype=LD)
    return np.sort(np.concatenate([roots, exact]))


def _has_zero_mode(geom):
    (aL, bL), (aR, bR) = geom.left.coefficients, geom.right.coefficients
    a = geom.length
    det = aL * aR * a + aR * bL + aL * bR
    scale = abs(aL * aR) * a + abs(aR * bL) + abs(aL * bR)
    return abs(det) <= 1e-14 * max(scale, 1e-300)


def negative_modes(geom):
    """Decay rates kappa > 0 of negative eigenvalues -kappa^2."""
    bound = 4.0 / geom.length
    for bc in (geom.left, geom.right):
        if bc.kind is BCKind.ROBIN:
            bound += 2.0 * abs(bc.gamma)
    fun = lambda k: _negative_secular(geom, k)
    nodes = np.linspace(0, bound, 4097).astype(LD)
    if _has_zero_mode(geom):
        nodes[0] = nodes[1] * LD(1e-4)
    roots = _sign_change_roots(fun, nodes)
    return roots[roots > 0]


def _robin_frequencies(geom, n):
    a = geom.length
    zero = _has_zero_mode(geom)
    n_neg = negative_modes(geom).size
    h = PI_LD / (2 * LD(a))
    fun = lambda w: secular(geom, w)
    scale_nodes = 1
    n_grid = 2 * (n + 4)
    for _ in range(6):
        k = np.arange(n_grid * scale_nodes, dtype=LD)
        nodes = np.concatenate([[LD(0)], (k + LD(0.5)) * h / scale_nodes])
        if zero:
            nodes[0] = nodes[1] * LD(1e-4)
        roots = _sign_change_roots(fun, nodes)
        roots = roots[roots > 0]
        top = nodes[-1]
        # interlacing with Dirichlet: |mu_R - mu_D| <= 2 everywhere
        probes = np.arange(1, int(np.floor(float(top) * a / math.pi)) + 1)
        probes = np.concatenate([probes - 0.5, probes - 1e-9, probes + 1e-9])
        probes = np.sort(probes[(probes > 0) & (probes * math.pi / a <= float(top))])
        mu_r = n_neg + int(zero) + np.searchsorted(roots.astype(float), probes * math.pi / a,
                                                   side="right")
        mu_d = np.floor(probes + 1e-12).astype(int)
        if roots.size >= n and np.all(np.abs(mu_r - mu_d) <= 2):
            break
        if roots.size < n:
            n_grid *= 2
        else:
            scale_nodes *= 4
    else:
        raise MissedRootError(
            f"secular root count inconsistent with Dirichlet interlacing for {geom.to_dict()}")
    roots = roots[:n]
    res = np.abs(fun(roots)).astype(float)
    tol = ROOT_RESIDUAL_TOL * secular_scale(geom, roots.astype(float))
    bad = np.nonzero(res > tol)[0]
    if bad.size:
        i = bad[0]
        w = float(roots[i])
        raise RootCertificationError(
            f"secular residual {res[i]:.3e} exceeds {tol[i]:.3e} near omega={w:.17g}",
            interval=(w - float(h), w + float(h)))
    return roots, zero, n_neg


def interval_frequencies(geom, n):
    """First n positive eigenfrequencies omega_n of an interval.

    Returns
    -------
    omega : ndarray of longdouble
    has_zero_mode : bool
    negative_count : int
    """
    if n < 1:
        raise DomainError("need at least one mode")
    kinds = (geom.left.kind, geom.right.kind)
    a = LD(geom.length)
    idx = np.arange(1, n + 1, dtype=LD)
    if kinds == (BCKind.DIRICHLET, BCKind.DIRICHLET):
        return idx * PI_LD / a, False, 0
    if kinds == (BCKind.NEUMANN, BCKind.NEUMANN):
        return idx * PI_LD / a, True, 0
    if set(kinds) == {BCKind.DIRICHLET, BCKind.NEUMANN}:
        return (idx - LD(0.5)) * PI_LD / a, False, 0
    return _robin_frequencies(geom, n)


def build_interval_spectrum(geom, N):
    """First N positive eigenvalues of -d^2/dx^2 on an interval.

    A zero mode (Neumann/Neumann, or a Robin pair with vanishing
    determinant) is stored in addition to the N positive modes.  Negative
    eigenvalues (possible for gamma > 0) are counted, dropped, and reported
    with a ``RuntimeWarning``.

    Examples
    --------
    >>> import math
    >>> g = IntervalGeometry(math.pi)
    >>> build_interval_spectrum(g, 3).lam.round(12).tolist()
    [1.0, 4.0, 9.0]
    """
    N = int(N)
    omega, zero, n_neg = interval_frequencies(geom, N)
    if n_neg:
        warnings.warn(f"{n_neg} negative eigenvalue(s) excluded", RuntimeWarning, stacklevel=2)
    lam = omega * omega
    if zero:
        lam = np.concatenate([[LD(0)], lam])
    return Spectrum(lam, dim=1, ceiling=float(lam[-1]),
                    weyl_constant=geom.length / math.pi,
                    has_zero_mode=zero, negative_count=n_neg,
                    geometry=geom.to_dict())


def _merge(values, mult):
    order = np.argsort(values, kind="stable")
    values = values[order]
    mult = mult[order]
    if values.size == 0:
        return values, mult
    gap = np.diff(values)
    tol = MERGE_RTOL * np.maximum(np.abs(values[1:]), np.finfo(float).tiny)
    starts = np.concatenate([[0], np.nonzero(gap > tol)[0] + 1])
    return values[starts], np.add.reduceat(mult, starts)


def _product_weyl_constant(specs):
    c = 1.0
    for s in specs:
        c *= s.weyl_constant * math.gamma(s.dim / 2 + 1)
    d = sum(s.dim for s in specs)
    return c / math.gamma(d / 2 + 1)


def _sums(specs, limit, total_min):
    """All sums of one eigenvalue per factor not exceeding ``limit``."""
    acc_v = np.array([LD(0)])
    acc_m = np.array([1], dtype=np.int64)
    rest = total_min
    for s in specs:
        rest = rest - s.values[0]
        bound = limit - rest
        out_v, out_m = [], []
        for v, m in zip(s.values, s.multiplicities):
            k = np.searchsorted(acc_v, bound - v, side="right")
            if k == 0:
                break
            out_v.append(acc_v[:k] + v)
            out_m.append(acc_m[:k] * m)
        acc_v, acc_m = _merge(np.concatenate(out_v), np.concatenate(out_m))
    return acc_v, acc_m


def product_spectrum(specs, N=None, geometry=None):
    """Spectrum of a separable product: all sums of one eigenvalue per factor.

    Parameters
    ----------
    specs : sequence of Spectrum
    N : int, optional
        Keep the lowest N eigenvalues (with multiplicity, never splitting a
        degenerate group).  By default every sum below the certified product
        ceiling is kept.

    Raises
    ------
    InsufficientCeilingError
        If the factors are not certified high enough to produce N values.
    """
    specs = list(specs)
    if not specs:
        raise DomainError("need at least one factor")
    d = sum(s.dim for s in specs)
    if d > 3:
        raise DomainError("product dimension exceeds 3")
    if len(specs) == 1 and N is None and geometry is None:
        return specs[0]
    if any(len(s) == 0 for s in specs):
        return Spectrum.empty(d)
    mins = [s.values[0] for s in specs]
    total_min = sum(mins)
    cap = min(LD(s.ceiling) + (total_min - m) for s, m in zip(specs, mins))
    weyl = _product_weyl_constant(specs)
    limit = cap
    if N is not None and weyl > 0:
        # enumerate only up to a Weyl guess for lambda_N, widening as needed
        limit = min(cap, LD(1.1 * (int(N) / weyl) ** (2.0 / d)) + total_min)
    while True:
        acc_v, acc_m = _sums(specs, limit, total_min)
        if N is None or limit >= cap or (acc_m.size and acc_m.sum() >= N):
            break
        limit = min(cap, limit + LD(0.5) * max(abs(limit), LD(1)))
    if N is not None:
        N = int(N)
        cum = np.cumsum(acc_m)
        if cum.size == 0 or cum[-1] < N:
            lam_n = (N / weyl) ** (2.0 / d) if weyl > 0 else math.inf
            req = [lam_n - float(total_min - m) for m in mins]
            raise InsufficientCeilingError(
                f"factors certify only {int(cum[-1]) if cum.size else 0} product eigenvalues "
                f"below {float(cap):.6g}; need N={N}; required factor ceilings ~ "
                + ", ".join(f"{r:.6g}" for r in req), required=req)
        k = int(np.searchsorted(cum, N)) + 1
        acc_v, acc_m = acc_v[:k], acc_m[:k]
        ceiling = float(acc_v[-1])
    else:
        ceiling = float(cap)
    return Spectrum(acc_v, acc_m, dim=d, ceiling=ceiling, weyl_constant=weyl,
                    has_zero_mode=bool(acc_v.size and acc_v[0] == 0),
                    negative_count=sum(s.negative_count for s in specs),
                    geometry=geometry or {"type": "product",
                                          "factors": [s.geometry for s in specs]})


def build_box_spectrum(box, n_per_axis, N=None):
    """Product spectrum of a box with ``n_per_axis`` modes on each axis."""
    factors = [build_interval_spectrum(ax, n_per_axis) for ax in box.axes]
    return product_spectrum(factors, N, geometry=box.to_dict())
