"""Schematic term tables for heat, cylinder, energy and near-wall expansions.

Only the presence and classification of terms is encoded; numerical
coefficients and tensor structure are deliberately suppressed.  ``kappa``
stands for boundary curvature and ``gamma`` for the Robin parameter.  The
cylinder, heat and density tables are golden data; the energy tables are
derived from the cylinder tables by the formal operation -1/2 d/dt.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError

K, G = "κ", "γ"

CLASSES = ("volume", "surface", "local-geometric", "constant-bracket", "nonlocal")


class Target(str, enum.Enum):
    HEAT = "heat"
    CYLINDER = "cylinder"
    ENERGY = "energy"
    DENSITY = "density"

    @classmethod
    def parse(cls, text):
        t = str(text).strip().lower().replace("_", "").replace("-", "")
        aliases = {"heattrace": "heat", "cylindertrace": "cylinder",
                   "localdensitynearboundary": "density", "localdensity": "density"}
        return cls(aliases.get(t, t))


def _order(k):
    """Schematic boundary monomials of total degree k in (kappa, gamma)."""
    sup = {1: "", 2: "²", 3: "³"}
    out = []
    for i in range(k, -1, -1):
        j = k - i
        m = (K + sup[i] if i else "") + (G + sup[j] if j else "")
        out.append((m, i, j))
    # display order follows the usual kappa^2 + gamma^2 + kappa gamma
    if k == 2:
        out = [out[0], out[2], out[1]]
    return tuple(out)


V = (("V", 0, 0),)
S = (("S", 0, 0),)
E = (("𝐄", 0, 0),)
F = (("𝐅", 0, 0),)
INF = (("∞", 0, 0),)
FIN = (("finite", 0, 0),)
OLN = (("O(ln x)", 0, 0),)


def _gamma_only(k):
    return ((G + {1: "", 2: "²", 3: "³"}[k], 0, k),)


@dataclass(frozen=True)
class Row:
    """One schematic term.

    ``power`` is the exponent of t (traces, energy) or of x (densities);
    ``None`` marks the x-independent flat-space divergence in densities.
    """

    power: Fraction | None
    log: bool
    monomials: tuple
    classification: str

    @property
    def label(self):
        names = [m[0] for m in self.monomials]
        text = "+".join(names)
        if self.classification == "constant-bracket":
            return f"[{text}]"
        if len(names) > 1 or any("+" in n for n in names):
            return f"({text})"
        return text

    def term(self, var="t"):
        if self.power is None or self.label.startswith("O("):
            return self.label
        p = self.power
        if p == 0:
            body = f"ln {var}" if self.log else ""
        else:
            ps = str(p) if p.denominator == 1 else f"({p})"
            body = (var if p == 1 else f"{var}^{ps}") + (f" ln {var}" if self.log else "")
        return f"{self.label} {body}".strip()

    def to_dict(self):
        return {"power": None if self.power is None else str(self.power),
                "log": self.log, "label": self.label,
                "classification": self.classification}


@dataclass(frozen=True)
class StructureTable:
    d: int
    robin: bool
    curvature: bool
    target: Target
    rows: tuple

    @property
    def variable(self):
        return "x" if self.target is Target.DENSITY else "t"

    def signature(self):
        """Tuple of (power, log, label) rows, convenient for golden tests."""
        return tuple((r.power, r.log, r.label) for r in self.rows)

    def has_row(self, power, log=False, label=None):
        p = None if power is None else Fraction(power)
        return any(r.power == p and r.log == log and (label is None or r.label == label)
                   for r in self.rows)

    def render(self):
        head = f"{self.target.value} expansion, d={self.d}" + (
            ", robin" if self.robin else "") + (", curvature" if self.curvature else "")
        width = max((len(r.term(self.variable)) for r in self.rows), default=0)
        lines = [head]
        for r in self.rows:
            lines.append(f"  {r.term(self.variable):<{width}}  {r.classification}")
        return "\n".join(lines)

    def to_dict(self):
        return {"d": self.d, "robin": self.robin, "curvature": self.curvature,
                "target": self.target.value, "rows": [r.to_dict() for r in self.rows]}


def _R(power, log, monos, cls):
    return (None if power is None else Fraction(power), log, monos, cls)


def _heat_golden(d):
    h = Fraction(1, 2)
    base = Fraction(-d, 2)
    return [
        _R(base, False, V, "volume"),
        _R(base + h, False, S, "surface"),
        _R(base + 1, False, _order(1), "local-geometric"),
        _R(base + 3 * h, False, _order(2), "local-geometric"),
        _R(base + 2, False, _order(3), "local-geometric"),
    ]


def _cylinder_golden(d):
    if d == 1:
        return [
            _R(-1, False, V, "volume"),
            _R(0, False, S, "constant-bracket"),
            _R(1, True, _gamma_only(1), "local-geometric"),
            _R(1, False, E, "nonlocal"),
            _R(2, False, _gamma_only(2), "local-geometric"),
            _R(3, True, _gamma_only(3), "local-geometric"),
            _R(3, False, F, "nonlocal"),
        ]
    if d == 2:
        return [
            _R(-2, False, V, "volume"),
            _R(-1, False, S, "surface"),
            _R(0, False, _order(1), "constant-bracket"),
            _R(1, True, _order(2), "local-geometric"),
            _R(1, False, E, "nonlocal"),
            _R(2, False, _order(3), "local-geometric"),
        ]
    return [
        _R(-3, False, V, "volume"),
        _R(-2, False, S, "surface"),
        _R(-1, False, _order(1), "local-geometric"),
        _R(0, False, _order(2), "constant-bracket"),
        _R(1, True, _order(3), "local-geometric"),
        _R(1, False, E, "nonlocal"),
    ]


def _density_golden(d):
    if d == 1:
        return [
            _R(None, False, INF, "volume"),
            _R(-2, False, S, "surface"),
            _R(-1, False, _gamma_only(1), "local-geometric"),
            _R(0, True, _gamma_only(2), "local-geometric"),
            _R(0, False, FIN, "nonlocal"),
        ]
    if d == 2:
        return [
            _R(None, False, INF, "volume"),
            _R(-3, False, S, "surface"),
            _R(-2, False, _order(1), "local-geometric"),
            _R(-1, False, _order(2), "local-geometric"),
            _R(0, True, _order(3), "local-geometric"),
            _R(0, False, FIN, "nonlocal"),
        ]
    return [
        _R(None, False, INF, "volume"),
        _R(-4, False, S, "surface"),
        _R(-3, False, _order(1), "local-geometric"),
        _R(-2, False, _order(2), "local-geometric"),
        _R(-1, False, _order(3), "local-geometric"),
        _R(0, True, OLN, "local-geometric"),
    ]


def _energy_from_cylinder(rows):
    """Formal -1/2 d/dt: drop constants, t^p ln t -> t^(p-1) ln t + t^(p-1)."""
    out = {}
    order = []

    def add(key, monos, cls, front=False):
        if key not in out:
            out[key] = [list(monos), cls]
            order.append(key)
        else:
            cur = out[key]
            cur[0] = list(monos) + cur[0] if front else cur[0] + list(monos)
            if cls == "nonlocal" or cur[1] == "nonlocal":
                cur[1] = "nonlocal"
    for p, log, monos, cls in rows:
        if cls == "constant-bracket" or p == 0 and not log:
            continue
        q = p - 1
        if log:
            add((q, True), monos, cls)
            add((q, False), monos, cls)
        else:
            add((q, False), monos, cls, front=(cls == "nonlocal"))
    keys = sorted(order, key=lambda k: (k[0], not k[1]))
    return [(k[0], k[1], tuple(out[k][0]), out[k][1]) for k in keys]


def _filter(rows, robin, curvature):
    allowed = []
    for p, log, monos, cls in rows:
        keep = tuple(m for m in monos if (robin or m[2] == 0) and (curvature or m[1] == 0))
        if keep:
            allowed.append(Row(p, log, keep, cls))
    return tuple(allowed)


def structure_table(d, robin=False, curvature=False, target=Target.CYLINDER):
    """Schematic expansion table.

    Parameters
    ----------
    d : int
        Dimension, 1 to 3.  Curvature is ignored for d = 1.
    robin, curvature : bool
        Whether Robin data / boundary curvature are present.
    target : Target or str
        ``heat``, ``cylinder``, ``energy`` or ``density`` (near a wall).

    Examples
    --------
    >>> t = structure_table(3, curvature=True, target="energy")
    >>> [r.term() for r in t.rows]
    ['V t^-4', 'S t^-3', 'κ t^-2', 'κ³ ln t', '(𝐄+κ³)']
    """
    if d not in (1, 2, 3):
        raise DomainError("structure tables exist for d = 1, 2, 3")
    target = Target.parse(target.value if isinstance(target, Target) else target)
    curvature = bool(curvature) and d > 1
    if target is Target.HEAT:
        rows = _heat_golden(d)
        if d == 1:
            rows = [(p, l, tuple(m for m in ms if m[1] == 0), c) for p, l, ms, c in rows]
    elif target is Target.CYLINDER:
        rows = _cylinder_golden(d)
    elif target is Target.ENERGY:
        filtered = _filter(_cylinder_golden(d), robin, curvature)
        rows = _energy_from_cylinder(
            [(r.power, r.log, r.monomials, r.classification) for r in filtered])
    else:
        rows = _density_golden(d)
    return StructureTable(d, bool(robin), curvature, target, _filter(rows, robin, curvature))
