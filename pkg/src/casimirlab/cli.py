"""Command-line front end.

Every subcommand resolves a :class:`RunConfig` from built-in defaults, an
optional INI file (``--config``) and explicit flags, in that order of
precedence, then runs one pipeline.  Results are written as JSON (always)
and CSV plot data (``--csv``) to the output directory, which defaults to
``$CASIMIRLAB_OUTPUT_DIR`` or the working directory.

Exit status: 0 on success, 2 on a numerical-certification failure, 1 on a
usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import datetime
import io
import math
import sys
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .casimir import (boundary_concentration_study, boundary_expansion_fit, halfline_fit_profile,
                      interval_casimir, plate_energy_per_area, renormalized_density)
from .errors import CasimirLabError, CertificationError, ConfigError, DomainError
from .fit import extract_coefficient_set, fit_expansion, parse_terms
from .kernels import TraceKind, auto_window, trace_grid
from .riesz import fit_riesz_lambda, fit_riesz_omega, riesz_mean
from .serialize import default_output_dir, dumps, export_plot_data, spectrum_to_dict, write_json
from .spectrum import (BoundaryCondition, BoxGeometry, IntervalGeometry, build_box_spectrum,
                       build_interval_spectrum)
from .structure import structure_table

TASKS = ("spectrum", "trace", "riesz", "coeffs", "fit", "casimir", "density", "study",
         "structure")


@dataclass
class RunConfig:
    """Resolved run configuration; every field has a default.

    ``N = 0`` picks 10^4 eigenvalues for an interval and 2*10^5 / 2*10^7
    for 2D / 3D boxes, enough for the automatic fit windows; ``n_per_axis
    = 0`` sizes the box factors from the Weyl estimate of lambda_N.

    Geometry: ``length`` and ``bc`` (``left,right``) describe an interval;
    ``box`` (comma-separated side lengths) switches to a 2D/3D box with the
    same conditions on every axis; ``plates`` with ``d`` selects parallel
    plates at separation ``length``; ``halfline`` (a single condition)
    selects the half-line for density fits.
    """

    task: str = "casimir"
    # geometry
    d: int = 1
    length: float = 1.0
    bc: str = "dirichlet,dirichlet"
    box: str = ""
    plates: bool = False
    halfline: str = ""
    # numerics
    N: int = 0
    n_per_axis: int = 0
    alpha: int = 0
    variable: str = "lambda"
    kind: str = "cylinder"
    window: str = ""
    n_points: int = 64
    s_max: int = -1
    terms: str = ""
    xi: float = 0.0
    x: str = "0.2,0.35,0.5"
    t_grid: str = "0.01,1,16"
    mass: float = 1.0
    check_theorem: bool = False
    robin: bool = False
    curvature: bool = False
    target: str = "cylinder"
    # output
    output_dir: str = ""
    json: bool = False
    csv: bool = False
    reproducible: bool = False

    SECTIONS = {
        "run": ("task",),
        "geometry": ("d", "length", "bc", "box", "plates", "halfline"),
        "numerics": ("N", "n_per_axis", "alpha", "variable", "kind", "window", "n_points",
                     "s_max", "terms", "xi", "x", "t_grid", "mass", "check_theorem", "robin",
                     "curvature", "target"),
        "output": ("output_dir", "json", "csv", "reproducible"),
    }

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {', '.join(TASKS)}")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**{k: _coerce(known[k], v) for k, v in data.items()})

    def to_ini(self):
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        data = self.to_dict()
        for sec, keys in self.SECTIONS.items():
            cp[sec] = {k: _ini_value(data[k]) for k in keys}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text, base=None):
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed configuration: {exc}") from None
        data = base.to_dict() if base is not None else {}
        for sec in cp.sections():
            if sec not in cls.SECTIONS:
                raise ConfigError(f"unknown configuration section [{sec}]")
            for k, v in cp[sec].items():
                if k not in cls.SECTIONS[sec]:
                    raise ConfigError(f"unknown key {k!r} in section [{sec}]")
                data[k] = v
        return cls.from_dict(data)


def _ini_value(v):
    return ("true" if v else "false") if isinstance(v, bool) else repr(v) if isinstance(
        v, float) else str(v)


def _coerce(f, v):
    kind = f.type if isinstance(f.type, type) else {"int": int, "float": float, "bool": bool,
                                                     "str": str}[f.type]
    if kind is bool and isinstance(v, str):
        low = v.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{f.name}: expected a boolean, got {v!r}")
    try:
        return kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{f.name}: cannot interpret {v!r} as {kind.__name__}") from None


# -- argument parsing ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text, n=None, name="value"):
    try:
        out = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(out) != n:
        raise ConfigError(f"{name}: expected {n} numbers, got {text!r}")
    return out


def build_parser():
    S = argparse.SUPPRESS
    common = _Parser(add_help=False)
    g = common.add_argument_group("geometry")
    g.add_argument("--interval", dest="length", type=float, default=S,
                   help="interval length or plate separation (default 1)")
    g.add_argument("--bc", default=S, help="boundary conditions left,right, e.g. "
                   "dirichlet,robin:-1 (default dirichlet,dirichlet)")
    g.add_argument("--box", default=S, help="box side lengths, e.g. 1,1 or 1,1,1")
    g.add_argument("--plates", action="store_const", const=True, default=S,
                   help="parallel plates of dimension --d at separation --interval")
    g.add_argument("--halfline", default=S, help="half-line wall condition, e.g. robin:-1")
    g.add_argument("--d", type=int, default=S, help="dimension (default 1)")
    n = common.add_argument_group("numerics")
    n.add_argument("--N", type=int, default=S, help="number of eigenvalues (default 10^4 interval, "
                   "2*10^5 2D box, 2*10^7 3D box)")
    n.add_argument("--n-per-axis", dest="n_per_axis", type=int, default=S,
                   help="modes per box axis (default from the Weyl law)")
    n.add_argument("--xi", type=float, default=S, help="curvature coupling (default 0)")
    n.add_argument("--window", default=S, help="fit window lo,hi (default automatic)")
    n.add_argument("--n-points", dest="n_points", type=int, default=S,
                   help="grid points in a window (default 64)")
    o = common.add_argument_group("output")
    o.add_argument("--config", default=S, help="INI configuration file")
    o.add_argument("--output-dir", dest="output_dir", default=S,
                   help="output directory (default $CASIMIRLAB_OUTPUT_DIR or .)")
    o.add_argument("--json", action="store_const", const=True, default=S,
                   help="print the JSON document instead of the summary")
    o.add_argument("--csv", action="store_const", const=True, default=S,
                   help="also write CSV plot data")
    o.add_argument("--reproducible", action="store_const", const=True, default=S,
                   help="omit the timestamp so output is byte-identical across runs")

    p = _Parser(prog="casimirlab", description="Heat/cylinder kernel asymptotics and "
                "Casimir energies for solvable cavities.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="task", required=True, parser_class=_Parser)
    sub.add_parser("spectrum", parents=[common], help="build and export a spectrum")
    sp = sub.add_parser("trace", parents=[common], help="sample a trace on a t window")
    sp.add_argument("--kind", choices=[k.value for k in TraceKind], default=S)
    sp = sub.add_parser("riesz", parents=[common], help="fit Riesz means")
    sp.add_argument("--alpha", type=int, default=S)
    sp.add_argument("--variable", choices=("lambda", "omega"), default=S)
    sp = sub.add_parser("coeffs", parents=[common], help="extract and cross-check coefficients")
    sp.add_argument("--check-theorem", dest="check_theorem", action="store_const", const=True,
                    default=S, help="exit with status 2 if any cross-check fails")
    sp.add_argument("--s-max", dest="s_max", type=int, default=S)
    sp = sub.add_parser("fit", parents=[common], help="fit a trace on a given term list")
    sp.add_argument("--kind", choices=[k.value for k in TraceKind], default=S)
    sp.add_argument("--terms", default=S, help='powers, "L" marks ln t, e.g. "-1,0,1L,1"')
    sub.add_parser("casimir", parents=[common], help="renormalized Casimir energy")
    sp = sub.add_parser("density", parents=[common], help="renormalized energy density")
    sp.add_argument("--x", default=S, help="positions, comma-separated")
    sp = sub.add_parser("study", parents=[common], help="boundary-concentration study")
    sp.add_argument("--t-grid", dest="t_grid", default=S, help="lo,hi,n (geometric)")
    sp = sub.add_parser("structure", parents=[common], help="schematic expansion table")
    sp.add_argument("--robin", action="store_const", const=True, default=S)
    sp.add_argument("--curvature", action="store_const", const=True, default=S)
    sp.add_argument("--target", default=S, help="heat, cylinder, energy or density")
    return p


def resolve_config(argv):
    ns = vars(build_parser().parse_args(argv))
    path = ns.pop("config", None)
    cfg = RunConfig(task=ns["task"])
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg = RunConfig.from_ini(text, base=cfg)
        cfg.task = ns["task"]
    data = cfg.to_dict()
    data.update(ns)
    return RunConfig.from_dict(data)


# -- pipelines ----------------------------------------------------------------

def _bcs(cfg):
    parts = [p for p in cfg.bc.split(",") if p.strip()]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ConfigError(f"--bc needs left,right conditions, got {cfg.bc!r}")
    try:
        return tuple(BoundaryCondition.parse(p) for p in parts)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _geometry(cfg):
    left, right = _bcs(cfg)
    if cfg.box:
        sides = _floats(cfg.box, name="box")
        return BoxGeometry(tuple(IntervalGeometry(L, left, right) for L in sides))
    return IntervalGeometry(cfg.length, left, right)


DEFAULT_N = {1: 10_000, 2: 200_000, 3: 20_000_000}


def _modes_per_axis(box, N):
    d, vol = box.dim, math.prod(ax.length for ax in box.axes)
    lam = 1.3 * (N * math.gamma(d / 2 + 1) * (4 * math.pi) ** (d / 2) / vol) ** (2 / d)
    return int(math.sqrt(lam) * max(ax.length for ax in box.axes) / math.pi) + 8


def _spectrum(cfg):
    geom = _geometry(cfg)
    dim = geom.dim if isinstance(geom, BoxGeometry) else 1
    N = cfg.N or DEFAULT_N[dim]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if isinstance(geom, BoxGeometry):
            return build_box_spectrum(geom, cfg.n_per_axis or _modes_per_axis(geom, N), N)
        return build_interval_spectrum(geom, N)


def _window(cfg):
    return tuple(_floats(cfg.window, 2, "window")) if cfg.window else None


def _coef_rows(cs):
    lines = [f"{'table':<6}{'s':>3}  {'value':>22}  {'stderr':>10}  provenance"]
    for name in ("b", "e", "f"):
        for s in sorted(cs.tables[name]):
            e = cs.tables[name][s]
            lines.append(f"{name:<6}{s:>3}  {e.value:>22.15g}  {e.stderr:>10.2e}  {e.provenance}")
    lines.append("")
    lines.append(f"{'check':<8}{'fitted':>22}  {'predicted':>22}  {'z':>6}  result")
    for c in cs.checks:
        lines.append(f"{c.name}_{c.s:<6}{c.fitted:>22.15g}  {c.predicted:>22.15g}  "
                     f"{c.z:>6.2f}  {'PASS' if c.passed else 'FAIL'}")
    return lines


def _run_task(cfg):
    """Returns (result document, summary lines, curves for CSV, exit code)."""
    t = cfg.task
    if t == "structure":
        table = structure_table(cfg.d, cfg.robin, cfg.curvature, cfg.target)
        return table.to_dict(), table.render().splitlines(), [], 0
    if t == "casimir" and cfg.plates:
        left, _ = _bcs(cfg)
        r = plate_energy_per_area(cfg.d, cfg.length, left.kind.value)
        lines = [f"plates d={cfg.d} a={cfg.length:g} ({left.kind.value})",
                 f"E_ren/A = {r.energy:.10g} +- {r.stderr:.2g}",
                 f"E_ren/(A a) = {r.diagnostics['energy_density']:.10g}",
                 f"pressure = {r.force:.10g}"]
        return r.to_dict(), lines, [], 0
    if t == "density" and cfg.halfline:
        prof = halfline_fit_profile(cfg.halfline, cfg.xi)
        fit = boundary_expansion_fit(prof)
        lines = [f"half-line {cfg.halfline}, xi={cfg.xi:g}"] + [
            f"  {k:<5} {fit.coefficients[k]:>20.12g} +- {fit.stderr[k]:.2g}"
            for k in fit.LABELS]
        return {"profile": prof.to_dict(), "fit": fit.to_dict()}, lines, [prof], 0
    if t == "density":
        geom = _geometry(cfg)
        prof = renormalized_density(geom, cfg.xi, _floats(cfg.x, name="x"))
        lines = [f"renormalized density, xi={cfg.xi:g}"] + [
            f"  x={x:<8g} {v:>20.12g} +- {e:.2g}"
            for x, v, e in zip(prof.x, prof.values, prof.errors)]
        code = 2 if prof.meta["failures"] else 0
        return prof.to_dict(), lines, [prof], code
    if t == "study":
        geom = _geometry(cfg)
        lo, hi, n = _floats(cfg.t_grid, 3, "t_grid")
        st = boundary_concentration_study(geom, cfg.xi, np.geomspace(lo, hi, int(n)))
        lines = [f"boundary study, xi={cfg.xi:g}"] + [
            f"  t={tv:<10.4g} delta={dv: .3e}" for tv, dv in zip(st.t, st.delta)]
        return st.to_dict(), lines, [st], 0
    if t == "casimir":
        geom = _geometry(cfg)
        if isinstance(geom, BoxGeometry):
            raise ConfigError("casimir supports intervals and --plates")
        r = interval_casimir(geom, cfg.N or DEFAULT_N[1], window=_window(cfg))
        lines = [f"interval a={cfg.length:g} bc={cfg.bc}",
                 f"E_ren = {r.energy:.10g} +- {r.stderr:.2g}",
                 f"force = {r.force:.10g}",
                 f"ln t coefficient = {r.log_coefficient:.3g} +- {r.log_stderr:.2g}"
                 + (" (scale dependent)" if r.scale_dependent else "")]
        return r.to_dict(), lines, [], 0

    if t == "fit" and not cfg.terms:
        raise ConfigError("fit needs --terms")
    spec = _spectrum(cfg)
    if t == "spectrum":
        lines = [f"{spec.count} eigenvalues ({len(spec)} distinct), ceiling {spec.ceiling:.10g}",
                 "first: " + ", ".join(f"{float(v):.10g}" for v in spec.values[:5]),
                 f"digest {spec.digest()}"]
        return spectrum_to_dict(spec), lines, [spec], 0
    if t in ("trace", "fit"):
        kind = TraceKind(cfg.kind)
        window = _window(cfg) or auto_window(spec, kind)
        grid = trace_grid(spec, kind, np.geomspace(*window, cfg.n_points))
        if t == "trace":
            lines = [f"{kind.value} trace on [{window[0]:.4g}, {window[1]:.4g}], "
                     f"{cfg.n_points} points",
                     f"  first {float(grid.values[0]):.12g} +- {grid.errors[0]:.2g}",
                     f"  last  {float(grid.values[-1]):.12g} +- {grid.errors[-1]:.2g}"]
            return grid.to_dict(), lines, [grid], 0
        model = fit_expansion(grid, parse_terms(cfg.terms))
        lines = [f"fit of {kind.value} trace, chi2/dof={model.chi2:.3g}, "
                 f"cond={model.condition:.3g}"] + [
            f"  t^{p}{' ln t' if lg else '':<6} {c:>22.15g} +- {e:.2g}"
            for (p, lg), c, e in zip(model.terms, model.coefficients, model.stderr)]
        return model.to_dict(), lines, [grid], 0
    if t == "riesz":
        fitf = fit_riesz_lambda if cfg.variable == "lambda" else fit_riesz_omega
        r = fitf(spec, cfg.alpha, _window(cfg), cfg.n_points)
        pts = np.geomspace(*r.window, cfg.n_points) if r.window[0] > 0 else np.array([])
        curve = riesz_mean(spec, cfg.alpha, pts, cfg.variable)
        lines = [f"R^{cfg.alpha} in {cfg.variable}, window [{r.window[0]:.4g}, "
                 f"{r.window[1]:.4g}], residual rms {r.residual:.3g}"]
        for s in sorted(r.values):
            row = f"  s={s}  {r.values[s]:>22.15g} +- {r.stderr[s]:.2g}"
            if s in r.log_values:
                row += f"   log: {r.log_values[s]:.12g} +- {r.log_stderr[s]:.2g}"
            lines.append(row)
        return {"fit": r.to_dict(), "curve": curve.to_dict()}, lines, [curve], 0
    if t == "coeffs":
        if cfg.d != spec.dim and cfg.d != 1:
            raise ConfigError(f"--d {cfg.d} does not match the geometry dimension {spec.dim}")
        s_max = None if cfg.s_max < 0 else cfg.s_max
        cs = extract_coefficient_set(spec, s_max=s_max, strict=False)
        lines = _coef_rows(cs)
        passed = cs.passed
        lines.append(f"cross-validation: {'PASS' if passed else 'FAIL'}")
        return cs.to_dict(), lines, [], (2 if cfg.check_theorem and not passed else 0)
    raise ConfigError(f"unknown task {t!r}")


def run(config, stdout=None):
    """Execute the configured pipeline; returns the exit status."""
    stdout = stdout or sys.stdout
    result, lines, curves, code = _run_task(config)
    out = Path(config.output_dir) if config.output_dir else default_output_dir()
    doc = {"task": config.task, "version": __version__, "config": config.to_dict(),
           "result": result}
    if not config.reproducible:
        doc["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    path = write_json(doc, out / f"{config.task}.json")
    files = [path]
    if config.csv:
        for c in curves:
            files += export_plot_data(c, out)
    if config.json:
        stdout.write(dumps(doc))
    else:
        for line in lines:
            print(line, file=stdout)
        print("wrote " + ", ".join(str(f) for f in files), file=stdout)
    return code


def main(argv=None):
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except CertificationError as exc:
        print(f"casimirlab: certification failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, DomainError, OSError) as exc:
        print(f"casimirlab: error: {exc}", file=sys.stderr)
        return 1
    except CasimirLabError as exc:
        print(f"casimirlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
