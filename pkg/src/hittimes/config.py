"""Run configuration files (TOML).

A minimal file::

    method = "volterra"
    outputs = ["subdensities"]

    [process]
    kind = "standard-brownian"
    x0 = 0.0

    [boundaries.lower]
    kind = "constant"
    value = -1.0

    [boundaries.upper]
    kind = "cosine"
    c = 1.0
    amplitude = 0.1
    angular_frequency = 3.141592653589793

    [grid]
    h = 0.01
    horizon = 10.0

Optional tables: ``[series]``, ``[inversion]``, ``[laplace]``,
``[copula]``, ``[converge]`` and ``[mc]``. A tabulated boundary names a
``t,value`` CSV with ``path``, resolved relative to the config file.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .boundaries import Boundary, StripProblem
from .closed_form import SeriesControl
from .errors import ConfigError, HittimesError
from .laplace import REPRESENTATIONS, InversionControl
from .montecarlo import SimConfig
from .process import Kind, Process
from .volterra import TimeGrid

__all__ = ["RunConfig", "load_config", "parse_config"]

METHODS = ("volterra", "laplace", "closed-form")
OUTPUTS = ("subdensities", "joint", "copula", "marginals")


@dataclass
class RunConfig:
    process: Process
    lower: Boundary
    upper: Boundary
    t0: float
    h: float
    horizon: float
    method: str = "volterra"
    outputs: tuple = ("subdensities",)
    series: SeriesControl = field(default_factory=SeriesControl)
    inversion: InversionControl = field(default_factory=InversionControl)
    representation: str = "ito-mckean"
    copula_m: int = 50
    converge_steps: tuple = (0.04, 0.02, 0.01, 0.005)
    converge_reference: str = "closed-form"
    converge_horizon: float | None = None
    mc: SimConfig | None = None
    mc_bin_width: float = 0.25
    source: Path | None = None

    @property
    def strip(self) -> StripProblem:
        return StripProblem(self.process, self.lower, self.upper)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.covering(self.t0, self.h, self.horizon)


def _table(doc, key, required=False) -> dict:
    v = doc.get(key, {})
    if required and key not in doc:
        raise ConfigError(f"missing [{key}] table")
    if not isinstance(v, dict):
        raise ConfigError(f"[{key}] must be a table")
    return v


def _keys(tbl, allowed, where):
    extra = sorted(set(tbl) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where or 'top level'}: {', '.join(extra)}")


def _num(tbl, key, default=None, where=""):
    if key not in tbl:
        if default is None:
            raise ConfigError(f"missing {where}{key}")
        return default
    v = tbl[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}{key} must be a number")
    return float(v)


def _process(tbl) -> Process:
    kind = tbl.get("kind")
    try:
        kind = Kind(kind)
    except ValueError:
        raise ConfigError(f"unknown process kind {kind!r}") from None
    w = "process."
    extra = {Kind.SCALED_BROWNIAN: ("sigma",), Kind.GEOMETRIC_BROWNIAN: ("sigma",),
             Kind.ORNSTEIN_UHLENBECK: ("theta", "mu", "sigma")}.get(kind, ())
    _keys(tbl, ("kind", "x0", "t0") + extra, "[process]")
    x0 = _num(tbl, "x0", 1.0 if kind is Kind.GEOMETRIC_BROWNIAN else 0.0, w)
    t0 = _num(tbl, "t0", 0.0, w)
    if kind is Kind.STANDARD_BROWNIAN:
        return Process.standard_bm(x0, t0)
    if kind is Kind.SCALED_BROWNIAN:
        return Process.scaled_bm(_num(tbl, "sigma", where=w), x0, t0)
    if kind is Kind.GEOMETRIC_BROWNIAN:
        return Process.gbm(_num(tbl, "sigma", where=w), x0, t0)
    return Process.ou(_num(tbl, "theta", where=w), _num(tbl, "mu", 0.0, w),
                      _num(tbl, "sigma", where=w), x0, t0)


def _boundary(tbl, name, base: Path | None) -> Boundary:
    w = f"boundaries.{name}."
    kind = tbl.get("kind")
    allowed = {"constant": ("value",), "cosine": ("c", "amplitude", "angular_frequency", "phase"),
               "tabulated": ("path",)}.get(kind, ())
    _keys(tbl, ("kind",) + allowed, f"[boundaries.{name}]")
    if kind == "constant":
        return Boundary.constant(_num(tbl, "value", where=w))
    if kind == "cosine":
        return Boundary.cosine(_num(tbl, "c", where=w), _num(tbl, "amplitude", where=w),
                               _num(tbl, "angular_frequency", where=w), _num(tbl, "phase", 0.0, w))
    if kind == "tabulated":
        if "path" not in tbl:
            raise ConfigError(f"missing {w}path")
        path = Path(tbl["path"])
        if base is not None and not path.is_absolute():
            path = base / path
        if not path.exists():
            raise ConfigError(f"boundary file {str(path)!r} does not exist")
        return Boundary.from_csv(path)
    raise ConfigError(f"unknown boundary kind {kind!r} for {name}")


def parse_config(doc: dict, base: Path | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed TOML document."""
    try:
        return _parse(doc, base)
    except ConfigError:
        raise
    except HittimesError as exc:
        raise ConfigError(str(exc)) from exc


def _parse(doc, base):
    _keys(doc, ("method", "outputs", "process", "boundaries", "grid", "series", "inversion",
                "laplace", "copula", "converge", "mc"), "")
    for name, allowed in (("grid", ("h", "horizon", "t0")), ("series", ("max_terms", "tail_tolerance")),
                          ("inversion", ("terms", "precision_decimals", "averaged")),
                          ("laplace", ("representation",)), ("copula", ("m",)),
                          ("converge", ("steps", "reference", "horizon")),
                          ("mc", ("n_paths", "dt", "horizon", "seed", "bin_width")),
                          ("boundaries", ("lower", "upper"))):
        _keys(_table(doc, name), allowed, f"[{name}]")
    p = _process(_table(doc, "process", required=True))
    bds = _table(doc, "boundaries", required=True)
    for side in ("lower", "upper"):
        if not isinstance(bds.get(side), dict):
            raise ConfigError(f"missing [boundaries.{side}] table")
    lower = _boundary(bds["lower"], "lower", base)
    upper = _boundary(bds["upper"], "upper", base)
    grid = _table(doc, "grid", required=True)
    h = _num(grid, "h", where="grid.")
    horizon = _num(grid, "horizon", where="grid.")
    t0 = _num(grid, "t0", p.t0, "grid.")
    if t0 != p.t0:
        raise ConfigError("grid.t0 differs from process.t0")
    if not (h > 0 and math.isfinite(h)) or not horizon > t0:
        raise ConfigError("grid needs h > 0 and horizon > t0")

    method = doc.get("method", "volterra")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {', '.join(METHODS)}")
    outputs = doc.get("outputs", ["subdensities"])
    if not isinstance(outputs, list) or any(o not in OUTPUTS for o in outputs):
        raise ConfigError(f"outputs must be a list drawn from {', '.join(OUTPUTS)}")

    series = _table(doc, "series")
    ctl = SeriesControl(int(_num(series, "max_terms", 1000, "series.")),
                        _num(series, "tail_tolerance", 1e-16, "series."))
    inv = _table(doc, "inversion")
    ictl = InversionControl(int(_num(inv, "terms", 50, "inversion.")),
                            int(_num(inv, "precision_decimals", 10, "inversion.")),
                            int(_num(inv, "averaged", 12, "inversion.")))
    rep = _table(doc, "laplace").get("representation", "ito-mckean")
    if rep not in REPRESENTATIONS:
        raise ConfigError(f"laplace.representation must be one of {', '.join(REPRESENTATIONS)}")

    cop = _table(doc, "copula")
    m = int(_num(cop, "m", 50, "copula."))

    conv = _table(doc, "converge")
    steps = conv.get("steps", [0.04, 0.02, 0.01, 0.005])
    if not isinstance(steps, list) or not steps or any(
            isinstance(s, bool) or not isinstance(s, (int, float)) or s <= 0 for s in steps):
        raise ConfigError("converge.steps must be a list of positive numbers")
    reference = conv.get("reference", "closed-form")
    if reference not in ("closed-form", "finest-grid"):
        raise ConfigError("converge.reference must be closed-form or finest-grid")
    conv_h = _num(conv, "horizon", horizon, "converge.")

    mc = None
    bw = 0.25
    if "mc" in doc:
        t = _table(doc, "mc")
        seed = t.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("mc.seed must be an integer")
        mc = SimConfig(int(_num(t, "n_paths", where="mc.")), _num(t, "dt", where="mc."),
                       _num(t, "horizon", horizon, "mc."), seed)
        bw = _num(t, "bin_width", 0.25, "mc.")
        if bw <= 0:
            raise ConfigError("mc.bin_width must be positive")

    return RunConfig(p, lower, upper, t0, h, horizon, method, tuple(outputs), ctl, ictl, rep, m,
                     tuple(float(s) for s in steps), reference, conv_h, mc, bw, base)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {str(path)!r} not found") from None
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {str(path)!r}: {exc}") from None
    cfg = parse_config(doc, path.parent)
    cfg.source = path
    return cfg
