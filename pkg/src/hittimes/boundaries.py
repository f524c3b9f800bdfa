"""Boundary functions and strip geometry."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError
from .process import Process

__all__ = [
    "Boundary",
    "Configuration",
    "StripProblem",
    "ValidationReport",
    "validate_strip",
]


@dataclass(frozen=True)
class Boundary:
    """A boundary ``c(t)``: constant, cosine, or tabulated.

    Cosine boundaries are ``c + amplitude * cos(angular_frequency * t + phase)``.
    Tabulated boundaries are monotone piecewise-cubic (PCHIP) interpolants of
    their knots, so the derivative is continuous and bounded.
    """

    kind: str
    c: float = 0.0
    amplitude: float = 0.0
    angular_frequency: float = 0.0
    phase: float = 0.0
    knots: tuple = ()
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "cosine", "tabulated"):
            raise DomainError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "tabulated":
            ts = np.array([k[0] for k in self.knots], dtype=float)
            vs = np.array([k[1] for k in self.knots], dtype=float)
            if len(ts) < 2:
                raise DomainError("tabulated boundary needs at least two knots")
            if np.any(np.diff(ts) <= 0):
                raise DomainError("tabulated knots must be strictly increasing in t")
            object.__setattr__(self, "_interp", PchipInterpolator(ts, vs, extrapolate=False))

    @classmethod
    def constant(cls, c):
        return cls("constant", c=float(c))

    @classmethod
    def cosine(cls, c, amplitude, angular_frequency, phase=0.0):
        return cls("cosine", c=float(c), amplitude=float(amplitude),
                   angular_frequency=float(angular_frequency), phase=float(phase))

    @classmethod
    def tabulated(cls, ts, values):
        return cls("tabulated", knots=tuple(zip(map(float, ts), map(float, values))))

    @classmethod
    def from_csv(cls, path):
        """Load a two-column ``t,value`` CSV."""
        with open(Path(path), newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["t", "value"]:
                raise DomainError(f"expected header 't,value', got {','.join(header)!r}")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        return cls("tabulated", knots=tuple(rows))

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or (self.kind == "cosine" and self.amplitude == 0.0)

    def _check_range(self, t):
        if self.kind == "tabulated":
            lo, hi = self.knots[0][0], self.knots[-1][0]
            if np.any((t < lo) | (t > hi)):
                raise DomainError(f"t outside tabulated range [{lo}, {hi}]")

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        self._check_range(t)
        if self.kind == "constant":
            out = np.full_like(t, self.c)
        elif self.kind == "cosine":
            out = self.c + self.amplitude * np.cos(self.angular_frequency * t + self.phase)
        else:
            out = self._interp(t)
        return float(out) if out.ndim == 0 else out

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        self._check_range(t)
        if self.kind == "constant":
            out = np.zeros_like(t)
        elif self.kind == "cosine":
            out = (-self.amplitude * self.angular_frequency
                   * np.sin(self.angular_frequency * t + self.phase))
        else:
            out = self._interp(t, 1)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.c}
        if self.kind == "cosine":
            return {"kind": "cosine", "c": self.c, "amplitude": self.amplitude,
                    "angular_frequency": self.angular_frequency, "phase": self.phase}
        return {"kind": "tabulated", "knots": [list(k) for k in self.knots]}


class Configuration(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE_BELOW = "outside-below"
    OUTSIDE_ABOVE = "outside-above"


@dataclass(frozen=True)
class StripProblem:
    process: Process
    lower: Boundary
    upper: Boundary

    @property
    def configuration(self) -> Configuration | None:
        """Configuration implied by the start point; None if x0 touches a boundary."""
        p = self.process
        a0 = self.lower.eval(p.t0)
        b0 = self.upper.eval(p.t0)
        if a0 < p.x0 < b0:
            return Configuration.INSIDE
        if p.x0 < a0 < b0:
            return Configuration.OUTSIDE_BELOW
        if a0 < b0 < p.x0:
            return Configuration.OUTSIDE_ABOVE
        return None

    @property
    def is_constant(self) -> bool:
        return self.lower.is_constant and self.upper.is_constant


@dataclass
class ValidationReport:
    valid: bool
    configuration: Configuration | None
    min_gap: float
    first_violation: float | None = None
    message: str = "ok"

    def __bool__(self):
        return self.valid


def validate_strip(sp: StripProblem, horizon: float, probe_step: float) -> ValidationReport:
    """Probe the strip on ``[t0, horizon]`` and report the first violation."""
    p = sp.process
    if not horizon > p.t0:
        raise DomainError("horizon must exceed t0")
    if not probe_step > 0:
        raise DomainError("probe_step must be positive")
    n = int(math.ceil((horizon - p.t0) / probe_step - 1e-9))
    ts = p.t0 + probe_step * np.arange(n + 1)
    ts[-1] = min(ts[-1], horizon)
    try:
        a = np.asarray(sp.lower.eval(ts), dtype=float)
        b = np.asarray(sp.upper.eval(ts), dtype=float)
    except DomainError as exc:
        return ValidationReport(False, None, math.nan, float(p.t0), str(exc))
    gap = b - a
    min_gap = float(np.min(gap))

    bad = np.flatnonzero(~(gap > 0))
    if bad.size:
        return ValidationReport(False, None, min_gap, float(ts[bad[0]]),
                                "lower boundary is not below upper boundary")
    outside = ~(p.in_interval(a) & p.in_interval(b))
    if np.any(outside):
        i = int(np.flatnonzero(outside)[0])
        return ValidationReport(False, None, min_gap, float(ts[i]),
                                "boundary leaves the diffusion interval")
    config = sp.configuration
    if config is None:
        return ValidationReport(False, None, min_gap, float(p.t0),
                                "start point lies on a boundary")
    return ValidationReport(True, config, min_gap)
