"""Euler-Maruyama simulation of both hitting times, used as an oracle.

Paths are integrated in z-coordinates, where every supported process is
either standard Brownian motion or Ornstein-Uhlenbeck. Crossing is checked
at grid times only, so simulated hitting times are biased late by
``O(sqrt(dt))``. A path keeps running after its first hit until it has
touched both boundaries or reached the horizon.

Each path draws from its own stream seeded by ``(seed, path index)``, so
samples do not depend on the number of worker threads.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend
from ._rng import path_states
from .boundaries import Configuration, StripProblem, validate_strip
from .errors import DomainError, InsufficientSamplesError, StripError
from .process import Kind

__all__ = [
    "HittingTimeSample",
    "HittingTimeSamples",
    "SimConfig",
    "bin_average",
    "compare_joint",
    "compare_marginal",
    "compare_sub_density",
    "joint_histogram",
    "ks_distance",
    "simulate_pair",
    "sub_density_histogram",
]

FIRST_HIT = ("none", "lower", "upper")


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``horizon`` is absolute time. ``threads`` only affects speed.
    """

    n_paths: int
    dt: float
    horizon: float
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths <= 0:
            raise DomainError("n_paths must be a positive integer")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError("dt must be positive")
        if not math.isfinite(self.horizon):
            raise DomainError("horizon must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in 64 bits")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")


@dataclass(frozen=True)
class HittingTimeSample:
    t_lower: float
    t_upper: float
    first_hit: str
    path_seed: int
    censored_lower: bool
    censored_upper: bool


@dataclass
class HittingTimeSamples:
    """Column store of simulated paths; censored times hold the horizon."""

    t_lower: np.ndarray
    t_upper: np.ndarray
    censored_lower: np.ndarray
    censored_upper: np.ndarray
    first_hit: np.ndarray  # 0 none, 1 lower, 2 upper
    path_seeds: np.ndarray
    horizon: float
    dt: float

    def __len__(self):
        return len(self.t_lower)

    def __getitem__(self, i) -> HittingTimeSample:
        return HittingTimeSample(float(self.t_lower[i]), float(self.t_upper[i]),
                                 FIRST_HIT[int(self.first_hit[i])], int(self.path_seeds[i]),
                                 bool(self.censored_lower[i]), bool(self.censored_upper[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def fraction_first(self, side: str) -> float:
        return float(np.mean(self.first_hit == FIRST_HIT.index(side)))

    @property
    def censoring_rate(self) -> float:
        """Share of paths that touched neither boundary."""
        return float(np.mean(self.first_hit == 0))

    def times(self, side: str):
        """``(times, censored)`` of the hitting time of one boundary."""
        if side == "lower":
            return self.t_lower, self.censored_lower
        if side == "upper":
            return self.t_upper, self.censored_upper
        raise DomainError("side must be 'lower' or 'upper'")


def _sign(start, level):
    # +1: start above the level, hit when x - level <= 0
    return 1.0 if start > level else -1.0


def simulate_pair(sp: StripProblem, cfg: SimConfig) -> HittingTimeSamples:
    """Simulate ``cfg.n_paths`` paths and record both hitting times."""
    p = sp.process
    if p.kind not in tuple(Kind):
        raise DomainError(f"unsupported process kind {p.kind!r}")
    if not cfg.horizon > p.t0:
        raise DomainError("horizon must exceed t0")
    rep = validate_strip(sp, cfg.horizon, min(cfg.dt * 100, (cfg.horizon - p.t0) / 10))
    if not rep.valid:
        raise StripError(rep.message)
    if cfg.dt > (rep.min_gap / 10.0) ** 2:
        warnings.warn(f"dt={cfg.dt:g} is coarse for a strip of minimum width {rep.min_gap:g}",
                      RuntimeWarning, stacklevel=2)
    nsteps = int(math.ceil((cfg.horizon - p.t0) / cfg.dt - 1e-9))
    t = p.t0 + cfg.dt * np.arange(nsteps + 1)
    t[-1] = min(t[-1], cfg.horizon)
    A = np.ascontiguousarray(p.to_gauss(sp.lower.eval(t)), dtype=float)
    B = np.ascontiguousarray(p.to_gauss(sp.upper.eval(t)), dtype=float)
    z0 = p.z0
    sa, sb = _sign(z0, A[0]), _sign(z0, B[0])
    ou = p.kind is Kind.ORNSTEIN_UHLENBECK
    sd = (p.sigma if ou else 1.0) * math.sqrt(cfg.dt)
    ka, kb = _backend.kernels.simulate(ou, sd, p.theta, p.mu, cfg.dt, z0, A, B, sa, sb,
                                       int(cfg.seed), int(cfg.n_paths), int(cfg.threads))
    ka = np.asarray(ka)
    kb = np.asarray(kb)
    cl, cu = ka < 0, kb < 0
    tl = np.where(cl, cfg.horizon, t[np.where(cl, 0, ka)])
    tu = np.where(cu, cfg.horizon, t[np.where(cu, 0, kb)])
    # simultaneous hits only happen from outside; the nearer boundary counts first
    near = 1 if rep.configuration is not Configuration.OUTSIDE_ABOVE else 2
    big = np.iinfo(np.int64).max
    ea, eb = np.where(cl, big, ka), np.where(cu, big, kb)
    first = np.where(cl & cu, 0, np.where(ea < eb, 1, np.where(eb < ea, 2, near))).astype(np.int8)
    return HittingTimeSamples(tl, tu, cl, cu, first, path_states(int(cfg.seed), int(cfg.n_paths)),
                              float(cfg.horizon), float(cfg.dt))


# ---------------------------------------------------------------------------
# comparisons


def _cdf_callable(table):
    if callable(table):
        return table, math.inf
    if hasattr(table, "times") and hasattr(table, "cdf"):
        times, cdf = table.times, table.cdf
    else:
        times, cdf = table
    times = np.asarray(times, dtype=float)
    cdf = np.asarray(cdf, dtype=float)
    return (lambda x: np.interp(x, times, cdf)), float(times[-1])


def ks_distance(x, cdf, n_total: int | None = None, upto: float = math.inf) -> float:
    """Two-sided KS distance of the (possibly censored) sample ``x``.

    ``n_total`` counts censored draws that lie beyond ``upto``; the
    comparison is then restricted to ``t <= upto``.
    """
    x = np.sort(np.asarray(x, dtype=float))
    x = x[x <= upto]
    n = len(x) if n_total is None else int(n_total)
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, len(x) + 1)
    d = max(np.max(i / n - F, initial=0.0), np.max(F - (i - 1) / n, initial=0.0))
    if math.isfinite(upto):
        d = max(d, abs(len(x) / n - float(cdf(upto))))
    return float(d)


def compare_marginal(samples: HittingTimeSamples, analytic_cdf_table, side: str = "lower",
                     min_samples: int = 10_000) -> float:
    """KS distance between simulated hitting times of one boundary and a CDF.

    ``analytic_cdf_table`` is a :class:`~hittimes.joint.MarginalTable`, a
    ``(times, cdf)`` pair, or a callable. The comparison covers the
    simulation window (and the table range), with censored paths counted
    as exceeding it.
    """
    t, cens = samples.times(side)
    obs = t[~cens]
    if obs.size < min_samples:
        raise InsufficientSamplesError(f"{obs.size} uncensored samples, need {min_samples}")
    cdf, tmax = _cdf_callable(analytic_cdf_table)
    upto = min(samples.horizon, tmax)
    return ks_distance(obs, cdf, n_total=len(t), upto=upto)


def bin_average(knots, values, edges, h: float) -> np.ndarray:
    """Average of a knot-sampled density over each bin (knot cells centred at ``t - h/2``)."""
    mass, _ = np.histogram(np.asarray(knots) - 0.5 * h, bins=edges, weights=h * np.asarray(values))
    return mass / np.diff(edges)


def sub_density_histogram(samples: HittingTimeSamples, side: str, edges) -> np.ndarray:
    """Histogram estimate of ``g_side``: first hits on ``side`` per unit time, over all paths."""
    t, _ = samples.times(side)
    sel = samples.first_hit == FIRST_HIT.index(side)
    counts, _ = np.histogram(t[sel], bins=edges)
    return counts / (len(samples) * np.diff(edges))


def compare_sub_density(samples: HittingTimeSamples, pair, edges) -> dict:
    """Sup bin error of both simulated sub-densities against a :class:`SubDensityPair`."""
    k, h = pair.grid.knots, pair.grid.h
    out = {}
    for side, g in (("lower", pair.g_lower), ("upper", pair.g_upper)):
        out[side] = float(np.max(np.abs(sub_density_histogram(samples, side, edges)
                                        - bin_average(k, g, edges, h))))
    return out


def joint_histogram(samples: HittingTimeSamples, edges) -> np.ndarray:
    """Density histogram of ``(T_lower, T_upper)`` normalized by all paths."""
    both = ~samples.censored_lower & ~samples.censored_upper
    H, _, _ = np.histogram2d(samples.t_lower[both], samples.t_upper[both], bins=[edges, edges])
    area = np.outer(np.diff(edges), np.diff(edges))
    return H / (len(samples) * area)


def compare_joint(samples: HittingTimeSamples, surface, edges) -> float:
    """Sup over bins of |simulated - assembled| bin-averaged joint density."""
    g = surface.t_grid
    h = g.h
    c = g.knots - 0.5 * h
    T, S = np.meshgrid(c, c, indexing="ij")
    M, _, _ = np.histogram2d(T.ravel(), S.ravel(), bins=[edges, edges],
                             weights=(h * h) * surface.values.ravel())
    ref = M / np.outer(np.diff(edges), np.diff(edges))
    return float(np.max(np.abs(joint_histogram(samples, edges) - ref)))
