"""Joint density of the two hitting times, marginals and copula density.

The joint density ``f(t, s)`` of ``(T_a, T_b)`` is assembled from
one-boundary restart densities. When the start lies outside the strip the
hits happen in a fixed order (case ``"i"``); when it lies inside either
boundary may come first and the exit sub-densities weight the two
branches (case ``"ii"``).

Surfaces are stored on a square grid ``values[i, j] = f(t_i, s_j)`` with
``t_i = s_i = t0 + (i + 1) h``. Anything beyond the last knot is outside
the window and is not represented.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator, RegularGridInterpolator

from .boundaries import Boundary, Configuration, StripProblem, validate_strip
from .closed_form import bm_fpt_cdf, bm_fpt_pdf
from .errors import DomainError, StripError
from .process import Process
from .volterra import (SubDensityPair, TimeGrid, restart_densities, solve_single_boundary)

__all__ = [
    "CopulaSurface",
    "JointDensitySurface",
    "MarginalTable",
    "assemble",
    "assemble_case_i",
    "assemble_case_ii",
    "copula_density",
    "marginal_cdf",
    "marginal_table",
]


@dataclass
class JointDensitySurface:
    """``values[i, j]`` is the joint density at ``(t_i, s_j)``."""

    t_grid: TimeGrid
    s_grid: TimeGrid
    values: np.ndarray
    case: str
    components: dict = field(default_factory=dict, repr=False)

    @property
    def h(self) -> float:
        return self.t_grid.h

    def window_mass(self) -> float:
        """``h**2 * sum(values)``: probability that both hits fall in the window."""
        return float(self.h**2 * self.values.sum())

    def marginal(self, axis: str = "t", tail: bool = True) -> np.ndarray:
        """Marginal density of ``T_a`` (``axis="t"``) or ``T_b`` (``"s"``).

        The window only holds second hits up to the horizon. With ``tail``
        the restart mass falling beyond it is added back from the stored
        restart survival functions, which makes the result comparable with
        the one-boundary density over the whole window.
        """
        if axis not in ("t", "s"):
            raise DomainError("axis must be 't' or 's'")
        h = self.h
        if axis == "t":
            m = h * self.values.sum(axis=1)
            key_first, key_surv = "first_lower", "survival_lower_to_upper"
        else:
            m = h * self.values.sum(axis=0)
            key_first, key_surv = "first_upper", "survival_upper_to_lower"
        if tail and key_first in self.components:
            m = m + self.components[key_first] * self.components[key_surv]
        return m

    def max_asymmetry(self) -> float:
        return float(np.max(np.abs(self.values - self.values.T)))


@dataclass
class MarginalTable:
    """One-boundary hitting-time law tabulated on ``[t0, horizon]``.

    ``times[0]`` is ``t0`` where both ``cdf`` and ``pdf`` vanish.
    """

    times: np.ndarray
    cdf: np.ndarray
    pdf: np.ndarray
    method: str = "volterra"

    def quantile(self, u) -> np.ndarray:
        """Monotone cubic quantile; NaN where ``u`` exceeds the captured mass."""
        u = np.asarray(u, dtype=float)
        c = self.cdf
        keep = np.concatenate(([True], np.diff(c) > 0))
        # keep the last knot before the cdf starts rising
        first = int(np.argmax(c > 0)) if np.any(c > 0) else len(c)
        keep[:max(first - 1, 0)] = False
        q = PchipInterpolator(c[keep], self.times[keep], extrapolate=False)(u)
        q = np.where((u > 0) & (u <= c[keep][-1]), q, np.nan)
        return q

    def density(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.pdf, left=0.0, right=np.nan)


@dataclass
class CopulaSurface:
    """Copula density on the interior grid ``{1/(m+1), ..., m/(m+1)}**2``.

    Cells whose quantiles fall outside the tabulated window are NaN and
    flagged in ``uncovered``.
    """

    u_grid: np.ndarray
    v_grid: np.ndarray
    density: np.ndarray
    uncovered: np.ndarray
    t_quantiles: np.ndarray
    s_quantiles: np.ndarray

    @property
    def cell_area(self) -> float:
        return float((self.u_grid[1] - self.u_grid[0]) * (self.v_grid[1] - self.v_grid[0]))

    @property
    def n_uncovered(self) -> int:
        return int(self.uncovered.sum())


# ---------------------------------------------------------------------------
# one-boundary pieces


def _closed_form_ok(p: Process, *bds: Boundary) -> bool:
    return p.is_brownian and all(bd.is_constant for bd in bds)


def _z(p: Process, bd: Boundary) -> float:
    return float(p.to_gauss(bd.c))


def _side(p: Process, bd: Boundary) -> str:
    return "below-start" if bd.eval(p.t0) < p.x0 else "above-start"


def _restart_pair(p: Process, start: Boundary, target: Boundary, grid: TimeGrid, threads: int):
    """Restart densities ``R[j, k]`` and survival beyond the window per restart knot."""
    n = grid.n
    if _closed_form_ok(p, start, target):
        lags = grid.h * np.arange(1, n + 1)
        f = bm_fpt_pdf(lags, _z(p, start), _z(p, target))
        R = np.zeros((n, n))
        j, k = np.triu_indices(n, 1)
        R[j, k] = f[k - j - 1]
        # survival for restart at knot j over the remaining window (n - 1 - j) h
        rem = grid.h * np.arange(n - 1, -1, -1)
        surv = np.ones(n)
        pos = rem > 0
        surv[pos] = 1.0 - bm_fpt_cdf(rem[pos], _z(p, start), _z(p, target))
        return R, surv
    R = restart_densities(p, start, target, grid, threads=threads)
    surv = np.clip(1.0 - grid.h * R.sum(axis=1), 0.0, 1.0)
    return R, surv


def _one_boundary_pdf(p: Process, bd: Boundary, grid: TimeGrid) -> np.ndarray:
    if _closed_form_ok(p, bd):
        return np.asarray(bm_fpt_pdf(grid.knots, p.z0, _z(p, bd), p.t0), dtype=float)
    return solve_single_boundary(p, bd, _side(p, bd), grid)


def _check_grid(grid: TimeGrid, p: Process):
    if not isinstance(grid, TimeGrid):
        raise DomainError("grid must be a TimeGrid")
    if grid.t0 != p.t0:
        raise DomainError("grid does not start at the process start time")


# ---------------------------------------------------------------------------
# assembly


def assemble_case_i(p: Process, a: Boundary, b: Boundary, grid: TimeGrid,
                    threads: int = 1) -> JointDensitySurface:
    """Joint density when ``x0`` lies below both boundaries (or above both).

    From below, ``a`` is necessarily hit first and
    ``f(t, s) = f_{T_a}(t) f_{T_b}(s | a(t), t)`` for ``t < s``. The
    mirrored configuration swaps the roles.
    """
    sp = StripProblem(p, a, b)
    _check_grid(grid, p)
    rep = validate_strip(sp, grid.horizon, grid.h)
    if not rep.valid:
        raise StripError(rep.message)
    if rep.configuration is Configuration.INSIDE:
        raise StripError("start point lies inside the strip; use case ii")
    n = grid.n
    V = np.zeros((n, n))
    comps = {}
    if rep.configuration is Configuration.OUTSIDE_BELOW:
        first = _one_boundary_pdf(p, a, grid)
        R, surv = _restart_pair(p, a, b, grid, threads)
        V = first[:, None] * R
        comps.update(first_lower=first, survival_lower_to_upper=surv,
                     first_upper=np.zeros(n), survival_upper_to_lower=np.zeros(n))
    else:
        first = _one_boundary_pdf(p, b, grid)
        R, surv = _restart_pair(p, b, a, grid, threads)
        V = (first[:, None] * R).T
        comps.update(first_upper=first, survival_upper_to_lower=surv,
                     first_lower=np.zeros(n), survival_lower_to_upper=np.zeros(n))
    np.fill_diagonal(V, 0.0)
    return JointDensitySurface(grid, grid, V, "i", comps)


def assemble_case_ii(p: Process, sp: StripProblem, sub: SubDensityPair, grid: TimeGrid | None = None,
                     threads: int = 1) -> JointDensitySurface:
    """Joint density for a start inside the strip.

    ``f(t, s) = g_a(t) f_{T_b}(s | a(t), t)`` for ``t < s`` and
    ``f(t, s) = g_b(s) f_{T_a}(t | b(s), s)`` for ``t > s``.
    """
    if sp.process != p:
        raise DomainError("strip problem refers to a different process")
    grid = sub.grid if grid is None else grid
    if grid != sub.grid:
        raise DomainError("sub-densities were computed on a different grid")
    _check_grid(grid, p)
    if sp.configuration is not Configuration.INSIDE:
        raise StripError("start point is not inside the strip")
    Rab, surv_ab = _restart_pair(p, sp.lower, sp.upper, grid, threads)
    Rba, surv_ba = _restart_pair(p, sp.upper, sp.lower, grid, threads)
    ga = np.asarray(sub.g_lower)
    gb = np.asarray(sub.g_upper)
    V = ga[:, None] * Rab + (gb[:, None] * Rba).T
    np.fill_diagonal(V, 0.0)
    comps = dict(first_lower=ga, first_upper=gb,
                 survival_lower_to_upper=surv_ab, survival_upper_to_lower=surv_ba)
    return JointDensitySurface(grid, grid, V, "ii", comps)


def assemble(sp: StripProblem, grid: TimeGrid, sub: SubDensityPair | None = None,
             threads: int = 1) -> JointDensitySurface:
    """Dispatch on the configuration; ``sub`` is required for a start inside."""
    if sp.configuration is Configuration.INSIDE:
        if sub is None:
            raise DomainError("inside configuration needs exit sub-densities")
        return assemble_case_ii(sp.process, sp, sub, grid, threads)
    return assemble_case_i(sp.process, sp.lower, sp.upper, grid, threads)


# ---------------------------------------------------------------------------
# marginals and copula


def marginal_table(p: Process, bd: Boundary, side: str | None, grid: TimeGrid,
                   method: str = "auto") -> MarginalTable:
    """Tabulate the one-boundary hitting law of ``bd`` on ``grid``.

    ``method="closed-form"`` (Brownian kinds with a constant boundary) uses
    the exact distribution function; ``"volterra"`` accumulates the solver
    density with step ``h``.
    """
    side = side or _side(p, bd)
    if method == "auto":
        method = "closed-form" if _closed_form_ok(p, bd) else "volterra"
    times = np.concatenate(([grid.t0], grid.knots))
    if method == "closed-form":
        if not _closed_form_ok(p, bd):
            raise DomainError("closed form needs a Brownian kind and a constant boundary")
        # the side argument still has to be consistent
        if (side == "below-start") != (bd.c < p.x0):
            raise DomainError(f"boundary is not {side.replace('-', ' the ')}")
        pdf = np.asarray(bm_fpt_pdf(grid.knots, p.z0, _z(p, bd), p.t0), dtype=float)
        cdf = np.asarray(bm_fpt_cdf(grid.knots, p.z0, _z(p, bd), p.t0), dtype=float)
    elif method == "volterra":
        pdf = solve_single_boundary(p, bd, side, grid)
        cdf = np.clip(grid.h * np.cumsum(pdf), 0.0, 1.0)
    else:
        raise DomainError(f"unknown method {method!r}")
    return MarginalTable(times, np.concatenate(([0.0], cdf)), np.concatenate(([0.0], pdf)), method)


def marginal_cdf(p: Process, bd: Boundary, side: str, grid: TimeGrid, method: str = "auto") -> np.ndarray:
    """``P(T <= t_i)`` at the grid knots."""
    return marginal_table(p, bd, side, grid, method).cdf[1:]


def copula_density(surface: JointDensitySurface, marg_t: MarginalTable, marg_s: MarginalTable,
                   m: int = 50) -> CopulaSurface:
    """Copula density ``f(Q_t(u), Q_s(v)) / (f_t(Q_t(u)) f_s(Q_s(v)))``.

    The surface is interpolated bilinearly, with zero density at ``t0``.
    """
    if m < 2:
        raise DomainError("m must be at least 2")
    u = np.arange(1, m + 1) / (m + 1.0)
    qt = marg_t.quantile(u)
    qs = marg_s.quantile(u)
    g = surface.t_grid
    axis = np.concatenate(([g.t0], g.knots))
    padded = np.zeros((g.n + 1, g.n + 1))
    padded[1:, 1:] = surface.values
    interp = RegularGridInterpolator((axis, axis), padded, method="linear",
                                     bounds_error=False, fill_value=np.nan)
    T, S = np.meshgrid(qt, qs, indexing="ij")
    joint = interp(np.stack([T.ravel(), S.ravel()], axis=1)).reshape(m, m)
    ft = marg_t.density(qt)
    fs = marg_s.density(qs)
    den = ft[:, None] * fs[None, :]
    bad = ~np.isfinite(joint) | ~np.isfinite(den) | ~(den > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(bad, np.nan, joint / np.where(bad, 1.0, den))
    if bad.any():
        warnings.warn(f"uncovered quantile range: {int(bad.sum())} of {m * m} copula cells",
                      RuntimeWarning, stacklevel=2)
    return CopulaSurface(u, u.copy(), c, bad, qt, qs)
