"""Euler discretization of the first-kind Volterra system for exit sub-densities.

At knot ``t_i`` the unknowns are obtained from

    F(a_i | x0) = h * sum_{j<i} [F(a_i|a_j) ga_j + F(a_i|b_j) gb_j] + (h/2) ga_i
    1 - F(b_i | x0) = h * sum_{j<i} [(1-F(b_i|a_j)) ga_j + (1-F(b_i|b_j)) gb_j] + (h/2) gb_i

where the diagonal weights 1/2 (same boundary) and 0 (opposite boundary)
are the short-time limits of the transition CDF along a smooth boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .boundaries import Boundary, Configuration, StripProblem, validate_strip
from .closed_form import SeriesControl, bm_sub_density_lower, bm_sub_density_upper
from .errors import ConditioningError, DomainError, ReferenceUnavailableError, StepSizeError, StripError
from .process import Process, norm_cdf, norm_sf

__all__ = [
    "ConvergenceReport",
    "SubDensityPair",
    "TimeGrid",
    "closed_form_available",
    "closed_form_pair",
    "convergence_study",
    "restart_densities",
    "solve_single_boundary",
    "solve_two_boundary",
]

REL_ABORT = 1e-3
ABS_ABORT = 1e-10


@dataclass(frozen=True)
class TimeGrid:
    """Knots ``t_i = t0 + i*h`` for ``i = 1..n``."""

    t0: float
    h: float
    n: int

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError("grid step must be positive")
        if self.n < 1:
            raise DomainError("grid needs at least one knot")

    @classmethod
    def covering(cls, t0, h, horizon):
        n = int(round((horizon - t0) / h))
        return cls(float(t0), float(h), n)

    @property
    def knots(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(1, self.n + 1)

    @property
    def horizon(self) -> float:
        return self.t0 + self.n * self.h


@dataclass
class SubDensityPair:
    grid: TimeGrid
    g_lower: np.ndarray
    g_upper: np.ndarray
    clamp_flags: np.ndarray
    clamp_lower: np.ndarray = field(repr=False, default=None)
    clamp_upper: np.ndarray = field(repr=False, default=None)

    def cumulative_mass(self) -> np.ndarray:
        return self.grid.h * np.cumsum(self.g_lower + self.g_upper)

    @property
    def mass_lower(self) -> float:
        return float(self.grid.h * self.g_lower.sum())

    @property
    def mass_upper(self) -> float:
        return float(self.grid.h * self.g_upper.sum())

    @property
    def n_clamped(self) -> int:
        return int(self.clamp_flags.sum())

    @property
    def first_knot_mass(self) -> float:
        """``h * g(t_1)``; large values mean the first step is under-resolved."""
        return float(self.grid.h * max(self.g_lower[0], self.g_upper[0]))


def _gauss_boundary(p: Process, bd: Boundary, times):
    return np.ascontiguousarray(p.to_gauss(bd.eval(times)), dtype=float)


def _lag_table(p: Process, grid: TimeGrid):
    """Lag coefficients indexed by lag count ``0..n`` (entry 0 unused)."""
    lags = grid.h * np.arange(grid.n + 1, dtype=float)
    lags[0] = grid.h  # placeholder, never read
    alpha, beta, scale = p.lag_coefficients(lags)
    return (np.ascontiguousarray(alpha, dtype=float), np.ascontiguousarray(beta, dtype=float),
            np.ascontiguousarray(scale, dtype=float))


def _initial_terms(p, C, z_start, alpha, beta, scale, upper):
    n = len(C)
    L = np.arange(1, n + 1)
    z = (C - alpha[L] * z_start - beta[L]) / scale[L]
    return np.ascontiguousarray(norm_sf(z) if upper else norm_cdf(z))


def _check_finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise ConditioningError("non-finite kernel evaluation")


def solve_two_boundary(sp: StripProblem, grid: TimeGrid) -> SubDensityPair:
    """Sub-densities of exit through the lower and upper boundary on ``grid``.

    Raises
    ------
    StripError
        Strip invalid on the grid horizon or start point not inside.
    StepSizeError
        Euler overshoot below ``-1e-3 * max(g)``; decrease ``h``.
    """
    p = sp.process
    if grid.t0 != p.t0:
        raise DomainError("grid must start at the process start time")
    report = validate_strip(sp, grid.horizon, grid.h)
    if not report.valid:
        raise StripError(f"invalid strip at t={report.first_violation}: {report.message}")
    if report.configuration is not Configuration.INSIDE:
        raise StripError("two-boundary solver requires the start point inside the strip")

    t = grid.knots
    A = _gauss_boundary(p, sp.lower, t)
    B = _gauss_boundary(p, sp.upper, t)
    alpha, beta, scale = _lag_table(p, grid)
    ra = _initial_terms(p, A, p.z0, alpha, beta, scale, upper=False)
    rb = _initial_terms(p, B, p.z0, alpha, beta, scale, upper=True)
    _check_finite(A, B, ra, rb)

    k = _backend.kernels
    if sp.is_constant:
        # time-homogeneous kernels on constant boundaries depend on the lag only
        a, b = A[0], B[0]
        al, be, sc = alpha[1:], beta[1:], scale[1:]
        kaa = norm_cdf((a - al * a - be) / sc)
        kab = norm_cdf((a - al * b - be) / sc)
        kba = norm_sf((b - al * a - be) / sc)
        kbb = norm_sf((b - al * b - be) / sc)
        _check_finite(kaa, kab, kba, kbb)
        ga, gb, fl, abort = k.lagged_pair(kaa, kab, kba, kbb, ra, rb, grid.h, REL_ABORT, ABS_ABORT)
    else:
        ga, gb, fl, abort = k.general_pair(A, B, alpha, beta, scale, ra, rb, grid.h,
                                           REL_ABORT, ABS_ABORT)
    if abort >= 0:
        raise StepSizeError(f"strongly negative density at t={t[abort]:.6g}; reduce h")
    _check_finite(ga, gb)
    fl = np.asarray(fl)
    return SubDensityPair(grid, np.maximum(ga, 0.0), np.maximum(gb, 0.0), fl > 0,
                          (fl & 1) > 0, (fl & 2) > 0)


def _side_is_upper(p: Process, bd: Boundary, side: str) -> bool:
    c0 = bd.eval(p.t0)
    if side == "below-start":
        if not c0 < p.x0:
            raise DomainError("boundary is not below the start point")
        return False
    if side == "above-start":
        if not c0 > p.x0:
            raise DomainError("boundary is not above the start point")
        return True
    raise DomainError(f"unknown side {side!r}")


def solve_single_boundary(p: Process, bd: Boundary, side: str, grid: TimeGrid,
                          return_flags: bool = False):
    """First hitting time density of one boundary on ``grid``.

    ``side`` is ``"below-start"`` or ``"above-start"``, the position of the
    boundary relative to ``x0`` at ``t0``.
    """
    upper = _side_is_upper(p, bd, side)
    t = grid.knots
    C = _gauss_boundary(p, bd, t)
    alpha, beta, scale = _lag_table(p, grid)
    r = _initial_terms(p, C, p.z0, alpha, beta, scale, upper)
    _check_finite(C, r)
    k = _backend.kernels
    if bd.is_constant:
        c = C[0]
        z = (c - alpha[1:] * c - beta[1:]) / scale[1:]
        ker = norm_sf(z) if upper else norm_cdf(z)
        g, fl, abort = k.lagged_single(np.ascontiguousarray(ker), r, grid.h, REL_ABORT, ABS_ABORT)
    else:
        g, fl, abort = k.general_single(C, alpha, beta, scale, r, grid.h, upper,
                                        REL_ABORT, ABS_ABORT)
    if abort >= 0:
        raise StepSizeError(f"strongly negative density at t={t[abort]:.6g}; reduce h")
    g = np.maximum(g, 0.0)
    if return_flags:
        return g, np.asarray(fl) > 0
    return g


def restart_densities(p: Process, start: Boundary, target: Boundary, grid: TimeGrid,
                      threads: int = 1) -> np.ndarray:
    """Hitting densities of ``target`` after restarting on ``start``.

    Returns ``R`` with ``R[j, k]`` the density at knot ``k`` of the hitting
    time of ``target`` for the process relaunched from ``start(t_j)`` at knot
    ``t_j``; zero for ``k <= j``. Constant boundaries need a single solve.
    """
    t = grid.knots
    S = _gauss_boundary(p, start, t)
    C = _gauss_boundary(p, target, t)
    upper = bool(np.all(C > S))
    if not upper and not np.all(C < S):
        raise StripError("start and target boundaries cross on the grid")
    alpha, beta, scale = _lag_table(p, grid)
    n = grid.n
    if start.is_constant and target.is_constant:
        s, c = S[0], C[0]
        L = np.arange(1, n + 1)
        z0 = (c - alpha[L] * s - beta[L]) / scale[L]
        r = np.ascontiguousarray(norm_sf(z0) if upper else norm_cdf(z0))
        zk = (c - alpha[1:] * c - beta[1:]) / scale[1:]
        ker = np.ascontiguousarray(norm_sf(zk) if upper else norm_cdf(zk))
        g, _, _ = _backend.kernels.lagged_single(ker, r, grid.h, math.inf, 0.0)
        g = np.maximum(np.asarray(g), 0.0)
        R = np.zeros((n, n))
        j, k = np.triu_indices(n, 1)
        R[j, k] = g[k - j - 1]
        return R
    R, _ = _backend.kernels.restart_family(S, C, alpha, beta, scale, grid.h, upper, int(threads))
    return np.maximum(R, 0.0)


# ---------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceReport:
    steps: list
    max_errors: list
    mse: list
    empirical_order: float | None
    reference: str = "closed-form"

    @property
    def ratios(self) -> list:
        return [self.max_errors[i] / self.max_errors[i + 1]
                for i in range(len(self.max_errors) - 1) if self.max_errors[i + 1] > 0]


def closed_form_available(sp: StripProblem) -> bool:
    return sp.process.is_brownian and sp.is_constant


def closed_form_pair(sp: StripProblem, grid: TimeGrid, ctl: SeriesControl | None = None):
    """Image-series sub-densities on ``grid`` for Brownian-type processes."""
    if not closed_form_available(sp):
        raise ReferenceUnavailableError("closed form needs Brownian motion with constant boundaries")
    p = sp.process
    a = float(p.to_gauss(sp.lower.c))
    b = float(p.to_gauss(sp.upper.c))
    t = grid.knots
    ctl = ctl or SeriesControl()
    ga = bm_sub_density_lower(t, p.z0, a, b, ctl, t0=p.t0)
    gb = bm_sub_density_upper(t, p.z0, a, b, ctl, t0=p.t0)
    n = grid.n
    return SubDensityPair(grid, np.asarray(ga), np.asarray(gb), np.zeros(n, bool),
                          np.zeros(n, bool), np.zeros(n, bool))


def convergence_study(sp: StripProblem, h_list, reference: str = "closed-form",
                      horizon: float = 10.0, ctl: SeriesControl | None = None) -> ConvergenceReport:
    """Errors of the Euler solver for decreasing steps on the coarsest knots.

    ``h_list`` must be strictly decreasing with every step dividing the first.
    The error at a knot is ``|e_lower| + |e_upper|``; ``max_errors`` holds
    its maximum over the common knots, ``mse`` the mean of
    ``(e_lower**2 + e_upper**2) / 2``.
    """
    h_list = [float(h) for h in h_list]
    if not h_list:
        raise DomainError("h_list is empty")
    if any(h_list[i + 1] >= h_list[i] for i in range(len(h_list) - 1)):
        raise DomainError("h_list must be strictly decreasing")
    t0 = sp.process.t0
    coarse = TimeGrid.covering(t0, h_list[0], horizon)
    strides = []
    for h in h_list:
        r = h_list[0] / h
        if abs(r - round(r)) > 1e-9:
            raise DomainError(f"step {h} does not divide {h_list[0]}")
        strides.append(int(round(r)))

    def on_coarse(pair, stride):
        idx = stride * np.arange(1, coarse.n + 1) - 1
        return pair.g_lower[idx], pair.g_upper[idx]

    if reference == "closed-form":
        if not closed_form_available(sp):
            raise ReferenceUnavailableError(
                "closed-form reference needs Brownian motion with constant boundaries")
        ref = closed_form_pair(sp, coarse, ctl)
        ref_a, ref_b = ref.g_lower, ref.g_upper
        cand = h_list
    elif reference == "finest-grid":
        h_ref = h_list[-1]
        stride = strides[-1]
        ref = solve_two_boundary(sp, TimeGrid(t0, h_ref, coarse.n * stride))
        ref_a, ref_b = on_coarse(ref, stride)
        cand = h_list
    else:
        raise DomainError(f"unknown reference {reference!r}")

    max_errors, mses = [], []
    for h, stride in zip(cand, strides):
        if reference == "finest-grid" and h == h_list[-1]:
            ea = eb = np.zeros(coarse.n)
        else:
            pair = solve_two_boundary(sp, TimeGrid(t0, h, coarse.n * stride))
            ga, gb = on_coarse(pair, stride)
            ea, eb = ga - ref_a, gb - ref_b
        max_errors.append(float(np.max(np.abs(ea) + np.abs(eb))))
        mses.append(float(np.mean(0.5 * (ea**2 + eb**2))))

    usable = [(h, e) for h, e in zip(h_list, max_errors) if e > 0]
    order = None
    if len(usable) >= 2:
        hs, es = np.log([u[0] for u in usable]), np.log([u[1] for u in usable])
        order = float(np.polyfit(hs, es, 1)[0])
    return ConvergenceReport(h_list, max_errors, mses, order, reference)
