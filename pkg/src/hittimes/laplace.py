"""Laplace-domain exit sub-densities for constant boundaries, and inversion.

Three equivalent representations of the transforms of the sub-densities
are provided for standard Brownian motion: via hitting-time transforms
(``"ito-mckean"``), via transforms of the transition CDF (``"fortet"``)
and via transforms of the transition density with two probe points
outside the strip (``"density-ratio"``). All evaluators accept complex
``lam`` with positive real part so they can be fed to the inversion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConditioningError, DomainError
from .process import Kind, Process

__all__ = [
    "BrownianTransforms",
    "InversionControl",
    "LaplaceEvaluator",
    "REPRESENTATIONS",
    "bm_fpt_laplace",
    "invert",
    "make_evaluator",
    "sub_density_laplace",
]

REPRESENTATIONS = ("ito-mckean", "fortet", "density-ratio")
_SINGULAR = 1e-300


def _check_lam(lam):
    lam = np.asarray(lam)
    if np.iscomplexobj(lam):
        ok = np.all(lam.real > 0)
    else:
        ok = np.all(lam > 0)
    if not ok:
        raise DomainError("lambda must have positive real part")
    return lam


def bm_fpt_laplace(x0, level, lam):
    """``E exp(-lam T)`` for the hitting time of ``level`` by standard BM from ``x0``."""
    lam = _check_lam(lam)
    out = np.exp(-abs(x0 - level) * np.sqrt(2.0 * lam))
    return out.item() if out.ndim == 0 else out


class BrownianTransforms:
    """Laplace transforms (in elapsed time) of standard BM transition quantities.

    ``cdf(x, y, lam)`` transforms ``P(X(t) <= x | X(0) = y)``, ``sf`` its
    complement and ``pdf`` the transition density. ``sf`` is evaluated in
    closed form rather than as ``1/lam - cdf`` to avoid cancellation.
    """

    @staticmethod
    def fpt(x0, level, lam):
        return bm_fpt_laplace(x0, level, lam)

    @staticmethod
    def cdf(x, y, lam):
        root = np.sqrt(2.0 * lam)
        tail = np.exp(-abs(x - y) * root) / (2.0 * lam)
        return tail if x < y else 1.0 / lam - tail

    @staticmethod
    def sf(x, y, lam):
        root = np.sqrt(2.0 * lam)
        tail = np.exp(-abs(x - y) * root) / (2.0 * lam)
        return tail if x >= y else 1.0 / lam - tail

    @staticmethod
    def pdf(x, y, lam):
        root = np.sqrt(2.0 * lam)
        return np.exp(-abs(x - y) * root) / root


def _ratio(num, den):
    if np.any(np.abs(den) < _SINGULAR):
        raise ConditioningError("near-singular denominator in transform")
    return num / den


def _ito_mckean(a, b, x0, lam, tr):
    fa_x0, fb_x0 = tr.fpt(x0, a, lam), tr.fpt(x0, b, lam)
    fa_b, fb_a = tr.fpt(b, a, lam), tr.fpt(a, b, lam)
    den = fa_b * fb_a - 1.0
    return _ratio(fb_x0 * fa_b - fa_x0, den), _ratio(fa_x0 * fb_a - fb_x0, den)


def _fortet(a, b, x0, lam, tr):
    # lam * sf(b|.) stands for 1 - lam * cdf(b|.)
    cb_x0 = lam * tr.sf(b, x0, lam)
    cb_a = lam * tr.sf(b, a, lam)
    cb_b = lam * tr.sf(b, b, lam)
    Fa_x0, Fa_a, Fa_b = tr.cdf(a, x0, lam), tr.cdf(a, a, lam), tr.cdf(a, b, lam)
    ga = _ratio(cb_x0 * Fa_b - cb_b * Fa_x0, cb_a * Fa_b - cb_b * Fa_a)
    gb = _ratio(cb_x0 * Fa_a - cb_a * Fa_x0, cb_b * Fa_a - cb_a * Fa_b)
    return ga, gb


def _density_ratio(a, b, x0, lam, tr, x1, x2):
    if not (x1 > b and x2 < a):
        raise DomainError("probe points must satisfy x1 > b and x2 < a")
    f = tr.pdf
    den = f(x1, a, lam) * f(x2, b, lam) - f(x1, b, lam) * f(x2, a, lam)
    ga = _ratio(f(x1, x0, lam) * f(x2, b, lam) - f(x1, b, lam) * f(x2, x0, lam), den)
    gb = _ratio(f(x1, a, lam) * f(x2, x0, lam) - f(x1, x0, lam) * f(x2, a, lam), den)
    return ga, gb


def sub_density_laplace(rep: str, p: Process, a: float, b: float, lam, x0: float | None = None,
                        probes: tuple[float, float] | None = None):
    """Transforms ``(g_lower^lam, g_upper^lam)`` of the exit sub-densities.

    Parameters
    ----------
    rep : {"ito-mckean", "fortet", "density-ratio"}
    p : Process
        Must be standard Brownian motion.
    a, b : float
        Constant boundaries with ``a < x0 < b``.
    lam : float, complex or ndarray
        Transform variable(s), positive real part.
    x0 : float, optional
        Start point; defaults to ``p.x0``.
    probes : (x1, x2), optional
        Probe points for ``"density-ratio"``; default ``(b + 1, a - 1)``.
    """
    if p.kind is not Kind.STANDARD_BROWNIAN:
        raise DomainError("closed-form transforms are available for standard Brownian motion only")
    x0 = p.x0 if x0 is None else x0
    if not a < x0 < b:
        raise DomainError("requires a < x0 < b")
    lam = _check_lam(lam)
    tr = BrownianTransforms
    if rep == "ito-mckean":
        ga, gb = _ito_mckean(a, b, x0, lam, tr)
    elif rep == "fortet":
        ga, gb = _fortet(a, b, x0, lam, tr)
    elif rep == "density-ratio":
        x1, x2 = probes if probes is not None else (b + 1.0, a - 1.0)
        ga, gb = _density_ratio(a, b, x0, lam, tr, x1, x2)
    else:
        raise DomainError(f"unknown representation {rep!r}")
    if np.ndim(ga) == 0:
        return complex(ga) if np.iscomplexobj(ga) else float(ga), \
            complex(gb) if np.iscomplexobj(gb) else float(gb)
    return ga, gb


@dataclass
class LaplaceEvaluator:
    """A transform ``lam -> value`` with metadata on where it came from."""

    func: Callable
    representation: str
    process_kind: str
    a: float
    b: float
    x0: float
    side: str = "lower"
    t0: float = 0.0

    def __call__(self, lam):
        return self.func(lam)


def make_evaluator(rep: str, p: Process, a: float, b: float, side: str = "lower",
                   probes=None) -> LaplaceEvaluator:
    if side not in ("lower", "upper"):
        raise DomainError("side must be 'lower' or 'upper'")
    k = 0 if side == "lower" else 1

    def func(lam):
        return sub_density_laplace(rep, p, a, b, lam, probes=probes)[k]

    func(1.0)  # validate arguments eagerly
    return LaplaceEvaluator(func, rep, p.kind.value, a, b, p.x0, side, p.t0)


@dataclass(frozen=True)
class InversionControl:
    """Parameters of the Euler-summation Fourier-series inversion.

    ``terms`` is the total number of series terms, of which the last
    ``averaged`` partial sums are binomially averaged. The damping is
    ``A = precision_decimals * ln 10``, giving a discretization error of
    roughly ``10**-precision_decimals``.
    """

    terms: int = 50
    precision_decimals: int = 10
    averaged: int = 12

    def __post_init__(self):
        if self.terms < 10:
            raise DomainError("terms must be >= 10")
        if self.precision_decimals < 1:
            raise DomainError("precision_decimals must be positive")
        if not 1 <= self.averaged < self.terms:
            raise DomainError("averaged must be in [1, terms)")


def invert(ev, times, ctl: InversionControl | None = None) -> np.ndarray:
    """Numerically invert a Laplace transform at ``times`` (Abate-Whitt EULER).

    ``ev`` must accept complex arguments. Times are absolute; the transform
    is taken in time elapsed from ``ev.t0`` when ``ev`` carries one.
    """
    ctl = ctl or InversionControl()
    t0 = getattr(ev, "t0", 0.0)
    tau = np.atleast_1d(np.asarray(times, dtype=float)) - t0
    if np.any(~np.isfinite(tau)) or np.any(tau <= 0):
        raise DomainError("inversion times must be finite and after t0")
    A = ctl.precision_decimals * math.log(10.0)
    m = ctl.averaged - 1
    n = ctl.terms - ctl.averaged
    k = np.arange(ctl.terms)
    lam = (A + 2j * math.pi * k[None, :]) / (2.0 * tau[:, None])
    vals = np.real(np.asarray(ev(lam), dtype=complex))
    if not np.all(np.isfinite(vals)):
        raise ConditioningError("non-finite transform value during inversion")
    terms = np.where(k % 2 == 0, 1.0, -1.0) * vals
    terms[:, 0] *= 0.5
    partial = np.cumsum(terms, axis=1)
    weights = np.array([math.comb(m, j) for j in range(m + 1)], dtype=float) / 2.0**m
    s = partial[:, n:n + m + 1] @ weights
    return math.exp(A / 2.0) / tau * s
