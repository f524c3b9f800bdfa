"""Closed-form Brownian references for constant boundaries.

Image-series sub-densities of exit through each side of a strip, and the
single-level hitting-time density and distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from .errors import DomainError
from .process import norm_sf

__all__ = [
    "SeriesControl",
    "bm_exit_cdf",
    "bm_fpt_cdf",
    "bm_fpt_pdf",
    "bm_sub_density_lower",
    "bm_sub_density_upper",
]

_TINY_T = 1e-12
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation of the image series: ``k = -max_terms .. max_terms``."""

    max_terms: int = 1000
    tail_tolerance: float = 1e-16

    def __post_init__(self):
        if self.max_terms < 1:
            raise DomainError("max_terms must be >= 1")
        if not self.tail_tolerance > 0:
            raise DomainError("tail_tolerance must be positive")


def _elapsed(t, t0):
    tau = np.asarray(t, dtype=float) - t0
    if np.any(~(tau > 0)):
        raise DomainError("time must exceed t0")
    return tau


def _image_term(d, tau):
    return d * _INV_SQRT2PI / np.sqrt(tau**3) * np.exp(-d * d / (2.0 * tau))


def _image_series(offset, width, tau, ctl):
    """Sum ``term(offset + 2k width)`` over k, pairing k and -k."""
    total = _image_term(offset, tau)
    sqrt_tau = np.sqrt(tau)
    for k in range(1, ctl.max_terms + 1):
        d_plus = offset + 2 * k * width
        d_minus = offset - 2 * k * width
        pair = _image_term(d_plus, tau) + _image_term(d_minus, tau)
        total = total + pair
        # stop only once both images sit on the decaying side of the term
        decaying = (np.abs(d_plus) > sqrt_tau) & (np.abs(d_minus) > sqrt_tau)
        if np.all(decaying & (np.abs(pair) < ctl.tail_tolerance)):
            break
    return total


def _sine_series(offset, width, tau, ctl):
    """Eigenfunction form ``(pi/w^2) sum n sin(n pi y/w) exp(-n^2 pi^2 tau / (2 w^2))``.

    Same function as the image series, but free of cancellation once
    ``tau / w**2`` is of order one.
    """
    c = math.pi / width
    total = np.zeros_like(tau)
    for n in range(1, ctl.max_terms + 1):
        env = n * np.exp(-0.5 * (n * c) ** 2 * tau)
        total = total + env * math.sin(n * c * offset)
        if np.all(c / width * env < ctl.tail_tolerance):
            break
    return c / width * total


def _sub_density(offset, t, x0, a, b, ctl, t0, return_flags):
    ctl = ctl or SeriesControl()
    if not a < x0 < b:
        raise DomainError("requires a < x0 < b")
    tau = np.asarray(_elapsed(t, t0))
    width = b - a
    small = tau < _TINY_T
    long = tau > width * width
    short_tau = np.where(small | long, 1.0, tau)
    raw = np.where(small, 0.0, _image_series(offset, width, short_tau, ctl))
    if np.any(long):
        raw = np.where(long, _sine_series(offset, width, np.where(long, tau, width * width), ctl), raw)
    clamped = raw < 0
    out = np.where(clamped, 0.0, raw)
    out = float(out) if out.ndim == 0 else out
    if return_flags:
        return out, (bool(clamped) if np.ndim(clamped) == 0 else clamped)
    return out


def bm_sub_density_lower(t, x0, a, b, ctl=None, t0=0.0, return_flags=False):
    """Density of hitting ``a`` at ``t`` before ever touching ``b``.

    Parameters
    ----------
    t : float or ndarray
        Absolute times, ``t > t0``.
    x0, a, b : float
        Start point and constant boundaries, ``a < x0 < b``.
    ctl : SeriesControl, optional
        Truncation controls.
    return_flags : bool
        Also return whether a negative partial sum was clamped to zero.
    """
    return _sub_density(x0 - a, t, x0, a, b, ctl, t0, return_flags)


def bm_sub_density_upper(t, x0, a, b, ctl=None, t0=0.0, return_flags=False):
    """Density of hitting ``b`` at ``t`` before ever touching ``a``."""
    return _sub_density(b - x0, t, x0, a, b, ctl, t0, return_flags)


def bm_fpt_pdf(t, x0, a, t0=0.0):
    """First hitting time density of level ``a`` for standard BM."""
    if a == x0:
        raise DomainError("level coincides with the start point")
    tau = _elapsed(t, t0)
    small = tau < _TINY_T
    out = np.where(small, 0.0, _image_term(abs(a - x0), np.where(small, 1.0, tau)))
    return float(out) if out.ndim == 0 else out


def bm_fpt_cdf(t, x0, a, t0=0.0):
    """``P(T_a <= t) = erfc(|a - x0| / sqrt(2 (t - t0)))``."""
    tau = _elapsed(t, t0)
    out = 2.0 * norm_sf(abs(a - x0) / np.sqrt(tau))
    return float(out) if np.ndim(out) == 0 else out


def bm_exit_cdf(t, x0, a, b, ctl=None, t0=0.0):
    """``P(min(T_a, T_b) <= t)``, the image series integrated term by term.

    Returns the pair ``(P(T_a <= t, T_a < T_b), P(T_b <= t, T_b < T_a))``.
    """
    ctl = ctl or SeriesControl()
    if not a < x0 < b:
        raise DomainError("requires a < x0 < b")
    tau = _elapsed(t, t0)
    width = b - a

    def integrated(offset):
        k = np.arange(-ctl.max_terms, ctl.max_terms + 1)
        d = offset + 2.0 * k * width
        tt = np.atleast_1d(tau)[:, None]
        vals = np.sign(d) * 2.0 * norm_sf(np.abs(d) / np.sqrt(tt))
        s = vals.sum(axis=1)
        return float(s[0]) if np.ndim(tau) == 0 else s

    return integrated(x0 - a), integrated(b - x0)
