"""Diffusion models and their Gaussian transition kernels.

Every supported process is Gaussian after a fixed change of state
variable ``z = phi(x)``:

* standard Brownian motion: ``z = x``
* scaled Brownian motion ``sigma W``: ``z = x / sigma``
* geometric Brownian motion ``exp(sigma W)``: ``z = ln(x) / sigma``
* Ornstein-Uhlenbeck ``dX = (-X/theta + mu) dt + sigma dW``: ``z = x``

In z-coordinates the first three are standard Brownian motion, so the
solvers only ever see two transition laws, each described per time lag by
``z(t) | z(tau) = y  ~  N(alpha * y + beta, scale**2)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .errors import DomainError

__all__ = [
    "Kind",
    "Process",
    "norm_cdf",
    "norm_sf",
    "transition_cdf",
    "transition_pdf",
    "transition_sf",
]

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT2_LO = -4.833646656726457e-17  # 1/sqrt(2) - _INV_SQRT2
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SPLIT = 134217729.0  # 2**27 + 1


def _two_prod(x, y):
    """``(p, e)`` with ``p = fl(x*y)`` and ``x*y = p + e`` exactly (Dekker)."""
    def split(v):
        t = _SPLIT * v
        hi = t - (t - v)
        return hi, v - hi
    p = x * y
    xh, xl = split(x)
    yh, yl = split(y)
    return p, ((xh * yh - p) + xh * yl + xl * yh) + xl * yl


def _erfc_scaled_arg(w):
    """``erfc(w / sqrt(2))`` to about 1e-15 relative error.

    A one-ulp error in ``x = w / sqrt(2)`` or in ``x**2`` costs about
    ``x**2`` ulps in the tail, so both are carried in double-double and the
    tail is built as ``erfcx(|x|) * exp(-x**2)``.
    """
    w = np.asarray(w, dtype=float)
    ok = np.abs(w) < 1e150
    ws = np.where(ok, w, 0.0)
    aw = np.abs(ws)
    x, e = _two_prod(aw, _INV_SQRT2)
    e = e + aw * _INV_SQRT2_LO
    s, s_lo = _two_prod(x, x)
    s_lo = s_lo + 2.0 * x * e
    tail = erfcx(x) * np.exp(-s) * (1.0 - s_lo)
    out = np.where(ws >= 0, tail, 2.0 - tail)
    return np.where(ok, out, np.where(w > 0, 0.0, np.where(w < 0, 2.0, np.nan)))


def norm_cdf(z):
    """Standard normal CDF ``0.5 * erfc(-z / sqrt(2))``.

    Written through one helper so that ``norm_cdf(-w)`` and ``norm_sf(w)``
    perform the same floating-point operations; the mirror-symmetry tests
    depend on this. Relative error stays near 1e-16 down to ``z = -37``.
    """
    return 0.5 * _erfc_scaled_arg(-np.asarray(z, dtype=float))


def norm_sf(z):
    """Standard normal survival function ``0.5 * erfc(z / sqrt(2))``."""
    return 0.5 * _erfc_scaled_arg(z)


class Kind(str, enum.Enum):
    STANDARD_BROWNIAN = "standard-brownian"
    SCALED_BROWNIAN = "scaled-brownian"
    GEOMETRIC_BROWNIAN = "geometric-brownian"
    ORNSTEIN_UHLENBECK = "ornstein-uhlenbeck"


@dataclass(frozen=True)
class Process:
    """A one-dimensional diffusion started at ``x0`` at time ``t0``.

    Use the constructors :meth:`standard_bm`, :meth:`scaled_bm`,
    :meth:`gbm` and :meth:`ou` rather than filling fields by hand.
    """

    kind: Kind
    x0: float = 0.0
    t0: float = 0.0
    sigma: float = 1.0
    theta: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")
        if self.kind is Kind.STANDARD_BROWNIAN and self.sigma != 1.0:
            raise DomainError("standard-brownian has sigma fixed to 1")
        if self.kind is Kind.GEOMETRIC_BROWNIAN and not self.x0 > 0:
            raise DomainError("geometric-brownian requires x0 > 0")
        for name in ("x0", "t0", "sigma", "theta", "mu"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    # -- constructors -------------------------------------------------
    @classmethod
    def standard_bm(cls, x0=0.0, t0=0.0):
        return cls(Kind.STANDARD_BROWNIAN, x0=x0, t0=t0)

    @classmethod
    def scaled_bm(cls, sigma, x0=0.0, t0=0.0):
        return cls(Kind.SCALED_BROWNIAN, x0=x0, t0=t0, sigma=sigma)

    @classmethod
    def gbm(cls, sigma, x0=1.0, t0=0.0):
        return cls(Kind.GEOMETRIC_BROWNIAN, x0=x0, t0=t0, sigma=sigma)

    @classmethod
    def ou(cls, theta, mu, sigma, x0=0.0, t0=0.0):
        return cls(Kind.ORNSTEIN_UHLENBECK, x0=x0, t0=t0, sigma=sigma, theta=theta, mu=mu)

    # -- state space --------------------------------------------------
    @property
    def interval(self) -> tuple[float, float]:
        """Open diffusion interval; both endpoints are natural."""
        if self.kind is Kind.GEOMETRIC_BROWNIAN:
            return (0.0, math.inf)
        return (-math.inf, math.inf)

    @property
    def is_brownian(self) -> bool:
        """True when the process is standard BM in z-coordinates."""
        return self.kind is not Kind.ORNSTEIN_UHLENBECK

    def in_interval(self, x) -> np.ndarray:
        lo, hi = self.interval
        x = np.asarray(x, dtype=float)
        return (x > lo) & (x < hi)

    def to_gauss(self, x):
        """Map states to z-coordinates."""
        x = np.asarray(x, dtype=float)
        if self.kind is Kind.SCALED_BROWNIAN:
            return x / self.sigma
        if self.kind is Kind.GEOMETRIC_BROWNIAN:
            return np.log(x) / self.sigma
        return x

    def gauss_jacobian(self, x):
        """``d phi / dx``, used to carry densities between coordinates."""
        x = np.asarray(x, dtype=float)
        if self.kind is Kind.SCALED_BROWNIAN:
            return np.full_like(x, 1.0 / self.sigma)
        if self.kind is Kind.GEOMETRIC_BROWNIAN:
            return 1.0 / (self.sigma * x)
        return np.ones_like(x)

    @property
    def z0(self) -> float:
        return float(self.to_gauss(self.x0))

    # -- transition law in z-coordinates ------------------------------
    def lag_coefficients(self, lag):
        """Return ``(alpha, beta, scale)`` of the z-transition over ``lag``.

        ``z(tau + lag) | z(tau) = y`` is normal with mean ``alpha*y + beta``
        and standard deviation ``scale``.
        """
        lag = np.asarray(lag, dtype=float)
        if self.kind is Kind.ORNSTEIN_UHLENBECK:
            decay = np.exp(-lag / self.theta)
            alpha = decay
            beta = self.mu * self.theta * (-np.expm1(-lag / self.theta))
            var = 0.5 * self.sigma**2 * self.theta * (-np.expm1(-2.0 * lag / self.theta))
            return alpha, beta, np.sqrt(var)
        return np.ones_like(lag), np.zeros_like(lag), np.sqrt(lag)

    def _standardize(self, x, t, y, tau):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        lag = np.asarray(t, dtype=float) - np.asarray(tau, dtype=float)
        if np.any(~(lag > 0)):
            raise DomainError("transition requires t > tau")
        if np.any(~self.in_interval(x)) or np.any(~self.in_interval(y)):
            raise DomainError(f"state outside the diffusion interval {self.interval}")
        alpha, beta, scale = self.lag_coefficients(lag)
        zx = self.to_gauss(x)
        zy = self.to_gauss(y)
        return (zx - alpha * zy - beta) / scale, scale, x

    def transition_cdf(self, x, t, y, tau):
        """``P(X(t) <= x | X(tau) = y)``."""
        z, _, _ = self._standardize(x, t, y, tau)
        return _scalar(norm_cdf(z))

    def transition_sf(self, x, t, y, tau):
        """``P(X(t) > x | X(tau) = y)`` without cancellation."""
        z, _, _ = self._standardize(x, t, y, tau)
        return _scalar(norm_sf(z))

    def transition_pdf(self, x, t, y, tau):
        """Transition density in the original state variable."""
        z, scale, xs = self._standardize(x, t, y, tau)
        dens = _INV_SQRT2PI * np.exp(-0.5 * z * z) / scale
        return _scalar(dens * self.gauss_jacobian(xs))


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def transition_cdf(p: Process, x, t, y, tau):
    return p.transition_cdf(x, t, y, tau)


def transition_sf(p: Process, x, t, y, tau):
    return p.transition_sf(x, t, y, tau)


def transition_pdf(p: Process, x, t, y, tau):
    return p.transition_pdf(x, t, y, tau)

