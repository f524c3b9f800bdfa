"""Pure-Python/numpy versions of the compiled kernels in ``_core.pyx``.

Same signatures and return values. Inner sums are vectorized per step; the
Monte Carlo loop is vectorized across paths and draws from the same
per-path streams, so both backends sample the same paths.
"""
import math

import numpy as np

from ._rng import GOLDEN, MASK64, ZIG_R, ZIG_RATIO, ZIG_X, path_states
from .process import norm_cdf, norm_sf

_U53 = 1.1102230246251565e-16


def _clamp(v, runmax, rel_tol, abs_tol):
    # raw value is kept; only the flag says it needs clamping on output
    if v >= 0.0:
        return v, max(runmax, v), 0
    if v < -(rel_tol * runmax + abs_tol):
        return v, runmax, 2
    return v, runmax, 1


def lagged_pair(kaa, kab, kba, kbb, ra, rb, h, rel_tol, abs_tol):
    n = len(ra)
    ga = np.zeros(n)
    gb = np.zeros(n)
    fl = np.zeros(n, dtype=np.uint8)
    ma = mb = 0.0
    for i in range(n):
        if i:
            lag = slice(i - 1, None, -1)
            sa = np.sum(kaa[lag] * ga[:i] + kab[lag] * gb[:i])
            sb = np.sum(kba[lag] * ga[:i] + kbb[lag] * gb[:i])
        else:
            sa = sb = 0.0
        va, ma, ca = _clamp(2.0 * ra[i] / h - 2.0 * sa, ma, rel_tol, abs_tol)
        vb, mb, cb = _clamp(2.0 * rb[i] / h - 2.0 * sb, mb, rel_tol, abs_tol)
        if ca == 2 or cb == 2:
            return ga, gb, fl, i
        ga[i], gb[i], fl[i] = va, vb, ca + 2 * cb
    return ga, gb, fl, -1


def general_pair(A, B, alpha, beta, scale, ra, rb, h, rel_tol, abs_tol):
    n = len(ra)
    ga = np.zeros(n)
    gb = np.zeros(n)
    fl = np.zeros(n, dtype=np.uint8)
    ma = mb = 0.0
    for i in range(n):
        if i:
            L = i - np.arange(i)
            al, be, sc = alpha[L], beta[L], scale[L]
            sa = np.sum(norm_cdf((A[i] - al * A[:i] - be) / sc) * ga[:i]
                        + norm_cdf((A[i] - al * B[:i] - be) / sc) * gb[:i])
            sb = np.sum(norm_sf((B[i] - al * A[:i] - be) / sc) * ga[:i]
                        + norm_sf((B[i] - al * B[:i] - be) / sc) * gb[:i])
        else:
            sa = sb = 0.0
        va, ma, ca = _clamp(2.0 * ra[i] / h - 2.0 * sa, ma, rel_tol, abs_tol)
        vb, mb, cb = _clamp(2.0 * rb[i] / h - 2.0 * sb, mb, rel_tol, abs_tol)
        if ca == 2 or cb == 2:
            return ga, gb, fl, i
        ga[i], gb[i], fl[i] = va, vb, ca + 2 * cb
    return ga, gb, fl, -1


def lagged_single(k, r, h, rel_tol, abs_tol):
    n = len(r)
    g = np.zeros(n)
    fl = np.zeros(n, dtype=np.uint8)
    m = 0.0
    for i in range(n):
        s = np.sum(k[i - 1::-1] * g[:i]) if i else 0.0
        v, m, c = _clamp(2.0 * r[i] / h - 2.0 * s, m, rel_tol, abs_tol)
        if c == 2:
            return g, fl, i
        g[i], fl[i] = v, c
    return g, fl, -1


def general_single(C, alpha, beta, scale, r, h, upper, rel_tol, abs_tol):
    n = len(r)
    g = np.zeros(n)
    fl = np.zeros(n, dtype=np.uint8)
    m = 0.0
    cdf = norm_sf if upper else norm_cdf
    for i in range(n):
        if i:
            L = i - np.arange(i)
            s = np.sum(cdf((C[i] - alpha[L] * C[:i] - beta[L]) / scale[L]) * g[:i])
        else:
            s = 0.0
        v, m, c = _clamp(2.0 * r[i] / h - 2.0 * s, m, rel_tol, abs_tol)
        if c == 2:
            return g, fl, i
        g[i], fl[i] = v, c
    return g, fl, -1


def restart_family(S, C, alpha, beta, scale, h, upper, threads):
    n = len(C)
    cdf = norm_sf if upper else norm_cdf
    k_idx, l_idx = np.tril_indices(n, -1)
    L = k_idx - l_idx
    ker = np.zeros((n, n))
    ker[k_idx, l_idx] = cdf((C[k_idx] - alpha[L] * C[l_idx] - beta[L]) / scale[L])
    init = np.zeros((n, n))  # init[j, k] for k > j
    j_idx, kk = l_idx, k_idx
    init[j_idx, kk] = 2.0 * cdf((C[kk] - alpha[L] * S[j_idx] - beta[L]) / scale[L]) / h
    R = np.zeros((n, n))
    nclamp = 0
    # advance all restarts together: column k depends on columns < k
    for k in range(1, n):
        js = np.arange(k)
        s = R[js, :k] @ ker[k, :k]
        v = init[js, k] - 2.0 * s
        neg = v < 0.0
        nclamp += int(neg.sum())
        R[js, k] = v
    return R, nclamp


# ---------------------------------------------------------------------------
# Monte Carlo

def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class _Scalar:
    """Scalar SplitMix64 stream used for the rare ziggurat slow path."""

    def __init__(self, state):
        self.state = int(state)

    def next(self):
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def unit_open(self):
        return ((self.next() >> 11) + 0.5) * _U53


def _slow_normal(stream, i, u):
    """Finish one ziggurat draw after a fast-path rejection (``i``, ``u`` given)."""
    X, Rt = ZIG_X, ZIG_RATIO
    while True:
        if abs(u) < Rt[i]:
            return u * X[i]
        if i == 0:
            while True:
                x = math.log(stream.unit_open()) / ZIG_R
                y = math.log(stream.unit_open())
                if not (-2.0 * y < x * x):
                    break
            return x - ZIG_R if u < 0.0 else ZIG_R - x
        x = u * X[i]
        f0 = math.exp(-0.5 * (X[i] * X[i] - x * x))
        f1 = math.exp(-0.5 * (X[i + 1] * X[i + 1] - x * x))
        if f1 + stream.unit_open() * (f0 - f1) < 1.0:
            return x
        b = stream.next()
        i = b & 127
        u = 2.0 * (float(b >> 11) * _U53) - 1.0


def _normals(states):
    """One ziggurat normal per stream; ``states`` is advanced in place."""
    with np.errstate(over="ignore"):
        states += np.uint64(GOLDEN)
        b = _mix(states.copy())
    idx = (b & np.uint64(127)).astype(np.intp)
    u = 2.0 * ((b >> np.uint64(11)).astype(np.float64) * _U53) - 1.0
    z = u * ZIG_X[idx]
    slow = ~(np.abs(u) < ZIG_RATIO[idx])
    for p in np.flatnonzero(slow):
        stream = _Scalar(states[p])
        z[p] = _slow_normal(stream, int(idx[p]), float(u[p]))
        states[p] = np.uint64(stream.state)
    return z


def simulate(ou, sd, theta, mu, dt, z0, A, B, sign_a, sign_b, seed, n_paths, threads):
    nsteps = len(A) - 1
    states = path_states(seed, n_paths)
    x = np.full(n_paths, z0)
    ka = np.full(n_paths, -1, dtype=np.int64)
    kb = np.full(n_paths, -1, dtype=np.int64)
    alive = np.arange(n_paths)
    for k in range(1, nsteps + 1):
        if alive.size == 0:
            break
        st = states[alive]
        z = _normals(st)
        states[alive] = st
        xa = x[alive]
        if ou:
            xa = xa + (mu - xa / theta) * dt + sd * z
        else:
            xa = xa + sd * z
        x[alive] = xa
        hit_a = (ka[alive] < 0) & (sign_a * (xa - A[k]) <= 0.0)
        hit_b = (kb[alive] < 0) & (sign_b * (xa - B[k]) <= 0.0)
        ka[alive[hit_a]] = k
        kb[alive[hit_b]] = k
        alive = alive[(ka[alive] < 0) | (kb[alive] < 0)]
    return ka, kb
