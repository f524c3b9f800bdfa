# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Euler-Volterra recursions and Monte Carlo path loop."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport erfc, exp, log, fabs
from libc.stdint cimport uint64_t, int64_t

from hittimes._rng import ZIG_X, ZIG_RATIO, ZIG_R, path_states

cnp.import_array()

cdef double INV_SQRT2 = 0.70710678118654752440
cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline double ncdf(double z) noexcept nogil:
    return 0.5 * erfc(-z * INV_SQRT2)


cdef inline double nsf(double z) noexcept nogil:
    return 0.5 * erfc(z * INV_SQRT2)


cdef inline int classify(double* v, double* runmax, double rel_tol, double abs_tol) noexcept nogil:
    """0: fine, 1: small negative (to be clamped on output), 2: abort.

    The raw value is kept so the recursion stays the discretized equation.
    """
    if v[0] >= 0.0:
        if v[0] > runmax[0]:
            runmax[0] = v[0]
        return 0
    if v[0] < -(rel_tol * runmax[0] + abs_tol):
        return 2
    return 1


def lagged_pair(const double[::1] kaa, const double[::1] kab,
                const double[::1] kba, const double[::1] kbb,
                const double[::1] ra, const double[::1] rb,
                double h, double rel_tol, double abs_tol):
    cdef Py_ssize_t n = ra.shape[0], i, j, L
    cdef double sa, sb, va, vb, ma = 0.0, mb = 0.0
    cdef int ca, cb
    ga_arr = np.zeros(n)
    gb_arr = np.zeros(n)
    fl_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] ga = ga_arr, gb = gb_arr
    cdef unsigned char[::1] fl = fl_arr
    cdef Py_ssize_t abort = -1
    with nogil:
        for i in range(n):
            sa = 0.0
            sb = 0.0
            for j in range(i):
                L = i - j - 1
                sa = sa + (kaa[L] * ga[j] + kab[L] * gb[j])
                sb = sb + (kba[L] * ga[j] + kbb[L] * gb[j])
            va = 2.0 * ra[i] / h - 2.0 * sa
            vb = 2.0 * rb[i] / h - 2.0 * sb
            ca = classify(&va, &ma, rel_tol, abs_tol)
            cb = classify(&vb, &mb, rel_tol, abs_tol)
            if ca == 2 or cb == 2:
                abort = i
                break
            ga[i] = va
            gb[i] = vb
            fl[i] = ca + 2 * cb
    return ga_arr, gb_arr, fl_arr, abort


def general_pair(const double[::1] A, const double[::1] B,
                 const double[::1] alpha, const double[::1] beta,
                 const double[::1] scale,
                 const double[::1] ra, const double[::1] rb,
                 double h, double rel_tol, double abs_tol):
    cdef Py_ssize_t n = ra.shape[0], i, j, L
    cdef double sa, sb, va, vb, ma = 0.0, mb = 0.0, al, be, sc
    cdef int ca, cb
    ga_arr = np.zeros(n)
    gb_arr = np.zeros(n)
    fl_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] ga = ga_arr, gb = gb_arr
    cdef unsigned char[::1] fl = fl_arr
    cdef Py_ssize_t abort = -1
    with nogil:
        for i in range(n):
            sa = 0.0
            sb = 0.0
            for j in range(i):
                L = i - j
                al = alpha[L]
                be = beta[L]
                sc = scale[L]
                sa = sa + (ncdf((A[i] - al * A[j] - be) / sc) * ga[j]
                           + ncdf((A[i] - al * B[j] - be) / sc) * gb[j])
                sb = sb + (nsf((B[i] - al * A[j] - be) / sc) * ga[j]
                           + nsf((B[i] - al * B[j] - be) / sc) * gb[j])
            va = 2.0 * ra[i] / h - 2.0 * sa
            vb = 2.0 * rb[i] / h - 2.0 * sb
            ca = classify(&va, &ma, rel_tol, abs_tol)
            cb = classify(&vb, &mb, rel_tol, abs_tol)
            if ca == 2 or cb == 2:
                abort = i
                break
            ga[i] = va
            gb[i] = vb
            fl[i] = ca + 2 * cb
    return ga_arr, gb_arr, fl_arr, abort


def lagged_single(const double[::1] k, const double[::1] r,
                  double h, double rel_tol, double abs_tol):
    cdef Py_ssize_t n = r.shape[0], i, j
    cdef double s, v, m = 0.0
    cdef int c
    g_arr = np.zeros(n)
    fl_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] g = g_arr
    cdef unsigned char[::1] fl = fl_arr
    cdef Py_ssize_t abort = -1
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(i):
                s = s + k[i - j - 1] * g[j]
            v = 2.0 * r[i] / h - 2.0 * s
            c = classify(&v, &m, rel_tol, abs_tol)
            if c == 2:
                abort = i
                break
            g[i] = v
            fl[i] = c
    return g_arr, fl_arr, abort


def general_single(const double[::1] C, const double[::1] alpha,
                   const double[::1] beta, const double[::1] scale,
                   const double[::1] r, double h, bint upper,
                   double rel_tol, double abs_tol):
    cdef Py_ssize_t n = r.shape[0], i, j, L
    cdef double s, v, z, m = 0.0
    cdef int c
    g_arr = np.zeros(n)
    fl_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] g = g_arr
    cdef unsigned char[::1] fl = fl_arr
    cdef Py_ssize_t abort = -1
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(i):
                L = i - j
                z = (C[i] - alpha[L] * C[j] - beta[L]) / scale[L]
                if upper:
                    s = s + nsf(z) * g[j]
                else:
                    s = s + ncdf(z) * g[j]
            v = 2.0 * r[i] / h - 2.0 * s
            c = classify(&v, &m, rel_tol, abs_tol)
            if c == 2:
                abort = i
                break
            g[i] = v
            fl[i] = c
    return g_arr, fl_arr, abort


def restart_family(const double[::1] S, const double[::1] C,
                   const double[::1] alpha, const double[::1] beta,
                   const double[::1] scale, double h, bint upper, int threads):
    """R[j, k]: hitting density of C at knot k after a restart from S[j] at knot j (unclamped)."""
    cdef Py_ssize_t n = C.shape[0], j, k, l, L
    cdef double z, s, v
    ker_arr = np.zeros((n, n))
    out_arr = np.zeros((n, n))
    cdef double[:, ::1] ker = ker_arr
    cdef double[:, ::1] R = out_arr
    cdef long nclamp = 0
    with nogil:
        for k in range(n):
            for l in range(k):
                L = k - l
                z = (C[k] - alpha[L] * C[l] - beta[L]) / scale[L]
                ker[k, l] = nsf(z) if upper else ncdf(z)
        for j in prange(n, num_threads=threads, schedule="dynamic"):
            for k in range(j + 1, n):
                L = k - j
                z = (C[k] - alpha[L] * S[j] - beta[L]) / scale[L]
                if upper:
                    v = 2.0 * nsf(z) / h
                else:
                    v = 2.0 * ncdf(z) / h
                s = 0.0
                for l in range(j + 1, k):
                    s = s + ker[k, l] * R[j, l]
                v = v - 2.0 * s
                if v < 0.0:
                    nclamp += 1
                R[j, k] = v
    return out_arr, nclamp


# ---------------------------------------------------------------------------
# Monte Carlo

cdef double[::1] ZX = np.ascontiguousarray(ZIG_X)
cdef double[::1] ZR = np.ascontiguousarray(ZIG_RATIO)
cdef double ZRR = ZIG_R


cdef inline uint64_t sm_next(uint64_t* st) noexcept nogil:
    cdef uint64_t z
    st[0] = st[0] + GOLDEN
    z = st[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double unit_open(uint64_t* st) noexcept nogil:
    return (<double>(sm_next(st) >> 11) + 0.5) * 1.1102230246251565e-16


cdef inline double zig_normal(uint64_t* st, const double* X, const double* Rt, double r) noexcept nogil:
    cdef uint64_t b
    cdef int i
    cdef double u, x, y, f0, f1
    while True:
        b = sm_next(st)
        i = <int>(b & 127)
        u = 2.0 * (<double>(b >> 11) * 1.1102230246251565e-16) - 1.0
        if fabs(u) < Rt[i]:
            return u * X[i]
        if i == 0:
            while True:
                x = log(unit_open(st)) / r
                y = log(unit_open(st))
                if not (-2.0 * y < x * x):
                    break
            return x - r if u < 0.0 else r - x
        x = u * X[i]
        f0 = exp(-0.5 * (X[i] * X[i] - x * x))
        f1 = exp(-0.5 * (X[i + 1] * X[i + 1] - x * x))
        if f1 + unit_open(st) * (f0 - f1) < 1.0:
            return x


def simulate(bint ou, double sd, double theta, double mu, double dt, double z0,
             const double[::1] A, const double[::1] B, double sign_a, double sign_b,
             unsigned long long seed, Py_ssize_t n_paths, int threads):
    """First grid indices at which each path is at/beyond A and B (-1: never)."""
    cdef Py_ssize_t nsteps = A.shape[0] - 1, p, k
    states_arr = path_states(seed, n_paths)
    cdef uint64_t[::1] states = states_arr
    ka_arr = np.full(n_paths, -1, dtype=np.int64)
    kb_arr = np.full(n_paths, -1, dtype=np.int64)
    cdef int64_t[::1] KA = ka_arr, KB = kb_arr
    cdef const double* X = &ZX[0]
    cdef const double* Rt = &ZR[0]
    cdef double r = ZRR
    cdef uint64_t st
    cdef double x, z
    cdef int64_t ka, kb
    with nogil:
        for p in prange(n_paths, num_threads=threads, schedule="dynamic"):
            st = states[p]
            x = z0
            ka = -1
            kb = -1
            for k in range(1, nsteps + 1):
                z = zig_normal(&st, X, Rt, r)
                if ou:
                    x = x + (mu - x / theta) * dt + sd * z
                else:
                    x = x + sd * z
                if ka < 0 and sign_a * (x - A[k]) <= 0.0:
                    ka = k
                if kb < 0 and sign_b * (x - B[k]) <= 0.0:
                    kb = k
                if ka >= 0 and kb >= 0:
                    break
            KA[p] = ka
            KB[p] = kb
    return ka_arr, kb_arr
