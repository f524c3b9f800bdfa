import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hittimes import (DomainError, SeriesControl, bm_exit_cdf, bm_fpt_cdf, bm_fpt_pdf,
                      bm_sub_density_lower, bm_sub_density_upper)

mp.mp.dps = 30


def mp_sub_density(t, x0, a, b):
    """High-precision image series, summed until the images are negligible."""
    K = int(40 * math.sqrt(t) / (b - a)) + 20
    t = mp.mpf(t)
    out = mp.mpf(0)
    for k in range(-K, K + 1):
        d = mp.mpf(x0 - a) + 2 * k * mp.mpf(b - a)
        out += d / mp.sqrt(2 * mp.pi * t**3) * mp.exp(-d * d / (2 * t))
    return float(out)


def full_sum(t, x0, a, b, K=1000):
    k = np.arange(-K, K + 1)
    d = (x0 - a) + 2.0 * k * (b - a)
    return float(np.sum(d / np.sqrt(2 * np.pi * t**3) * np.exp(-d * d / (2 * t))))


@pytest.mark.parametrize("t", [0.01, 0.1, 0.5, 1.0, 3.0, 8.9, 9.1, 10.0, 40.0])
def test_series_matches_high_precision(t):
    assert bm_sub_density_lower(t, 0.0, -1.0, 2.0) == pytest.approx(mp_sub_density(t, 0.0, -1.0, 2.0),
                                                                    rel=1e-12, abs=1e-300)
    assert bm_sub_density_upper(t, 0.0, -1.0, 2.0) == pytest.approx(mp_sub_density(t, 0.0, -2.0, 1.0),
                                                                    rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(1e-3, 100.0), a=st.floats(-3, -0.05), w=st.floats(0.5, 5.0))
def test_adaptive_stop_matches_thousand_terms(t, a, w):
    b = a + w
    x0 = a + 0.37 * w
    assert abs(bm_sub_density_lower(t, x0, a, b) - full_sum(t, x0, a, b)) <= 1e-12


@settings(max_examples=80, deadline=None)
@given(t=st.floats(1e-3, 100.0), a=st.floats(-3, -0.01), w=st.floats(0.5, 6.0), frac=st.floats(0.01, 0.99),
       n=st.integers(100, 300))
def test_no_clamping_with_enough_terms(t, a, w, frac, n):
    b = a + w
    x0 = a + frac * w
    ctl = SeriesControl(max_terms=n)
    for f in (bm_sub_density_lower, bm_sub_density_upper):
        v, clamped = f(t, x0, a, b, ctl, return_flags=True)
        assert not clamped and v >= 0


def test_symmetric_strip():
    t = np.linspace(0.01, 20, 2000)
    assert np.array_equal(bm_sub_density_lower(t, 0.0, -1.0, 1.0), bm_sub_density_upper(t, 0.0, -1.0, 1.0))


def test_reflection():
    t = np.linspace(0.01, 20, 500)
    assert np.allclose(bm_sub_density_upper(t, 0.0, -2.0, 1.0), bm_sub_density_lower(t, 0.0, -1.0, 2.0),
                       rtol=1e-13, atol=0)


def test_far_upper_boundary_degenerates():
    ref = float(mp.exp(-0.5) / mp.sqrt(2 * mp.pi))
    assert bm_sub_density_lower(1.0, 0.0, -1.0, 50.0) == pytest.approx(ref, rel=1e-14)
    assert bm_sub_density_lower(1.0, 0.0, -1.0, 50.0) == pytest.approx(0.241970725, abs=1e-9)


def test_total_exit_mass():
    t = np.linspace(0.0, 200.0, 400_001)[1:]
    g = bm_sub_density_lower(t, 0.0, -1.0, 2.0) + bm_sub_density_upper(t, 0.0, -1.0, 2.0)
    mass = integrate.trapezoid(np.concatenate([[0.0], g]), np.concatenate([[0.0], t]))
    assert mass == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("a, b, x0", [(-1.0, 2.0, 0.0), (-1.0, 1.0, 0.0), (-0.3, 2.2, 0.5)])
def test_mass_split(a, b, x0):
    # horizon where the exit survival is below 1e-5
    T = 1.0
    while sum(bm_exit_cdf(T, x0, a, b)) < 1 - 1e-5:
        T *= 1.5
    ma, _ = integrate.quad(lambda t: bm_sub_density_lower(t, x0, a, b), 0, T, limit=500)
    mb, _ = integrate.quad(lambda t: bm_sub_density_upper(t, x0, a, b), 0, T, limit=500)
    assert ma == pytest.approx((b - x0) / (b - a), abs=1e-4)
    assert mb == pytest.approx((x0 - a) / (b - a), abs=1e-4)


def test_exit_cdf_is_integral_of_sub_densities():
    for T in (0.3, 2.0, 9.0):
        ea, eb = bm_exit_cdf(T, 0.0, -1.0, 2.0)
        qa, _ = integrate.quad(lambda t: bm_sub_density_lower(t, 0.0, -1.0, 2.0), 0, T, limit=300)
        qb, _ = integrate.quad(lambda t: bm_sub_density_upper(t, 0.0, -1.0, 2.0), 0, T, limit=300)
        assert ea == pytest.approx(qa, abs=1e-10)
        assert eb == pytest.approx(qb, abs=1e-10)


def test_t0_shift():
    assert bm_sub_density_lower(3.5, 0.0, -1.0, 2.0, t0=2.5) == bm_sub_density_lower(1.0, 0.0, -1.0, 2.0)
    assert bm_fpt_cdf(3.0, 0.0, -1.0, t0=2.0) == bm_fpt_cdf(1.0, 0.0, -1.0)


# --- single boundary ----------------------------------------------------------

def test_fpt_pdf_values():
    ref = float(mp.exp(-0.5) / mp.sqrt(2 * mp.pi))
    assert bm_fpt_pdf(1.0, 0.0, -1.0) == pytest.approx(ref, rel=1e-15)
    assert bm_fpt_pdf(1.0, 0.0, 1.0) == bm_fpt_pdf(1.0, 0.0, -1.0)
    assert bm_fpt_pdf(1e-13, 0.0, 1.0) == 0.0
    assert bm_fpt_pdf(1e-4, 0.0, 1.0) < 1e-300


def test_fpt_cdf_values():
    ref = float(mp.erfc(1 / mp.sqrt(2)))
    assert bm_fpt_cdf(1.0, 0.0, -1.0) == pytest.approx(ref, rel=1e-15)
    assert bm_fpt_cdf(1.0, 0.0, -1.0) == pytest.approx(0.317310507, abs=1e-9)
    q, _ = integrate.quad(lambda t: bm_fpt_pdf(t, 0.0, -1.0), 0, 1, epsabs=1e-14)
    assert q == pytest.approx(ref, abs=1e-12)
    assert bm_fpt_cdf(1e30, 0.0, -1.0) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(0.05, 50.0), d=st.floats(0.1, 3.0))
def test_cdf_derivative_is_pdf(t, d):
    eps = 1e-5 * t
    fd = (bm_fpt_cdf(t + eps, 0.0, d) - bm_fpt_cdf(t - eps, 0.0, d)) / (2 * eps)
    assert abs(fd - bm_fpt_pdf(t, 0.0, d)) <= 1e-8


def test_cdf_nondecreasing():
    t = np.geomspace(1e-4, 1e6, 2000)
    assert np.all(np.diff(bm_fpt_cdf(t, 0.0, 1.5)) >= 0)


# --- errors --------------------------------------------------------------------

def test_domain_errors():
    with pytest.raises(DomainError):
        bm_sub_density_lower(1.0, 3.0, -1.0, 2.0)
    with pytest.raises(DomainError):
        bm_sub_density_lower(0.0, 0.0, -1.0, 2.0)
    with pytest.raises(DomainError):
        bm_fpt_pdf(-1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        bm_fpt_cdf(0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        SeriesControl(max_terms=0)
    with pytest.raises(DomainError):
        SeriesControl(tail_tolerance=0.0)


def test_flags_follow_the_values():
    t = np.geomspace(1e-3, 100, 400)
    for ctl in (SeriesControl(max_terms=1), SeriesControl()):
        v, flags = bm_sub_density_lower(t, 0.3, -1.0, 0.5, ctl, return_flags=True)
        assert v.shape == flags.shape == t.shape
        assert np.all(v >= 0) and not flags.any()


def test_long_time_branch_is_continuous():
    # the sine-series form takes over at t = (b - a)**2
    w = 3.0
    t = np.array([w * w * (1 - 1e-12), w * w * (1 + 1e-12)])
    v = bm_sub_density_lower(t, 0.0, -1.0, 2.0)
    assert v[0] == pytest.approx(v[1], rel=1e-12)
