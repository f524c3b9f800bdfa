"""End-to-end acceptance checks.

Each check prints one ``ACCEPTANCE n PASS|FAIL`` line with the measured
figures, then asserts at the pinned tolerance. The lines are repeated in
the pytest terminal summary.
"""
import math
import time
import warnings

import numpy as np
from conftest import MC_SEED, bm_strip, cosine_strip, ou_strip, record_acceptance

from hittimes import (Boundary, Process, SeriesControl, SimConfig, StripProblem, TimeGrid, assemble_case_i,
                      assemble_case_ii, bm_exit_cdf, bm_fpt_cdf, bm_fpt_pdf, closed_form_pair,
                      compare_joint, compare_marginal, compare_sub_density, convergence_study,
                      copula_density, invert, make_evaluator, marginal_table, simulate_pair,
                      solve_two_boundary, sub_density_laplace)

EDGES = np.arange(0.0, 4.0 + 1e-12, 0.25)
BM = Process.standard_bm()


def mse(x, y):
    return float(np.mean((np.asarray(x) - np.asarray(y)) ** 2))


def quiet(fn, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*args, **kwargs)


# 1 -------------------------------------------------------------------------------------------

def test_acceptance_01_solver_mse():
    sp = bm_strip(-1.0, 2.0)
    g = TimeGrid.covering(0.0, 0.01, 20.0)
    start = time.perf_counter()
    s = solve_two_boundary(sp, g)
    elapsed = time.perf_counter() - start
    r = closed_form_pair(sp, g, SeriesControl(max_terms=1000))
    ea, eb = mse(s.g_lower, r.g_lower), mse(s.g_upper, r.g_upper)
    ok = ea <= 1e-5 and eb <= 1e-6 and elapsed <= 30.0 and g.n == 2000
    record_acceptance(1, ok, f"MSE(g_a)={ea:.3g} <= 1e-5, MSE(g_b)={eb:.3g} <= 1e-6, "
                             f"{g.n} knots in {elapsed:.3f}s <= 30s")
    assert g.n == 2000
    assert ea <= 1e-5 and eb <= 1e-6
    assert elapsed <= 30.0


# 2 -------------------------------------------------------------------------------------------

def test_acceptance_02_laplace_mse():
    g = TimeGrid.covering(0.0, 0.01, 20.0)
    ref = closed_form_pair(bm_strip(-1.0, 2.0), g, SeriesControl(max_terms=1000))
    worst_mse, worst_time, parts = 0.0, 0.0, []
    for rep in ("ito-mckean", "fortet"):
        start = time.perf_counter()
        ga = invert(make_evaluator(rep, BM, -1.0, 2.0, side="lower"), g.knots)
        gb = invert(make_evaluator(rep, BM, -1.0, 2.0, side="upper"), g.knots)
        elapsed = time.perf_counter() - start
        ea, eb = mse(ga, ref.g_lower), mse(gb, ref.g_upper)
        worst_mse = max(worst_mse, ea, eb)
        worst_time = max(worst_time, elapsed)
        parts.append(f"{rep}: MSE {ea:.2g}/{eb:.2g} in {elapsed:.3f}s")
    ok = worst_mse <= 1e-12 and worst_time <= 5.0
    record_acceptance(2, ok, "; ".join(parts) + " (<= 1e-12, <= 5s)")
    assert worst_mse <= 1e-12
    assert worst_time <= 5.0


# 3 -------------------------------------------------------------------------------------------

def test_acceptance_03_convergence_order():
    rep = convergence_study(bm_strip(-1.0, 2.0), [0.04, 0.02, 0.01, 0.005])
    order, ratios = rep.empirical_order, rep.ratios
    ok = order >= 1.0 and min(ratios) >= 1.8
    record_acceptance(3, ok, f"order={order:.4f} >= 1.0, ratios="
                             + ", ".join(f"{r:.3f}" for r in ratios) + " >= 1.8")
    assert min(ratios) >= 1.8
    assert order >= 1.0


# 4 -------------------------------------------------------------------------------------------

def test_acceptance_04_laplace_representations():
    lams = np.logspace(-3, 3, 25)
    reps = ("ito-mckean", "fortet", "density-ratio")
    vals = {r: sub_density_laplace(r, BM, -1.0, 2.0, lams) for r in reps}
    pair = 0.0
    for r1 in reps:
        for r2 in reps:
            for k in (0, 1):
                pair = max(pair, float(np.max(np.abs(vals[r1][k] - vals[r2][k]) / np.abs(vals[r2][k]))))
    probe = 0.0
    for probes in ((3.0, -2.0), (2.5, -4.0), (7.0, -1.1)):
        got = sub_density_laplace("density-ratio", BM, -1.0, 2.0, lams, probes=probes)
        for k in (0, 1):
            probe = max(probe, float(np.max(np.abs(got[k] - vals["density-ratio"][k]) / vals["density-ratio"][k])))
    ok = pair <= 1e-10 and probe <= 1e-10
    record_acceptance(4, ok, f"pairwise rel {pair:.2g} <= 1e-10, probe invariance {probe:.2g} <= 1e-10")
    assert pair <= 1e-10
    assert probe <= 1e-10


# 5 -------------------------------------------------------------------------------------------

def test_acceptance_05_mass_and_split():
    worst_mass, worst_split, parts = 0.0, 0.0, []
    for a, b, x0 in ((-1.0, 2.0, 0.0), (-1.0, 1.0, 0.0), (-0.5, 1.5, 0.2)):
        s = solve_two_boundary(bm_strip(a, b, x0), TimeGrid.covering(0.0, 0.01, 20 * (b - a) ** 2))
        total = s.mass_lower + s.mass_upper
        split = s.mass_lower - (b - x0) / (b - a)
        worst_mass = max(worst_mass, abs(total - 1.0))
        worst_split = max(worst_split, abs(split))
        parts.append(f"({a:g},{b:g},x0={x0:g}) mass={total:.5f} split err={split:+.2e}")
    ok = worst_mass <= 0.01 and worst_split <= 0.01
    record_acceptance(5, ok, "; ".join(parts) + " (tol 0.01)")
    assert worst_mass <= 0.01
    assert worst_split <= 0.01


# 6 -------------------------------------------------------------------------------------------

def test_acceptance_06_joint_surface():
    h, H = 0.01, 10.0
    g = TimeGrid.covering(0.0, h, H)
    sp = bm_strip(-1.0, 2.0)
    solver = assemble_case_ii(sp.process, sp, solve_two_boundary(sp, g))
    closed = assemble_case_ii(sp.process, sp, closed_form_pair(sp, g))
    sym_sp = bm_strip(-1.0, 1.0)
    sym = assemble_case_ii(sym_sp.process, sym_sp, solve_two_boundary(sym_sp, g))
    gi = TimeGrid.covering(0.0, 0.02, 40.0)
    case_i = assemble_case_i(Process.standard_bm(-2.0), Boundary.constant(-1.0), Boundary.constant(1.0), gi)

    diag_ok = all(np.all(np.diag(S.values) == 0) for S in (solver, closed, sym))
    tri_ok = bool(np.all(np.tril(case_i.values) == 0))
    asym = sym.max_asymmetry()

    def marg_err(S):
        return max(float(np.max(np.abs(S.marginal("t") - bm_fpt_pdf(g.knots, 0.0, -1.0)))),
                   float(np.max(np.abs(S.marginal("s") - bm_fpt_pdf(g.knots, 0.0, 2.0)))))

    m_closed, m_solver = marg_err(closed), marg_err(solver)

    ea, eb = bm_exit_cdf(H, 0.0, -1.0, 2.0)
    window_ref = bm_fpt_cdf(H, 0.0, -1.0) + bm_fpt_cdf(H, 0.0, 2.0) - (ea + eb)
    w_err = abs(solver.window_mass() - window_ref)
    wi_err = abs(case_i.window_mass() - bm_fpt_cdf(40.0, -2.0, 1.0))

    ok = diag_ok and tri_ok and asym <= 1e-12 and m_closed <= 5e-3 and w_err <= 0.02 and wi_err <= 0.02
    record_acceptance(6, ok, f"diagonal zero={diag_ok and tri_ok}, asymmetry={asym:.2g} <= 1e-12, "
                             f"marginal err={m_closed:.2g} <= 5e-3 (solver sub-densities: {m_solver:.2g}), "
                             f"window mass err={w_err:.2g}/{wi_err:.2g} <= 0.02")
    assert diag_ok and tri_ok
    assert asym <= 1e-12
    assert m_closed <= 5e-3
    assert w_err <= 0.02 and wi_err <= 0.02


# 7 -------------------------------------------------------------------------------------------

def test_acceptance_07_monte_carlo(mc_bm_asym):
    mc = mc_bm_asym
    sp = bm_strip(-1.0, 2.0)
    ks = compare_marginal(mc, lambda t: bm_fpt_cdf(t, 0.0, -1.0), "lower")

    g = TimeGrid.covering(0.0, 0.01, 10.0)
    sub = solve_two_boundary(sp, g)
    p_hat = mc.fraction_first("lower")
    split_err = abs(p_hat - sub.mass_lower)

    g4 = TimeGrid.covering(0.0, 0.01, 4.0)
    surface = assemble_case_ii(sp.process, sp, solve_two_boundary(sp, g4))
    joint = compare_joint(mc, surface, EDGES)

    short = simulate_pair(sp, SimConfig(10_000, 1e-4, 10.0, seed=MC_SEED, threads=2))
    same = all(np.array_equal(getattr(short, f), getattr(mc, f)[:10_000])
               for f in ("t_lower", "t_upper", "first_hit", "path_seeds"))

    ok = ks <= 0.02 and split_err <= 0.01 and joint <= 0.03 and same
    record_acceptance(7, ok, f"KS={ks:.4f} <= 0.02, P_hat(lower first)={p_hat:.4f} vs h*sum g_a="
                             f"{sub.mass_lower:.4f} (diff {split_err:.4f} <= 0.01), joint sup bin err="
                             f"{joint:.4f} <= 0.03, deterministic={same}")
    assert ks <= 0.02
    assert split_err <= 0.01
    assert joint <= 0.03
    assert same


# 8 -------------------------------------------------------------------------------------------

def copula_grid(sp, g, route, m=20):
    sub = closed_form_pair(sp, g) if route == "closed-form" else solve_two_boundary(sp, g)
    S = assemble_case_ii(sp.process, sp, sub)
    mt = marginal_table(sp.process, sp.lower, None, g, method=route)
    ms = marginal_table(sp.process, sp.upper, None, g, method=route)
    return quiet(copula_density, S, mt, ms, m)


def copula_gap(c1, c2):
    if not np.array_equal(c1.uncovered, c2.uncovered):
        return math.inf
    ok = ~c1.uncovered
    return float(np.max(np.abs(c1.density - c2.density)[ok], initial=0.0))


def test_acceptance_08_copula_invariance():
    g = TimeGrid.covering(0.0, 0.02, 30.0)
    a, b = -1.0, 1.5
    base = {r: copula_grid(bm_strip(a, b), g, r) for r in ("closed-form", "volterra")}
    scale_gap = {}
    gbm_gap = {}
    for sigma in (0.3, 2.0):
        scaled = StripProblem(Process.scaled_bm(sigma), Boundary.constant(sigma * a), Boundary.constant(sigma * b))
        gbm = StripProblem(Process.gbm(sigma, x0=1.0), Boundary.constant(math.exp(sigma * a)),
                           Boundary.constant(math.exp(sigma * b)))
        for r in base:
            scale_gap[r] = max(scale_gap.get(r, 0.0), copula_gap(base[r], copula_grid(scaled, g, r)))
            gbm_gap[r] = max(gbm_gap.get(r, 0.0), copula_gap(base[r], copula_grid(gbm, g, r)))

    gp = TimeGrid.covering(0.0, 0.01, 20.0)
    sp = bm_strip(a, b)
    S = assemble_case_ii(sp.process, sp, closed_form_pair(sp, gp))
    C = quiet(copula_density, S, marginal_table(sp.process, sp.lower, None, gp),
              marginal_table(sp.process, sp.upper, None, gp), 40)
    upper_tri = np.triu(np.ones_like(S.values, dtype=bool), 1)
    j_lower, j_upper = S.values[upper_tri].max(), S.values[upper_tri.T].max()
    T, Q = np.meshgrid(C.t_quantiles, C.s_quantiles, indexing="ij")
    d = np.where(C.uncovered, -np.inf, C.density)
    c_lower, c_upper = d[T < Q].max(), d[T >= Q].max()
    inverted = bool(j_lower > j_upper and c_lower < c_upper)

    ok = max(scale_gap.values()) <= 1e-12 and gbm_gap["closed-form"] <= 1e-12 and inverted
    record_acceptance(8, ok, f"sigma-scaling sup={max(scale_gap.values()):.2g} <= 1e-12, GBM sup="
                             f"{gbm_gap['closed-form']:.2g} <= 1e-12 (solver route {gbm_gap['volterra']:.2g}), "
                             f"peaks joint {j_lower:.4f} > {j_upper:.4f}, copula {c_lower:.3f} < {c_upper:.3f}")
    assert max(scale_gap.values()) <= 1e-12
    assert gbm_gap["closed-form"] <= 1e-12
    assert inverted


# 9 -------------------------------------------------------------------------------------------

def test_acceptance_09_time_dependent_boundaries():
    sp = cosine_strip()
    coarse = solve_two_boundary(sp, TimeGrid.covering(0.0, 0.01, 10.0))
    fine = solve_two_boundary(sp, TimeGrid.covering(0.0, 0.005, 10.0))
    mass = float(coarse.cumulative_mass()[-1])
    late = coarse.grid.knots > 0.05
    clamps = int(np.sum(coarse.clamp_flags[late]))
    first = float(coarse.grid.knots[late][coarse.clamp_flags[late]][0]) if clamps else math.nan
    diff = max(float(np.max(np.abs(coarse.g_lower - fine.g_lower[1::2]))),
               float(np.max(np.abs(coarse.g_upper - fine.g_upper[1::2]))))
    ok = 0.97 <= mass <= 1.005 and clamps == 0 and diff <= 5e-3
    record_acceptance(9, ok, f"mass={mass:.5f} in [0.97, 1.005], clamped knots after t=0.05: {clamps}"
                             + (f" (from t={first:.2f})" if clamps else "")
                             + f", h vs h/2 max diff={diff:.2g} <= 5e-3")
    assert 0.97 <= mass <= 1.005
    assert clamps == 0
    assert diff <= 5e-3


# 10 ------------------------------------------------------------------------------------------

def test_acceptance_10_ou(mc_ou_sym):
    sp = ou_strip()
    s10 = solve_two_boundary(sp, TimeGrid.covering(0.0, 0.01, 10.0))
    exact = bool(np.array_equal(s10.g_lower, s10.g_upper))
    sub = solve_two_boundary(sp, TimeGrid.covering(0.0, 0.01, 4.0))
    err = compare_sub_density(mc_ou_sym, sub, EDGES)
    worst = max(err.values())
    ok = exact and worst <= 0.03
    record_acceptance(10, ok, f"g_a == g_b exactly: {exact}, MC sup bin err lower={err['lower']:.4f} "
                              f"upper={err['upper']:.4f} <= 0.03")
    assert exact
    assert worst <= 0.03

