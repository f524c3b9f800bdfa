"""``hittimes`` command line.

Subcommands ``solve``, ``joint``, ``copula``, ``converge`` and
``simulate`` each read a TOML run configuration and write CSV files to
``--out-dir``. Failures print one ``ERROR:<code>:<message>`` line to
stderr and exit with

* 2: configuration could not be read or is inconsistent
* 3: the strip (or method/strip combination) is invalid
* 4: numerical abort (step too coarse, ill-conditioned transform)
* 5: fitted convergence order below 0.8
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import csvio
from .boundaries import Configuration, validate_strip
from .errors import (ConditioningError, ConfigError, DomainError, InsufficientSamplesError,
                     ReferenceUnavailableError, StepSizeError, StripError)
from .joint import assemble, copula_density, marginal_table
from .laplace import invert, make_evaluator
from .montecarlo import (FIRST_HIT, compare_joint, compare_marginal, compare_sub_density,
                         simulate_pair)
from .process import Process
from .volterra import (SubDensityPair, closed_form_available, closed_form_pair,
                       convergence_study, solve_two_boundary)

__all__ = ["main", "build_parser"]

EXIT_CONFIG, EXIT_STRIP, EXIT_NUMERIC, EXIT_ORDER = 2, 3, 4, 5
FIRST_KNOT_WARN = 0.01
MIN_ORDER = 0.8


class CommandFailure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _say(msg):
    print(msg, flush=True)


def _warn(msg):
    print(f"WARNING:{msg}", file=sys.stderr, flush=True)


def _fmt(v):
    return "n/a" if v is None else csvio.fmt(v)


# ---------------------------------------------------------------------------
# computations shared by the commands


def _require_inside(cfg):
    rep = validate_strip(cfg.strip, cfg.horizon, cfg.h)
    if not rep.valid:
        raise StripError(rep.message)
    if rep.configuration is not Configuration.INSIDE:
        raise StripError("sub-densities need a start point inside the strip")


def _laplace_pair(cfg, grid) -> SubDensityPair:
    sp = cfg.strip
    if not sp.is_constant:
        raise StripError("Laplace route requires constant boundaries")
    p = sp.process
    if not p.is_brownian:
        raise StripError("Laplace route requires a Brownian-type process")
    # Brownian kinds are standard BM in z-coordinates
    zp = Process.standard_bm(p.z0, p.t0)
    a, b = float(p.to_gauss(sp.lower.c)), float(p.to_gauss(sp.upper.c))
    out = []
    for side in ("lower", "upper"):
        ev = make_evaluator(cfg.representation, zp, a, b, side)
        out.append(invert(ev, grid.knots, cfg.inversion))
    ga, gb = out
    neg_a, neg_b = ga < 0, gb < 0
    return SubDensityPair(grid, np.maximum(ga, 0.0), np.maximum(gb, 0.0), neg_a | neg_b, neg_a, neg_b)


def _subdensities(cfg, grid=None) -> SubDensityPair:
    grid = grid or cfg.grid
    if cfg.method == "laplace":
        # the constant-boundary check comes first so its message is stable
        if not cfg.strip.is_constant:
            raise StripError("Laplace route requires constant boundaries")
        _require_inside(cfg)
        return _laplace_pair(cfg, grid)
    _require_inside(cfg)
    if cfg.method == "closed-form":
        if not closed_form_available(cfg.strip):
            raise StripError("closed-form route requires a Brownian-type process and constant boundaries")
        return closed_form_pair(cfg.strip, grid, cfg.series)
    return solve_two_boundary(cfg.strip, grid)


def _report_pair(pair):
    h = pair.grid.h
    ml, mu = pair.mass_lower, pair.mass_upper
    _say(f"mass_lower={csvio.fmt(ml)} mass_upper={csvio.fmt(mu)} mass_total={csvio.fmt(ml + mu)}")
    _say(f"clamped_knots={pair.n_clamped}")
    first = h * max(pair.g_lower[0], pair.g_upper[0])
    if first > FIRST_KNOT_WARN:
        _warn(f"first knot carries mass {first:.3g}; consider a smaller h")


def _marginals_method(cfg):
    return "volterra" if cfg.method == "volterra" else "auto"


def _surface(cfg, threads):
    sp = cfg.strip
    grid = cfg.grid
    rep = validate_strip(sp, cfg.horizon, cfg.h)
    if not rep.valid:
        raise StripError(rep.message)
    sub = None
    if rep.configuration is Configuration.INSIDE:
        sub = _subdensities(cfg, grid)
        _report_pair(sub)
    elif cfg.method == "laplace" and not sp.is_constant:
        raise StripError("Laplace route requires constant boundaries")
    return assemble(sp, grid, sub, threads=threads), sub


def _marginal_tables(cfg):
    p, grid, m = cfg.process, cfg.grid, _marginals_method(cfg)
    return (marginal_table(p, cfg.lower, None, grid, m),
            marginal_table(p, cfg.upper, None, grid, m))


def _write_marginals(out, ml, mu):
    return csvio.write_columns(out / "marginals.csv", "t,cdf_lower,pdf_lower,cdf_upper,pdf_upper",
                               [ml.times, ml.cdf, ml.pdf, mu.cdf, mu.pdf])


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg, out: Path, args):
    pair = _subdensities(cfg)
    path = csvio.write_subdensities(out / "subdensities.csv", pair, cfg.method)
    _report_pair(pair)
    _say(f"wrote {path}")


def cmd_joint(cfg, out: Path, args):
    surf, _ = _surface(cfg, args.threads)
    csvio.write_joint_long(out / "joint.csv", surf)
    csvio.write_matrix(out / "joint_matrix.csv", surf)
    _say(f"case={surf.case} window_mass={csvio.fmt(surf.window_mass())} "
         f"max_asymmetry={csvio.fmt(surf.max_asymmetry())}")
    if "marginals" in cfg.outputs:
        _write_marginals(out, *_marginal_tables(cfg))
    _say(f"wrote {out / 'joint.csv'} and {out / 'joint_matrix.csv'}")


def cmd_copula(cfg, out: Path, args):
    surf, _ = _surface(cfg, args.threads)
    ml, mu = _marginal_tables(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cop = copula_density(surf, ml, mu, cfg.copula_m)
    if cop.n_uncovered:
        _warn(f"uncovered quantile range: {cop.n_uncovered} of {cop.density.size} copula cells")
    m = len(cop.u_grid)
    U = np.repeat(cop.u_grid, m)
    V = np.tile(cop.v_grid, m)
    csvio.write_columns(out / "copula.csv", "u,v,density", [U, V, cop.density.ravel()])
    csvio.write_columns(out / "quantiles.csv", "u,t_lower,t_upper",
                        [cop.u_grid, cop.t_quantiles, cop.s_quantiles])
    _write_marginals(out, ml, mu)
    if "joint" in cfg.outputs:
        csvio.write_joint_long(out / "joint.csv", surf)
        csvio.write_matrix(out / "joint_matrix.csv", surf)
    _say(f"case={surf.case} copula_cells={cop.density.size} uncovered={cop.n_uncovered}")
    _say(f"wrote {out / 'copula.csv'}")


def cmd_converge(cfg, out: Path, args):
    rep = convergence_study(cfg.strip, list(cfg.converge_steps), cfg.converge_reference,
                            cfg.converge_horizon, cfg.series)
    csvio.write_columns(out / "convergence.csv", "h,max_error,mse",
                        [rep.steps, rep.max_errors, rep.mse])
    ratios = " ".join(csvio.fmt(r) for r in rep.ratios) or "n/a"
    _say(f"reference={rep.reference} order={_fmt(rep.empirical_order)} ratios={ratios}")
    if rep.empirical_order is not None and rep.empirical_order < MIN_ORDER:
        raise CommandFailure(EXIT_ORDER, f"fitted order {rep.empirical_order:.4g} below {MIN_ORDER}")


def cmd_simulate(cfg, out: Path, args):
    if cfg.mc is None:
        raise ConfigError("simulate needs an [mc] table")
    mc = cfg.mc
    if args.seed is not None:
        mc = dataclasses.replace(mc, seed=args.seed)
    mc = dataclasses.replace(mc, threads=args.threads)
    samples = simulate_pair(cfg.strip, mc)
    csvio.write_columns(out / "samples.csv", "t_lower,t_upper,first_hit,censored_lower,censored_upper",
                        [samples.t_lower, samples.t_upper,
                         np.array(FIRST_HIT)[samples.first_hit.astype(int)],
                         samples.censored_lower, samples.censored_upper])
    _say(f"paths={len(samples)} seed={mc.seed} p_lower_first={csvio.fmt(samples.fraction_first('lower'))} "
         f"p_upper_first={csvio.fmt(samples.fraction_first('upper'))} "
         f"censored={csvio.fmt(samples.censoring_rate)}")
    _simulate_comparisons(cfg, samples, mc)
    _say(f"wrote {out / 'samples.csv'}")


def _simulate_comparisons(cfg, samples, mc):
    window = min(cfg.horizon, mc.horizon)
    if cfg.strip.configuration is Configuration.INSIDE:
        pair = _subdensities(cfg)
        _say(f"p_lower_first_analytic={csvio.fmt(pair.mass_lower)}")
        nb = int(math.floor((window - cfg.t0) / cfg.mc_bin_width + 1e-9))
        if nb >= 1:
            edges = cfg.t0 + cfg.mc_bin_width * np.arange(nb + 1)
            err = compare_sub_density(samples, pair, edges)
            _say(f"sub_density_sup_error_lower={csvio.fmt(err['lower'])} "
                 f"sub_density_sup_error_upper={csvio.fmt(err['upper'])}")
            if "joint" in cfg.outputs:
                surf = assemble(cfg.strip, cfg.grid, pair)
                _say(f"joint_sup_bin_error={csvio.fmt(compare_joint(samples, surf, edges))}")
    ml, mu = _marginal_tables(cfg)
    for side, tab in (("lower", ml), ("upper", mu)):
        try:
            _say(f"ks_{side}={csvio.fmt(compare_marginal(samples, tab, side))}")
        except InsufficientSamplesError as exc:
            _say(f"ks_{side}=n/a ({exc})")


COMMANDS = {
    "solve": cmd_solve,
    "joint": cmd_joint,
    "copula": cmd_copula,
    "converge": cmd_converge,
    "simulate": cmd_simulate,
}


def _u64(s):
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hittimes",
                                 description="Joint first hitting times of a diffusion through two boundaries.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out-dir", required=True, type=Path)
        sp.add_argument("--threads", type=_positive, default=1)
        if name == "simulate":
            sp.add_argument("--seed", type=_u64, default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            print(f"ERROR:{EXIT_CONFIG}:invalid command line", file=sys.stderr)
            return EXIT_CONFIG
        return 0
    from .config import load_config

    try:
        cfg = load_config(args.config)
        args.out_dir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args.out_dir, args)
    except CommandFailure as exc:
        return _fail(exc.code, str(exc))
    except (ConfigError, OSError) as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except (StripError, ReferenceUnavailableError, DomainError) as exc:
        return _fail(EXIT_STRIP, str(exc))
    except (StepSizeError, ConditioningError, FloatingPointError, InsufficientSamplesError) as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    return 0


def _fail(code, message):
    message = " ".join(str(message).split())
    print(f"ERROR:{code}:{message}", file=sys.stderr, flush=True)
    return code


if __name__ == "__main__":
    sys.exit(main())
