"""Shared fixtures: reference strips and cached Monte Carlo runs.

The large simulations are session-scoped so unit tests and the acceptance
checks reuse one run per case.
"""
from __future__ import annotations

import math

import pytest

from hittimes import Boundary, Process, SimConfig, StripProblem, simulate_pair

MC_SEED = 20240601
ACCEPTANCE_LINES: list[str] = []


def bm_strip(a, b, x0=0.0):
    return StripProblem(Process.standard_bm(x0), Boundary.constant(a), Boundary.constant(b))


def cosine_strip():
    return StripProblem(Process.standard_bm(),
                        Boundary.cosine(-1.0, 0.1, math.pi, math.pi),
                        Boundary.cosine(1.0, 0.1, math.pi))


def ou_strip(a=-1.0, b=1.0):
    return StripProblem(Process.ou(10.0, 0.0, 1.0), Boundary.constant(a), Boundary.constant(b))


@pytest.fixture(scope="session")
def mc_bm_asym():
    """1e5 paths, dt = 1e-4, a = -1, b = 2, window [0, 10]."""
    return simulate_pair(bm_strip(-1.0, 2.0), SimConfig(100_000, 1e-4, 10.0, seed=MC_SEED))


@pytest.fixture(scope="session")
def mc_bm_sym():
    """1e5 paths on b = -a = 1 with a coarser step; only the exit side is used."""
    return simulate_pair(bm_strip(-1.0, 1.0), SimConfig(100_000, 1e-3, 8.0, seed=MC_SEED + 1))


@pytest.fixture(scope="session")
def mc_ou_sym():
    """1e5 OU paths (theta = 10), dt = 1e-4, window [0, 4]."""
    return simulate_pair(ou_strip(), SimConfig(100_000, 1e-4, 4.0, seed=MC_SEED + 2))


def record_acceptance(number: int, ok: bool, detail: str):
    line = f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
