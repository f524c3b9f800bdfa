"""Counter-style SplitMix64 streams and a 128-layer ziggurat normal sampler.

Path ``i`` of a run seeded with ``seed`` owns the SplitMix64 stream started
at :func:`path_state`, so its draws depend only on ``(seed, i)``. The tables
here are shared by the compiled core and the Python fallback.
"""
import math

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1

ZIG_LAYERS = 128
ZIG_R = 3.442619855899
ZIG_V = 9.91256303526217e-3


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def path_state(seed: int, i: int) -> int:
    key = mix64((seed + GOLDEN) & MASK64)
    return mix64(key ^ (((i + 1) * GOLDEN) & MASK64))


def path_states(seed: int, n: int) -> np.ndarray:
    return np.array([path_state(seed, i) for i in range(n)], dtype=np.uint64)


def _tables():
    x = np.zeros(ZIG_LAYERS + 1)
    f = math.exp(-0.5 * ZIG_R * ZIG_R)
    x[0] = ZIG_V / f
    x[1] = ZIG_R
    for i in range(2, ZIG_LAYERS):
        x[i] = math.sqrt(-2.0 * math.log(ZIG_V / x[i - 1] + f))
        f = math.exp(-0.5 * x[i] * x[i])
    r = x[1:] / x[:-1]
    return x, r


ZIG_X, ZIG_RATIO = _tables()
