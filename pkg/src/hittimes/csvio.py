"""CSV writers with byte-stable float formatting.

Floats are written with Python's shortest round-trip ``repr``, so
reloading a file gives back exactly the computed values and reruns
produce identical bytes.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = [
    "fmt",
    "write_columns",
    "write_joint_long",
    "write_matrix",
    "write_subdensities",
]


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _col_strings(col) -> list:
    arr = np.asarray(col)
    if arr.dtype == bool:
        return ["1" if x else "0" for x in arr.tolist()]
    if np.issubdtype(arr.dtype, np.integer):
        return [str(x) for x in arr.tolist()]
    if arr.dtype.kind in "US":
        return [str(x) for x in arr.tolist()]
    return [repr(x) for x in arr.astype(float).tolist()]


def write_columns(path, header: str, columns) -> Path:
    """Write equal-length columns under a literal header line."""
    path = Path(path)
    cols = [_col_strings(c) for c in columns]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns differ in length")
    lines = [header] + [",".join(row) for row in zip(*cols)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_subdensities(path, pair, method: str = "volterra") -> Path:
    """Sub-density table; the Laplace route tags its header."""
    header = "t,g_lower,g_upper,method=laplace" if method == "laplace" else "t,g_lower,g_upper,clamped"
    return write_columns(path, header, [pair.grid.knots, pair.g_lower, pair.g_upper, pair.clamp_flags])


def write_joint_long(path, surface) -> Path:
    k = surface.t_grid.knots
    n = len(k)
    T = np.repeat(k, n)
    S = np.tile(surface.s_grid.knots, n)
    return write_columns(path, "t,s,value", [T, S, surface.values.ravel()])


def write_matrix(path, surface) -> Path:
    path = Path(path)
    lines = [f"# rows=t cols=s h={fmt(surface.h)}"]
    lines += [",".join(repr(x) for x in row) for row in surface.values.tolist()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
