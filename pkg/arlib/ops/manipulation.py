import numpy as np

from arlib.expr import ScalarExpr
from arlib.ops import math as M
from arlib.ops.creation import const

__all__ = [
    "matrix",
    "transpose",
    "matmul",
    "gram",
    "diff_matrix",
    "evaluate_matrix",
]


def matrix(rows):
    rows = tuple(tuple(e if isinstance(e, ScalarExpr) else const(e) for e in row) for row in rows)
    if rows and len({len(row) for row in rows}) != 1:
        raise ValueError("ragged matrix")
    return rows


def transpose(a):
    return tuple(zip(*a)) if a else ()


def matmul(a, b):
    if len(a[0]) != len(b):
        raise ValueError(f"shape mismatch: {len(a)}x{len(a[0])} @ {len(b)}x{len(b[0])}")
    bt = transpose(b)
    return tuple(
        tuple(M.sum(M.mul(x, y) for x, y in zip(row, col)) for col in bt)
        for row in a
    )


def gram(a):
    cols = transpose(a)
    k = len(cols)
    out = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(i, k):
            out[i][j] = out[j][i] = M.sum(M.mul(x, y) for x, y in zip(cols[i], cols[j]))
    return tuple(tuple(row) for row in out)


def diff_matrix(a, u):
    return tuple(tuple(e.diff(u) for e in row) for row in a)


def evaluate_matrix(a, point):
    return np.array([[e.evaluate(point) for e in row] for row in a], dtype=float)
