import math as _math

import numpy as np

from arlib.errors import DomainError
from arlib.expr import ScalarExpr
from arlib.ops.creation import coordinate_index, const

__all__ = [
    "diff",
    "evaluate",
    "gradient",
    "hessian",
    "vanishing_order",
    "ORDER_TOL",
]

ORDER_TOL = 1e-9


def diff(e, u, n=None):
    if not isinstance(e, ScalarExpr):
        return const(0.0)
    return e.diff(coordinate_index(u, n))


def evaluate(e, point):
    if not isinstance(e, ScalarExpr):
        return float(e)
    return e.evaluate(point)


def gradient(e, dim):
    return [e.diff(u) for u in range(dim)]


def hessian(e, dim):
    return [[e.diff(u).diff(v) for v in range(dim)] for u in range(dim)]


def vanishing_order(e, along, at, max_order, tol=ORDER_TOL):
    """Smallest k <= max_order with the k-th derivative along ``along`` nonzero at ``at``.

    Returns 0 if ``e`` itself does not vanish at the point and None if every
    derivative up to ``max_order`` vanishes. A non-finite derivative raises DomainError.
    """
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")
    u = coordinate_index(along)
    at = np.asarray(at, dtype=float)
    current = e
    for k in range(max_order + 1):
        value = current.evaluate(at)
        if not _math.isfinite(value):
            raise DomainError(current, value)
        if abs(value) > tol:
            return k
        current = current.diff(u)
    return None
