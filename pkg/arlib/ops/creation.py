import re

from arlib.errors import UnknownSymbol
from arlib.expr import ScalarExpr

__all__ = [
    "const",
    "symbol",
    "coordinates",
    "coordinate_index",
    "coordinate_name",
    "zeros",
    "identity",
]

_COORDINATE = re.compile(r"^(x|z([1-9]\d*))$")


def coordinate_index(name, n=None):
    """Map ``x`` -> 0 and ``zk`` -> k; integers pass through. ``n`` bounds zk."""
    if isinstance(name, int):
        index = name
    else:
        match = _COORDINATE.match(str(name))
        if match is None:
            raise UnknownSymbol(name)
        index = 0 if match.group(1) == "x" else int(match.group(2))
    if index < 0 or (n is not None and index > n):
        raise UnknownSymbol(coordinate_name(index) if index >= 0 else name)
    return index


def coordinate_name(index):
    return "x" if index == 0 else f"z{index}"


def const(value):
    out = ScalarExpr("const", value=float(value))
    out._diff = lambda u: const(0.0)
    return out


def symbol(name, n=None):
    index = coordinate_index(name, n)
    out = ScalarExpr("sym", value=index)
    out._diff = lambda u: const(1.0 if u == index else 0.0)
    return out


def coordinates(n):
    return [symbol(i) for i in range(n + 1)]


def zeros(rows, cols):
    return tuple(tuple(const(0.0) for _ in range(cols)) for _ in range(rows))


def identity(n):
    return tuple(tuple(const(1.0 if i == j else 0.0) for j in range(n)) for i in range(n))
