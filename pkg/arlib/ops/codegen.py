import math

import numpy as np

from arlib.expr import ScalarExpr
from arlib.ops.creation import const
from arlib.utils.log import log

__all__ = ["CompiledExprs", "compile_exprs"]

_NAMESPACE = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "inf": math.inf,
    "nan": math.nan,
}

_BINARY = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


class CompiledExprs:
    """Evaluate a fixed list of expressions at a point in one call, errors replayed through the tree."""

    def __init__(self, exprs):
        self.exprs = [e if isinstance(e, ScalarExpr) else const(e) for e in exprs]
        self.source = _generate(self.exprs)
        namespace = dict(_NAMESPACE)
        exec(compile(self.source, "<arlib.codegen>", "exec"), namespace)
        self._fn = namespace["_compiled"]
        log.trace("compiled %d expressions into %d lines", len(self.exprs), self.source.count("\n"))

    def __len__(self):
        return len(self.exprs)

    def __call__(self, point):
        try:
            return np.array(self._fn(point), dtype=float)
        except (ZeroDivisionError, ValueError, OverflowError, IndexError):
            for e in self.exprs:
                e.evaluate(point)
            raise


def _generate(exprs):
    names = {}
    lines = ["def _compiled(p):"]
    for e in exprs:
        for node in e.topo():
            if node in names:
                continue
            name = f"t{len(names)}"
            names[node] = name
            args = [names[c] for c in node._children]
            if node.op == "const":
                rhs = repr(node.value)
            elif node.op == "sym":
                rhs = f"float(p[{node.value}])"
            elif node.op == "neg":
                rhs = f"-{args[0]}"
            elif node.op == "pow":
                rhs = f"{args[0]} ** {node.value}"
            elif node.op in _BINARY:
                rhs = f"{args[0]} {_BINARY[node.op]} {args[1]}"
            else:
                rhs = f"{node.op}({args[0]})"
            lines.append(f"    {name} = {rhs}")
    lines.append("    return (" + "".join(f"{names[e]}, " for e in exprs) + ")")
    return "\n".join(lines) + "\n"


def compile_exprs(exprs):
    return CompiledExprs(exprs)
