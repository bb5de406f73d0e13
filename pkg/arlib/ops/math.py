import math

from arlib.errors import DivisionByZero, DomainError
from arlib.expr import ScalarExpr
from arlib.ops.creation import const

__all__ = [
    "add",
    "sub",
    "mul",
    "true_divide",
    "pow",
    "neg",
    "sum",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
]


def _coerce(e):
    return e if isinstance(e, ScalarExpr) else const(e)


def add(e1, e2):
    e1, e2 = _coerce(e1), _coerce(e2)
    if e1.is_const() and e2.is_const():
        return const(e1.value + e2.value)
    if e1.is_const(0.0):
        return e2
    if e2.is_const(0.0):
        return e1

    out = ScalarExpr("add", _children=(e1, e2))
    out._forward = lambda a, b: a + b

    def _diff(u):
        return add(e1.diff(u), e2.diff(u))

    out._diff = _diff
    return out


def sub(e1, e2):
    e1, e2 = _coerce(e1), _coerce(e2)
    if e1.is_const() and e2.is_const():
        return const(e1.value - e2.value)
    if e2.is_const(0.0):
        return e1
    if e1.is_const(0.0):
        return neg(e2)

    out = ScalarExpr("sub", _children=(e1, e2))
    out._forward = lambda a, b: a - b

    def _diff(u):
        return sub(e1.diff(u), e2.diff(u))

    out._diff = _diff
    return out


def mul(e1, e2):
    e1, e2 = _coerce(e1), _coerce(e2)
    if e1.is_const() and e2.is_const():
        return const(e1.value * e2.value)
    if e1.is_const(0.0) or e2.is_const(0.0):
        return const(0.0)
    if e1.is_const(1.0):
        return e2
    if e2.is_const(1.0):
        return e1

    out = ScalarExpr("mul", _children=(e1, e2))
    out._forward = lambda a, b: a * b

    def _diff(u):
        return add(mul(e1.diff(u), e2), mul(e1, e2.diff(u)))

    out._diff = _diff
    return out


def true_divide(e1, e2):
    e1, e2 = _coerce(e1), _coerce(e2)
    if e1.is_const() and e2.is_const() and e2.value != 0.0:
        return const(e1.value / e2.value)
    if e1.is_const(0.0) and not e2.is_const(0.0):
        return const(0.0)
    if e2.is_const(1.0):
        return e1

    out = ScalarExpr("div", _children=(e1, e2))

    def _forward(a, b):
        if b == 0.0:
            raise DivisionByZero(out)
        return a / b

    def _diff(u):
        return sub(
            true_divide(e1.diff(u), e2),
            true_divide(mul(e1, e2.diff(u)), pow(e2, 2)),
        )

    out._forward = _forward
    out._diff = _diff
    return out


def pow(e, power):
    if isinstance(power, ScalarExpr):
        if not power.is_const() or power.value != int(power.value):
            raise TypeError("only integer powers are supported; use exp/log or sqrt")
        power = power.value
    if isinstance(power, float) and power.is_integer():
        power = int(power)
    if not isinstance(power, int) or isinstance(power, bool):
        raise TypeError(f"only integer powers are supported, got {power!r}")

    e = _coerce(e)
    if power == 0:
        return const(1.0)
    if power == 1:
        return e
    if e.is_const() and (e.value != 0.0 or power > 0):
        return const(e.value**power)

    out = ScalarExpr("pow", _children=(e,), value=power)

    def _forward(a):
        if a == 0.0 and power < 0:
            raise DivisionByZero(out)
        return a**power

    def _diff(u):
        return mul(mul(const(power), pow(e, power - 1)), e.diff(u))

    out._forward = _forward
    out._diff = _diff
    return out


def neg(e):
    e = _coerce(e)
    if e.is_const():
        return const(-e.value)
    if e.op == "neg":
        return e._children[0]

    out = ScalarExpr("neg", _children=(e,))
    out._forward = lambda a: -a
    out._diff = lambda u: neg(e.diff(u))
    return out


def sum(exprs):
    out = const(0.0)
    for e in exprs:
        out = add(out, e)
    return out


def sin(e):
    e = _coerce(e)
    if e.is_const():
        return const(math.sin(e.value))

    out = ScalarExpr("sin", _children=(e,))
    out._forward = math.sin
    out._diff = lambda u: mul(cos(e), e.diff(u))
    return out


def cos(e):
    e = _coerce(e)
    if e.is_const():
        return const(math.cos(e.value))

    out = ScalarExpr("cos", _children=(e,))
    out._forward = math.cos
    out._diff = lambda u: neg(mul(sin(e), e.diff(u)))
    return out


def exp(e):
    e = _coerce(e)
    if e.is_const():
        return const(math.exp(e.value))

    out = ScalarExpr("exp", _children=(e,))
    out._forward = math.exp
    out._diff = lambda u: mul(out, e.diff(u))
    return out


def log(e):
    e = _coerce(e)
    if e.is_const() and e.value > 0.0:
        return const(math.log(e.value))

    out = ScalarExpr("log", _children=(e,))

    def _forward(a):
        if a <= 0.0:
            raise DomainError(out, a)
        return math.log(a)

    out._forward = _forward
    out._diff = lambda u: true_divide(e.diff(u), e)
    return out


def sqrt(e):
    e = _coerce(e)
    if e.is_const() and e.value >= 0.0:
        return const(math.sqrt(e.value))

    out = ScalarExpr("sqrt", _children=(e,))

    def _forward(a):
        if a < 0.0:
            raise DomainError(out, a)
        return math.sqrt(a)

    out._forward = _forward
    out._diff = lambda u: true_divide(e.diff(u), mul(const(2.0), out))
    return out


# overload
ScalarExpr.__add__ = add
ScalarExpr.__radd__ = lambda self, other: add(other, self)
ScalarExpr.__neg__ = neg
ScalarExpr.__sub__ = sub
ScalarExpr.__rsub__ = lambda self, other: sub(other, self)
ScalarExpr.__mul__ = mul
ScalarExpr.__rmul__ = lambda self, other: mul(other, self)
ScalarExpr.__truediv__ = true_divide
ScalarExpr.__rtruediv__ = lambda self, other: true_divide(other, self)
ScalarExpr.__pow__ = pow

ScalarExpr.sin = sin
ScalarExpr.cos = cos
ScalarExpr.exp = exp
ScalarExpr.log = log
ScalarExpr.sqrt = sqrt
