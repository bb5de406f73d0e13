import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from arlib.errors import DivisionByZero, DomainError, ParseError, UnknownSymbol
from arlib.ops import (
    compile_exprs,
    const,
    diff,
    evaluate,
    gram,
    hessian,
    parse,
    symbol,
    to_source,
    vanishing_order,
)

SMOOTH = [
    "x^2 + z1*z2",
    "sin(x*z1)*exp(z2)/(1 + x^2)",
    "sqrt(1 + x^2 + z1^2) - cos(z2)",
    "log(2 + sin(x))*z1^3 - 0.5*z2",
    "(2 + x - z1)^-2 + 3",
]


def test_parse_and_evaluate():
    assert parse("x^2")([3.0]) == 9.0
    assert parse("x*z1 - 0.5*z2")([1.0, 2.0, 4.0]) == 0.0
    assert parse("-x^2")([3.0]) == -9.0
    assert parse("x^-2")([2.0]) == 0.25
    assert parse("2e-3*x")([1.0]) == pytest.approx(0.002)
    assert parse("4*x^2 + z1^2 + z2^2")([0.1, 0.2, 0.3, 0.0]) == pytest.approx(0.17)
    assert parse("  +x ")([0.25]) == 0.25


def test_parse_errors_carry_positions():
    with pytest.raises(ParseError) as err:
        parse("x + * 2")
    assert err.value.position == 4

    with pytest.raises(ParseError):
        parse("x^1.5")
    with pytest.raises(ParseError):
        parse("sin(x")
    with pytest.raises(ParseError):
        parse("x $ 2")
    with pytest.raises(UnknownSymbol) as err:
        parse("x + y")
    assert err.value.position == 4
    with pytest.raises(UnknownSymbol):
        parse("z0")
    with pytest.raises(UnknownSymbol):
        parse("z3", n=2)
    with pytest.raises(TypeError):
        parse(3.0)


def test_evaluation_errors():
    with pytest.raises(DivisionByZero):
        parse("sin(x)/x")([0.0])
    with pytest.raises(DomainError):
        parse("log(x)")([-1.0])
    with pytest.raises(DomainError):
        parse("sqrt(x)")([-1.0])


def test_diff_rules():
    assert diff(parse("x^2"), "x")([5.0]) == 10.0
    assert diff(diff(parse("x^3"), "x"), "x")([2.0]) == 12.0

    d = diff(parse("x*z1"), "z1")
    assert d.op == "sym" and d.value == 0

    assert diff(parse("z1 + 3"), "x").is_const(0.0)
    assert diff(parse("exp(2*x)"), 0)([0.0]) == pytest.approx(2.0)
    assert diff(parse("log(x)"), "x")([4.0]) == pytest.approx(0.25)
    assert diff(parse("sqrt(x)"), "x")([4.0]) == pytest.approx(0.25)
    assert diff(parse("1/x"), "x")([2.0]) == pytest.approx(-0.25)
    assert diff(3.0, "x").is_const(0.0)


def test_constant_folding():
    assert parse("2*3 + 1").is_const(7.0)
    assert parse("0*x + 1*z1").op == "sym"
    assert parse("--x").op == "sym"
    assert parse("x^0").is_const(1.0)
    assert parse("sqrt(4)").is_const(2.0)


@pytest.mark.parametrize("source", SMOOTH)
def test_mixed_partials_commute(source, rng):
    e = parse(source)
    H = hessian(e, 3)
    for p in rng.uniform(0.1, 0.9, size=(5, 3)):
        values = np.array([[h(p) for h in row] for row in H])
        assert_allclose(values, values.T, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("source", SMOOTH)
def test_derivative_matches_finite_differences(source, rng):
    e = parse(source)
    h = 1e-4
    for p in rng.uniform(0.1, 0.9, size=(5, 3)):
        for u in range(3):
            step = np.zeros(3)
            step[u] = h

            def central(t):
                return (e(p + t * step / h) - e(p - t * step / h)) / (2 * t)

            richardson = (4 * central(h / 2) - central(h)) / 3
            assert diff(e, u)(p) == pytest.approx(richardson, rel=1e-7, abs=1e-7)


@pytest.mark.parametrize("source", SMOOTH + ["-0.5*x", "1e-05*z1 - x^-3"])
def test_source_round_trip(source, rng):
    e = parse(source)
    again = parse(to_source(e))
    assert str(e) == to_source(e)
    for p in rng.uniform(0.1, 0.9, size=(5, 3)):
        assert again(p) == pytest.approx(e(p), rel=1e-15, abs=1e-15)


def test_vanishing_order():
    assert vanishing_order(parse("x"), "x", (0.0, 0.0), 5) == 1
    assert vanishing_order(parse("x^3"), "x", (0.0, 0.0), 5) == 3
    assert vanishing_order(parse("1 + x"), "x", (0.0, 0.0), 5) == 0
    assert vanishing_order(parse("0*x"), "x", (0.0, 0.0), 5) is None
    assert vanishing_order(parse("x^3"), "x", (0.0, 0.0), 2) is None
    assert vanishing_order(parse("x*z1"), "x", (0.0, 1.0), 4) == 1
    with pytest.raises(ValueError):
        vanishing_order(parse("x"), "x", (0.0, 0.0), 0)


def test_compiled_matches_tree(rng):
    exprs = [parse(s) for s in SMOOTH] + [const(2.5), symbol("z2")]
    compiled = compile_exprs(exprs)
    assert len(compiled) == len(exprs)
    for p in rng.uniform(0.1, 0.9, size=(5, 3)):
        assert_allclose(compiled(p), [evaluate(e, p) for e in exprs], rtol=1e-14)


def test_compiled_reports_tree_errors():
    with pytest.raises(DivisionByZero):
        compile_exprs([parse("x"), parse("1/x")])([0.0])
    with pytest.raises(DomainError):
        compile_exprs([parse("log(x)")])([-1.0])
    with pytest.raises(DomainError):
        compile_exprs([parse("sqrt(x)")])([-1.0])


def test_compiled_shares_subexpressions():
    x = symbol("x")
    shared = (x + 1.0).sin()
    compiled = compile_exprs([shared * 2.0, shared + 3.0])
    assert compiled.source.count("sin(") == 1
    assert_allclose(compiled([0.5]), [2 * math.sin(1.5), math.sin(1.5) + 3])


def test_gram_is_symmetric_product():
    A = ((parse("x"), parse("1")), (parse("z1"), parse("x*z1")))
    G = gram(A)
    p = [0.3, 0.7]
    a = np.array([[e(p) for e in row] for row in A])
    assert_allclose([[e(p) for e in row] for row in G], a.T @ a, rtol=1e-15)
    assert G[0][1] is G[1][0]


def test_leading_zero_indices_are_rejected():
    with pytest.raises(UnknownSymbol):
        parse("z01")
    assert to_source(parse("z10")) == "z10"


def test_short_point_names_the_dimension():
    e = parse("x + z2")
    with pytest.raises(ValueError, match="z2 needs 3"):
        e([0.1, 0.2])
    with pytest.raises(ValueError, match="z2 needs 3"):
        compile_exprs([e])([0.1, 0.2])


def test_vanishing_order_rejects_non_finite_values():
    with pytest.raises(DomainError):
        vanishing_order(parse("1e400*x"), "x", (0.0, 0.0), 3)


def test_diff_is_linear(rng):
    pairs = [(parse(a), parse(b)) for a, b in zip(SMOOTH, SMOOTH[1:] + SMOOTH[:1])]
    for p in rng.uniform(0.1, 0.9, size=(100, 3)):
        e1, e2 = pairs[rng.integers(len(pairs))]
        a, b = (float(v) for v in rng.uniform(-2, 2, size=2))
        u = int(rng.integers(3))
        d1, d2 = diff(e1, u)(p), diff(e2, u)(p)
        scale = abs(a * d1) + abs(b * d2)
        assert diff(a * e1 + b * e2, u)(p) == pytest.approx(a * d1 + b * d2, rel=1e-12, abs=1e-12 * scale)
