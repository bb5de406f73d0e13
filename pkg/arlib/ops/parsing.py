import re

from arlib.errors import ParseError, UnknownSymbol
from arlib.expr import ScalarExpr
from arlib.ops import math as M
from arlib.ops.creation import const, coordinate_index, coordinate_name, symbol

__all__ = ["parse", "to_source"]

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<punct>[-+*/^()])"
    r")"
)

_FUNCTIONS = {
    "sin": M.sin,
    "cos": M.cos,
    "exp": M.exp,
    "log": M.log,
    "sqrt": M.sqrt,
}


def _tokenize(source):
    tokens = []
    pos = 0
    end = len(source.rstrip())
    while pos < end:
        match = _TOKEN.match(source, pos)
        if match is None or match.end() == pos:
            bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ParseError(f"unexpected character {source[bad]!r}", source, bad)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(("end", "", end))
    return tokens


class _Parser:
    def __init__(self, source, n):
        self.source = source
        self.n = n
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        token = self.tokens[self.i]
        self.i += 1
        return token

    def expect(self, text):
        kind, value, pos = self.take()
        if value != text:
            found = "end of input" if kind == "end" else repr(value)
            raise ParseError(f"expected {text!r}, found {found}", self.source, pos)

    def parse(self):
        e = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {value!r}", self.source, pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = M.add(e, rhs) if op == "+" else M.sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            e = M.mul(e, rhs) if op == "*" else M.true_divide(e, rhs)
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return M.neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.factor()

    def factor(self):
        base = self.base()
        if self.peek()[1] != "^":
            return base
        self.take()
        sign = 1
        if self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
        kind, value, pos = self.take()
        if kind != "number" or not value.isdigit():
            raise ParseError("exponent must be an integer literal", self.source, pos)
        return M.pow(base, sign * int(value))

    def base(self):
        kind, value, pos = self.take()
        if kind == "number":
            return const(float(value))
        if kind == "ident":
            if value in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _FUNCTIONS[value](arg)
            try:
                return symbol(coordinate_index(value, self.n))
            except UnknownSymbol:
                raise UnknownSymbol(value, pos) from None
        if value == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {found}", self.source, pos)


def parse(source, n=None):
    """Parse an expression in x, z1, ..., zn.

    ``n`` bounds the admissible zk; without it any k >= 1 is accepted.
    """
    if not isinstance(source, str):
        raise TypeError(f"expected a string, got {type(source).__name__}")
    return _Parser(source, n).parse()


_BINARY = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def to_source(e):
    text = {}
    for node in e.topo():
        args = [text[c] for c in node._children]
        if node.op == "const":
            s = repr(node.value)
            text[node] = f"({s})" if node.value < 0 or s in ("inf", "nan") else s
        elif node.op == "sym":
            text[node] = coordinate_name(node.value)
        elif node.op == "neg":
            text[node] = f"(-{args[0]})"
        elif node.op == "pow":
            text[node] = f"({args[0]}^{node.value})"
        elif node.op in _BINARY:
            text[node] = f"({args[0]} {_BINARY[node.op]} {args[1]})"
        else:
            text[node] = f"{node.op}({args[0]})"
    return text[e]


ScalarExpr.__str__ = to_source
