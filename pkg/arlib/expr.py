from arlib.errors import DomainError

__all__ = ["ScalarExpr"]


class ScalarExpr:
    """Expression over (x, z1, ..., zn); ``value`` is a literal, a coordinate index or an exponent."""

    def __init__(self, op, _children=(), value=None):
        self.op = op
        self.value = value
        self._children = tuple(_children)
        self._forward = lambda *args: value
        self._diff = lambda u: None
        self._id = id(self)
        self._topo = None
        self._dcache = {}

    def diff(self, u):
        if u not in self._dcache:
            self._dcache[u] = self._diff(u)
        return self._dcache[u]

    def topo(self):
        if self._topo is None:
            topo = []
            visited = set()

            def build_topo(v):
                if v not in visited:
                    visited.add(v)
                    for child in v._children:
                        build_topo(child)
                    topo.append(v)

            build_topo(self)
            self._topo = topo
        return self._topo

    def evaluate(self, point):
        values = {}
        for node in self.topo():
            if node.op == "sym":
                try:
                    values[node] = float(point[node.value])
                except IndexError:
                    name = "x" if node.value == 0 else f"z{node.value}"
                    raise ValueError(
                        f"point has {len(point)} coordinates but {name} needs {node.value + 1}"
                    ) from None
            else:
                try:
                    values[node] = node._forward(*(values[c] for c in node._children))
                except OverflowError:
                    raise DomainError(node) from None
        return values[self]

    def __call__(self, point):
        return self.evaluate(point)

    def is_const(self, value=None):
        if self.op != "const":
            return False
        return value is None or self.value == value

    def symbols(self):
        return sorted({node.value for node in self.topo() if node.op == "sym"})

    def size(self):
        return len(self.topo())

    def __hash__(self):
        return self._id

    def __repr__(self):
        return f"expr({self})"
