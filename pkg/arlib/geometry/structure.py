import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np

from arlib.errors import (
    ConfigError,
    ExprError,
    H1Violation,
    MeasureNotPositive,
    OriginNotSingular,
    StepUndetected,
    StronglyRegularMismatch,
    StructureError,
)
from arlib.expr import ScalarExpr
from arlib.ops import math as M
from arlib.ops.calculus import vanishing_order
from arlib.ops.codegen import compile_exprs
from arlib.ops.creation import const
from arlib.ops.manipulation import gram, matrix
from arlib.ops.parsing import parse
from arlib.utils.io import resolve_structure_path
from arlib.utils.log import log

__all__ = [
    "RegularityKind",
    "Regularity",
    "Chart",
    "ArStructure",
    "SurfaceFields",
    "Diagnostic",
    "surface_fields",
    "check_structure",
    "validate_structure",
    "structure_from_config",
    "loads_structure",
    "load_structure",
    "detect_step_2d",
    "POINTS_PER_AXIS",
]

POINTS_PER_AXIS = 17
X_MIN_FRACTION = 1e-3
DET_TOL = 1e-12
MAX_SAMPLES = 20000
MAX_ORDER_SAMPLES = 64
RANDOM_CHECKS = 100
STEP_MAX_ORDER = 10

_CONFIG_KEYS = {"name", "n", "chart", "regularity", "measure", "A"}


class RegularityKind(Enum):
    GENERAL_2D = "general2d"
    STRONGLY_REGULAR = "strongly_regular"
    GENERAL = "general"


@dataclass(frozen=True)
class Regularity:
    kind: RegularityKind = RegularityKind.GENERAL
    l: int | None = None

    def __post_init__(self):
        if self.kind is RegularityKind.STRONGLY_REGULAR:
            if not isinstance(self.l, int) or self.l < 1:
                raise ValueError(f"strongly regular order must be an integer >= 1, got {self.l!r}")
        elif self.l is not None:
            raise ValueError(f"{self.kind.value} takes no order")

    @classmethod
    def parse(cls, text):
        text = str(text).strip().lower()
        kind, _, order = text.partition(":")
        try:
            kind = RegularityKind(kind)
        except ValueError:
            raise ValueError(
                f"unknown regularity {text!r}: expected general2d, general or strongly_regular:<l>"
            ) from None
        if kind is RegularityKind.STRONGLY_REGULAR:
            if not order.strip().isdigit():
                raise ValueError(f"strongly_regular needs an integer order, got {text!r}")
            return cls(kind, int(order))
        if order:
            raise ValueError(f"{kind.value} takes no order, got {text!r}")
        return cls(kind)

    @property
    def strongly_regular(self):
        return self.kind is RegularityKind.STRONGLY_REGULAR

    def __str__(self):
        if self.strongly_regular:
            return f"{self.kind.value}:{self.l}"
        return self.kind.value


@dataclass(frozen=True)
class Chart:
    """Axis-aligned box; ``lower[0]``/``upper[0]`` bound x, then z1..zn."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if len(self.lower) != len(self.upper):
            raise ValueError("chart bounds differ in dimension")
        for axis, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not lo < 0.0 < hi:
                raise ValueError(f"chart axis {axis} = [{lo}, {hi}] must contain 0 in its interior")

    @classmethod
    def from_flat(cls, values):
        values = [float(v) for v in values]
        if len(values) % 2:
            raise ValueError("chart needs a min/max pair per axis")
        return cls(tuple(values[0::2]), tuple(values[1::2]))

    @classmethod
    def box(cls, dim, radius=0.5):
        return cls((-radius,) * dim, (radius,) * dim)

    @property
    def dim(self):
        return len(self.lower)

    @property
    def half_width(self):
        """Largest r with [-r, r] inside the chart's x-range."""
        return min(-self.lower[0], self.upper[0])

    def contains(self, point, slack=0.0):
        point = np.asarray(point, dtype=float)
        return bool(
            np.all(point >= np.array(self.lower) - slack) and np.all(point <= np.array(self.upper) + slack)
        )

    def axis(self, i, points):
        return np.linspace(self.lower[i], self.upper[i], points)

    def to_flat(self):
        return [v for pair in zip(self.lower, self.upper) for v in pair]


@dataclass(frozen=True)
class SurfaceFields:
    beta_squared: ScalarExpr
    beta: ScalarExpr
    alpha: tuple


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str
    message: str
    point: tuple | None = None

    @property
    def is_error(self):
        return self.severity == "error"

    def to_dict(self):
        return {
            "code": self.code,
            "severity": self.severity,
            "message": self.message,
            "point": None if self.point is None else [float(v) for v in self.point],
        }

    def __str__(self):
        where = "" if self.point is None else f" at {tuple(round(float(v), 6) for v in self.point)}"
        return f"{self.severity.upper()} {self.code}: {self.message}{where}"


@dataclass(frozen=True, eq=False)
class ArStructure:
    """Frame X0 = d/dx, Xi = sum_j A[i][j] d/dzj on a chart around the origin."""

    n: int
    A: tuple
    m: ScalarExpr = field(default_factory=lambda: const(1.0))
    regularity: Regularity = field(default_factory=Regularity)
    chart: Chart | None = None
    name: str = "structure"

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        A = matrix(self.A)
        if len(A) != self.n or any(len(row) != self.n for row in A):
            raise ValueError(f"A must be {self.n}x{self.n}")
        object.__setattr__(self, "A", A)
        if not isinstance(self.m, ScalarExpr):
            object.__setattr__(self, "m", const(self.m))
        if self.chart is None:
            object.__setattr__(self, "chart", Chart.box(self.n + 1))
        if self.chart.dim != self.n + 1:
            raise ValueError(f"chart has {self.chart.dim} axes, expected {self.n + 1}")
        if self.regularity.kind is RegularityKind.GENERAL_2D and self.n != 1:
            raise ValueError("general2d requires n = 1")
        for e in [*(e for row in A for e in row), self.m]:
            if any(k > self.n for k in e.symbols()):
                raise ValueError(f"{e} uses a coordinate beyond z{self.n}")

    @property
    def dim(self):
        return self.n + 1

    @cached_property
    def metric(self):
        """Symbolic AᵀA, the cometric on the z-covectors."""
        return gram(self.A)

    @cached_property
    def fields(self):
        return surface_fields(self)

    @cached_property
    def log_m(self):
        return M.log(self.m)

    def frame(self, point):
        return np.array([[e.evaluate(point) for e in row] for row in self.A], dtype=float)

    def __repr__(self):
        return f"ArStructure(name={self.name!r}, n={self.n}, regularity={self.regularity})"


def surface_fields(s):
    """beta (positive root of beta² = sum_k a_kn²) and alpha_i = sum_k a_ki a_kn."""
    last = s.n - 1
    beta_squared = M.sum(M.pow(s.A[k][last], 2) for k in range(s.n))
    alpha = tuple(M.sum(M.mul(s.A[k][i], s.A[k][last]) for k in range(s.n)) for i in range(s.n))
    return SurfaceFields(beta_squared=beta_squared, beta=M.sqrt(beta_squared), alpha=alpha)


def _grid(chart, points, axes, fixed, rng, cap):
    columns = []
    for i in range(chart.dim):
        if i in fixed:
            columns.append(np.array([fixed[i]]))
        elif i in axes:
            columns.append(chart.axis(i, points))
        else:
            columns.append(np.array([0.0]))
    grid = np.stack(np.meshgrid(*columns, indexing="ij"), axis=-1).reshape(-1, chart.dim)
    if len(grid) > cap:
        grid = grid[np.sort(rng.choice(len(grid), size=cap, replace=False))]
    return grid


def _frame_dets(s, compiled, points):
    dets = np.full(len(points), np.nan)
    failed = 0
    for i, p in enumerate(points):
        try:
            dets[i] = np.linalg.det(compiled(p).reshape(s.n, s.n))
        except ExprError:
            failed += 1
    return dets, failed


def check_structure(s, points_per_axis=POINTS_PER_AXIS, seed=0):
    """Sampled checks of the structure's assumptions, as a list of ``Diagnostic``."""
    rng = np.random.default_rng(seed)
    diagnostics = []
    chart = s.chart
    origin = np.zeros(s.dim)
    entries = compile_exprs([e for row in s.A for e in row])

    def report(code, severity, message, point=None):
        d = Diagnostic(code, severity, message, None if point is None else tuple(point))
        diagnostics.append(d)
        (log.warning if severity != "info" else log.info)("%s: %s", s.name, d)

    # singular origin
    det0 = np.linalg.det(entries(origin).reshape(s.n, s.n))
    if abs(det0) > DET_TOL:
        report("OriginNotSingular", "error", f"det A = {det0:.6g} at the origin", origin)

    # H1 on Sigma = {zn = 0}, away from x = 0
    x_min = X_MIN_FRACTION * chart.half_width
    sigma = _grid(chart, points_per_axis, range(s.n), {s.n: 0.0}, rng, MAX_SAMPLES)
    sigma = sigma[np.abs(sigma[:, 0]) > x_min]
    dets, failed = _frame_dets(s, entries, sigma)
    bad = np.flatnonzero(np.abs(dets) <= DET_TOL)
    if len(bad):
        report(
            "H1Violation",
            "error",
            f"det A vanishes at {len(bad)} of {len(sigma)} sampled points of Sigma with |x| > {x_min:.3g}",
            sigma[bad[0]],
        )
    if failed:
        report("EvaluationFailed", "warning", f"A could not be evaluated at {failed} points of Sigma")

    # H2: det A is not identically zero on any sampled x-slice
    grid = _grid(chart, points_per_axis, range(s.dim), {}, rng, MAX_SAMPLES)
    dets, _ = _frame_dets(s, entries, grid)
    for x in np.unique(grid[:, 0]):
        if abs(x) <= x_min:
            continue
        on_slice = dets[grid[:, 0] == x]
        on_slice = on_slice[np.isfinite(on_slice)]
        if len(on_slice) and np.all(np.abs(on_slice) <= DET_TOL):
            report("H2Slice", "warning", "det A vanishes on the whole sampled slice", (x,) + (0.0,) * s.n)

    # measure bounded below by a positive constant
    density = compile_exprs([s.m])
    values = np.full(len(grid), np.nan)
    for i, p in enumerate(grid):
        try:
            values[i] = density(p)[0]
        except ExprError:
            pass
    bad = np.flatnonzero(~(values > 0.0) | ~np.isfinite(values))
    if len(bad):
        report(
            "MeasureNotPositive",
            "error",
            f"m is not positive and finite at {len(bad)} of {len(grid)} sampled chart points",
            grid[bad[0]],
        )
    else:
        log.debug("%s: m ranges over [%.6g, %.6g] on the chart", s.name, values.min(), values.max())

    # beta consistency at random chart points
    fields = s.fields
    beta2 = compile_exprs([fields.beta_squared, fields.alpha[-1]])
    last = s.n - 1
    lower, upper = np.array(chart.lower), np.array(chart.upper)
    for p in rng.uniform(lower, upper, size=(RANDOM_CHECKS, s.dim)):
        try:
            b2, alpha_n = beta2(p)
        except ExprError:
            continue
        direct = sum(float(e.evaluate(p)) ** 2 for e in (s.A[k][last] for k in range(s.n)))
        if b2 < 0 or not math.isclose(b2, direct, rel_tol=1e-12, abs_tol=1e-300) or not math.isclose(
            b2, alpha_n, rel_tol=1e-12, abs_tol=1e-300
        ):
            report("BetaConsistency", "error", f"beta² = {b2!r} but sum a_kn² = {direct!r}", p)
            break

    if s.regularity.strongly_regular:
        _check_strongly_regular(s, points_per_axis, rng, report)

    if not any(d.is_error for d in diagnostics):
        log.info("%s: %d sampled checks passed", s.name, len(sigma) + len(grid) + RANDOM_CHECKS)
    return diagnostics


def _check_strongly_regular(s, points_per_axis, rng, report):
    l = s.regularity.l
    base = _grid(s.chart, points_per_axis, range(1, s.dim), {0: 0.0}, rng, MAX_ORDER_SAMPLES)
    hats = [[e for e in row] for row in s.A]
    for _ in range(l):
        hats = [[e.diff(0) for e in row] for row in hats]
    hat = compile_exprs([e for row in hats for e in row])
    scale = 1.0 / math.factorial(l)

    for p in base:
        for i, row in enumerate(s.A):
            for j, e in enumerate(row):
                k = vanishing_order(e, "x", p, max_order=l)
                if k is not None and k < l:
                    report(
                        "StronglyRegularMismatch",
                        "error",
                        f"a_{i + 1}{j + 1} vanishes only to order {k} < {l} in x",
                        p,
                    )
                    return
        det = np.linalg.det(scale * hat(p).reshape(s.n, s.n))
        if abs(det) <= DET_TOL:
            report("StronglyRegularMismatch", "error", f"det of the reduced frame is {det:.3g}", p)
            return

    # beta has order l in x
    x_max = s.chart.half_width
    beta = compile_exprs([s.fields.beta])
    for x in np.geomspace(min(1e-4, x_max / 10), x_max, 9):
        ratio = beta((x,) + (0.0,) * s.n)[0] / x**l
        if not (1e-8 < ratio < 1e8):
            report("BetaOrder", "warning", f"beta / x^{l} = {ratio:.3g}", (x,) + (0.0,) * s.n)
            return


_ERRORS = {
    "OriginNotSingular": OriginNotSingular,
    "H1Violation": H1Violation,
    "MeasureNotPositive": MeasureNotPositive,
    "StronglyRegularMismatch": StronglyRegularMismatch,
}


def validate_structure(s, diagnostics=None, tolerate=(), points_per_axis=POINTS_PER_AXIS, seed=0):
    """Raise the first hard error found, carrying every diagnostic; otherwise return them.

    Error classes listed in ``tolerate`` are downgraded to warnings.
    """
    if diagnostics is None:
        diagnostics = check_structure(s, points_per_axis=points_per_axis, seed=seed)
    for d in diagnostics:
        if not d.is_error:
            continue
        cls = _ERRORS.get(d.code, StructureError)
        if cls in tolerate:
            log.warning("%s: continuing despite %s", s.name, d.code)
            continue
        raise cls(f"{s.name}: {d.message}", diagnostics)
    return diagnostics


def _expr(text, n, key):
    if isinstance(text, bool) or not isinstance(text, (str, int, float)):
        raise ConfigError(f"{key}: expected an expression string, got {text!r}")
    try:
        return parse(str(text), n)
    except ExprError as e:
        raise ConfigError(f"{key}: {e}") from e


def structure_from_config(config, name=None):
    """Build an ``ArStructure`` from the parsed key/value form of a structure file."""
    unknown = set(config) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    for key in ("n", "A"):
        if key not in config:
            raise ConfigError(f"missing key {key!r}")

    n = config["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"n must be an integer >= 1, got {n!r}")

    raw = config["A"]
    if not isinstance(raw, list):
        raise ConfigError("A must be a list")
    if len(raw) == n and all(isinstance(row, list) for row in raw):
        raw = [e for row in raw for e in row]
    if len(raw) != n * n:
        raise ConfigError(f"A has {len(raw)} entries, expected n² = {n * n}")
    A = tuple(
        tuple(_expr(raw[i * n + j], n, f"A[{i * n + j}]") for j in range(n)) for i in range(n)
    )

    m = _expr(config.get("measure", "1"), n, "measure")
    try:
        regularity = Regularity.parse(config.get("regularity", "general"))
        chart = Chart.from_flat(config["chart"]) if "chart" in config else None
        return ArStructure(
            n=n,
            A=A,
            m=m,
            regularity=regularity,
            chart=chart,
            name=str(config.get("name", name or "structure")),
        )
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e


def loads_structure(text, name=None, validate=True, tolerate=(), points_per_axis=POINTS_PER_AXIS, seed=0):
    try:
        config = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"malformed structure file: {e}") from e
    s = structure_from_config(config, name=name)
    if validate:
        validate_structure(s, tolerate=tolerate, points_per_axis=points_per_axis, seed=seed)
    return s


def load_structure(path, validate=True, tolerate=(), points_per_axis=POINTS_PER_AXIS, seed=0):
    """Read a structure file (or a bundled structure by name) and validate it."""
    path = resolve_structure_path(path)
    log.debug("loading structure from %s", path)
    return loads_structure(
        Path(path).read_text(encoding="utf-8"),
        name=Path(path).stem,
        validate=validate,
        tolerate=tolerate,
        points_per_axis=points_per_axis,
        seed=seed,
    )


def detect_step_2d(s):
    """Step of a planar structure: 1 + vanishing order of a11(x, 0) at x = 0."""
    if s.n != 1:
        raise ValueError(f"detect_step_2d needs n = 1, got n = {s.n}")
    k = vanishing_order(s.A[0][0], "x", (0.0, 0.0), max_order=STEP_MAX_ORDER)
    if k is None:
        raise StepUndetected(f"{s.name}: a11(x, 0) vanishes to order > {STEP_MAX_ORDER} at x = 0")
    return 1 + k
