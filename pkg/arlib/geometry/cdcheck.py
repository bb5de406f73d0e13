from dataclasses import dataclass

import numpy as np

from arlib.errors import ArlibError, InsufficientTail, NoDivergence, SamplingFailure
from arlib.geometry.disintegration import Pipeline, log_h_second_derivative
from arlib.utils.log import log
from arlib.utils.parallel import parallel_map

__all__ = [
    "SampledCurve",
    "SingularityFit",
    "CdVerdict",
    "default_x_grid",
    "sample_curve",
    "fit_singularity",
    "verdict",
    "difference_series",
    "policy",
    "DEFAULT_K_GRID",
]

X_FLOOR = 1e-4
X_GRID_MAX = 0.4
X_GRID_MIN = 5e-3
X_GRID_POINTS = 12
TAIL = 6
MIN_POSITIVE = 4
MONOTONE_WINDOW = 4
MAX_FAILURE_FRACTION = 0.2

# soundness gate
MAX_ORDER = -1.5
MIN_R_SQUARED = 0.99

DEFAULT_K_GRID = (-100.0, -10.0, 0.0, 10.0, 100.0)


def policy():
    return {
        "max_order": MAX_ORDER,
        "min_coefficient": 0.0,
        "min_r_squared": MIN_R_SQUARED,
        "monotone_window": MONOTONE_WINDOW,
        "tail": TAIL,
        "min_positive": MIN_POSITIVE,
        "max_failure_fraction": MAX_FAILURE_FRACTION,
        "note": "divergence thresholds are tool policy; absence of divergence is reported as inconclusive",
    }


class SampledCurve(list):
    """(x, value) pairs by decreasing x; ``failures`` holds the skipped (x, reason) pairs."""

    def __init__(self, samples=(), failures=()):
        super().__init__(samples)
        self.failures = list(failures)


@dataclass(frozen=True)
class SingularityFit:
    samples: tuple
    fitted_order: float
    fitted_coefficient: float
    r_squared: float
    monotone_tail: bool
    tail: tuple = ()

    @property
    def diverges(self):
        return (
            self.fitted_order <= MAX_ORDER
            and self.fitted_coefficient > 0
            and self.monotone_tail
            and self.r_squared >= MIN_R_SQUARED
        )

    def to_dict(self):
        return {
            "order": self.fitted_order,
            "coeff": self.fitted_coefficient,
            "r2": self.r_squared,
            "monotone": self.monotone_tail,
            "tail": [list(p) for p in self.tail],
        }


@dataclass(frozen=True)
class CdVerdict:
    structure: str
    K_grid: tuple
    per_K: tuple
    fit: SingularityFit | None
    certified: bool
    statement: str
    reason: str = ""

    @property
    def label(self):
        return "FAIL-CD" if self.certified else "INCONCLUSIVE"

    def to_dict(self):
        return {
            "structure": self.structure,
            "verdict": self.label,
            "certified": self.certified,
            "statement": self.statement,
            "reason": self.reason,
            "K_grid": list(self.K_grid),
            "per_K": [dict(entry) for entry in self.per_K],
            "fit": None if self.fit is None else self.fit.to_dict(),
        }


def default_x_grid(chart=None, points=X_GRID_POINTS, x_max=X_GRID_MAX, x_min=X_GRID_MIN):
    """Geometric grid from x_max down to x_min, restricted to the chart."""
    grid = np.geomspace(x_max, x_min, points)
    if chart is not None:
        grid = grid[grid <= chart.upper[0]]
    return grid[grid >= X_FLOOR]


def sample_curve(s, x_grid=None, pipeline=Pipeline.CLOSED_FORM, fit=None, threads=None):
    """(log h_q)''(0) at q = (x, 0, ..., 0) for each x, measure term included."""
    x_grid = default_x_grid(s.chart) if x_grid is None else np.asarray(x_grid, dtype=float)
    x_grid = np.sort(x_grid)[::-1]
    if len(x_grid) == 0:
        raise ValueError("empty x grid")
    if x_grid[-1] < X_FLOOR or x_grid[0] > s.chart.upper[0]:
        raise ValueError(f"x grid must lie in [{X_FLOOR}, {s.chart.upper[0]}]")

    def one(x):
        q = np.zeros(s.dim)
        q[0] = x
        try:
            return float(x), log_h_second_derivative(s, q, pipeline, fit), None
        except ArlibError as e:
            log.warning("%s: skipping x = %.6g: %s", s.name, x, e)
            return float(x), None, f"{type(e).__name__}: {e}"

    results = parallel_map(one, x_grid, threads=threads)
    curve = SampledCurve(
        [(x, v) for x, v, err in results if err is None],
        [(x, err) for x, v, err in results if err is not None],
    )
    if len(curve.failures) > MAX_FAILURE_FRACTION * len(x_grid):
        raise SamplingFailure(
            f"{s.name}: {len(curve.failures)} of {len(x_grid)} curve points failed; first: {curve.failures[0][1]}"
        )
    log.info("%s: sampled %d points (%d skipped)", s.name, len(curve), len(curve.failures))
    return curve


def fit_singularity(samples, tail=TAIL, absolute=False):
    """Power law c·x^p fitted in log-log over the smallest-x tail.

    With ``absolute`` the fit runs on |value|, as needed for series of either sign.
    """
    samples = sorted(((float(x), float(v)) for x, v in samples), key=lambda p: -p[0])
    tail_samples = samples[-tail:]
    values = [abs(v) if absolute else v for _, v in tail_samples]
    usable = [(x, v) for (x, _), v in zip(tail_samples, values) if v > 0 and np.isfinite(v)]
    if len(usable) < MIN_POSITIVE:
        raise InsufficientTail(f"only {len(usable)} positive values among the last {len(tail_samples)} samples")

    log_x = np.log([x for x, _ in usable])
    log_v = np.log([v for _, v in usable])
    order, intercept = np.polyfit(log_x, log_v, 1)
    residual = log_v - (order * log_x + intercept)
    ss_tot = float(np.sum((log_v - log_v.mean()) ** 2))
    ss_res = float(np.sum(residual**2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else float(ss_res < 1e-20)

    window = [abs(v) if absolute else v for _, v in samples[-MONOTONE_WINDOW:]]
    monotone = len(window) == MONOTONE_WINDOW and all(b > a for a, b in zip(window, window[1:]))

    return SingularityFit(
        samples=tuple(samples),
        fitted_order=float(order),
        fitted_coefficient=float(np.exp(intercept)),
        r_squared=float(r_squared),
        monotone_tail=bool(monotone),
        tail=tuple(usable),
    )


def _per_k(samples, K_grid):
    out = []
    for K in K_grid:
        above = [(x, v) for x, v in samples if v > -K]
        x, v = max(above) if above else (None, None)
        out.append({"K": float(K), "x": x, "value": v})
    return tuple(out)


def verdict(s, fit, K_grid=DEFAULT_K_GRID):
    """Certificate that CD(K, N) fails for every K and N, or NoDivergence."""
    name = s.name if hasattr(s, "name") else str(s)
    K_grid = tuple(float(K) for K in K_grid)
    per_K = _per_k(fit.samples, K_grid)

    if not fit.diverges:
        reasons = []
        if fit.fitted_order > MAX_ORDER:
            reasons.append(f"order {fit.fitted_order:.3f} > {MAX_ORDER}")
        if not fit.fitted_coefficient > 0:
            reasons.append("non-positive coefficient")
        if not fit.monotone_tail:
            reasons.append("tail not monotone")
        if fit.r_squared < MIN_R_SQUARED:
            reasons.append(f"r² {fit.r_squared:.4f} < {MIN_R_SQUARED}")
        inconclusive = CdVerdict(
            structure=name,
            K_grid=K_grid,
            per_K=per_K,
            fit=fit,
            certified=False,
            statement="inconclusive: the sampled curve does not certify divergence",
            reason="; ".join(reasons),
        )
        log.info("%s: inconclusive (%s)", name, inconclusive.reason)
        raise NoDivergence(inconclusive)

    statement = (
        f"CD(K,N) fails for all K in R and N in (1, inf): (log h_q)''(0) ~ "
        f"{fit.fitted_coefficient:.4g} x^{fit.fitted_order:.3f} diverges to +inf as q approaches "
        f"the characteristic point along Sigma, so for every K there are base points with "
        f"(log h_q)''(0) > -K, incompatible with (log h)'' + ((log h)')^2/(N-1) <= -K for every N."
    )
    log.info("%s: FAIL-CD certified (order %.3f, coefficient %.4g)", name, fit.fitted_order, fit.fitted_coefficient)
    return CdVerdict(
        structure=name,
        K_grid=K_grid,
        per_K=per_K,
        fit=fit,
        certified=True,
        statement=statement,
    )


def difference_series(a, b):
    """(x, value_a - value_b) at the x sampled in both series."""
    b_values = [(float(x), float(v)) for x, v in b]
    out = []
    for x, v in a:
        match = [w for y, w in b_values if np.isclose(x, y, rtol=1e-12, atol=0.0)]
        if match:
            out.append((float(x), float(v) - match[0]))
    return out
