import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from arlib.errors import FitConditioning, SingularB0, WrongRegularityClass
from arlib.ops import math as M
from arlib.ops.codegen import compile_exprs
from arlib.ops.creation import const
from arlib.geometry.hamiltonian import exp_from_surface, ham_rhs, initial_covector
from arlib.utils.log import log

__all__ = [
    "Pipeline",
    "FitParams",
    "DensityJet",
    "closed_form_jet",
    "numeric_taylor_jet",
    "density_jet",
    "log_det_second_derivative",
    "log_h_second_derivative",
    "density_profile",
    "profile_log_second_derivative",
    "strongly_regular_second_derivative",
    "jet_difference",
]

COND_B0_MAX = 1e12


class Pipeline(Enum):
    CLOSED_FORM = "closed"
    NUMERIC_TAYLOR = "taylor"


@dataclass(frozen=True)
class FitParams:
    degree: int = 8
    k: int = 8
    s0: float | None = None
    s0_max: float = 0.05
    s0_fraction: float = 0.25
    tol: float = 1e-12
    column_step: float = 1e-3
    max_condition: float = 1e8

    def __post_init__(self):
        if self.degree < 3:
            raise ValueError("the fit needs degree >= 3 to read off third derivatives")
        if 2 * self.k + 1 <= self.degree:
            raise ValueError(f"{2 * self.k + 1} stencil points cannot determine a degree-{self.degree} fit")

    def stencil_radius(self, scale):
        if self.s0 is not None:
            return float(self.s0)
        return min(self.s0_max, self.s0_fraction * scale)


@dataclass(frozen=True, eq=False)
class DensityJet:
    q: np.ndarray
    grad_delta: np.ndarray
    f: np.ndarray
    h: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    measure_term: float
    trace_term: float
    pipeline: Pipeline

    @property
    def h_n(self):
        return float(self.h[-1])

    @property
    def log_h_second(self):
        return self.measure_term + self.trace_term

    def to_dict(self):
        return {
            "pipeline": self.pipeline.value,
            "q": self.q,
            "grad_delta": self.grad_delta,
            "f": self.f,
            "h": self.h,
            "h_n": self.h_n,
            "B0": self.B0,
            "B1": self.B1,
            "B2": self.B2,
            "measure_term": self.measure_term,
            "trace_term": self.trace_term,
            "log_h_second": self.log_h_second,
        }


def log_det_second_derivative(B0, B1, B2):
    """(log |det B|)''(0) = tr(B0⁻¹B2) - tr((B0⁻¹B1)²) for B(s) = B0 + sB1 + s²B2/2."""
    B0 = np.asarray(B0, dtype=float)
    try:
        cond = np.linalg.cond(B0)
        if not cond < COND_B0_MAX:
            raise SingularB0(f"B(0) is singular to working precision (condition number {cond:.3g})")
        X = np.linalg.solve(B0, np.asarray(B1, dtype=float))
        Y = np.linalg.solve(B0, np.asarray(B2, dtype=float))
    except np.linalg.LinAlgError as e:
        raise SingularB0(f"B(0) is singular: {e}") from e
    return float(np.trace(Y) - np.trace(X @ X))


def _assemble(grad, f, h, dgrad, df):
    dim = len(grad)
    B0 = np.zeros((dim, dim))
    B1 = np.zeros((dim, dim))
    B2 = np.zeros((dim, dim))
    B0[:, 0] = grad
    B1[:, 0] = f
    B2[:, 0] = np.where(np.isnan(h), 0.0, h)
    for k in range(1, dim):
        B0[k - 1, k] = 1.0
        B1[:, k] = dgrad[k - 1]
        B2[:, k] = df[k - 1]
    return B0, B1, B2


@lru_cache(maxsize=64)
def _closed_form_fields(s):
    """Symbolic ∇δ, 𝔣, 𝔥n, their column derivatives and the log-measure jet, compiled."""
    n, dim = s.n, s.dim
    b = s.fields.beta_squared
    beta = s.fields.beta
    alpha = (None,) + s.fields.alpha  # alpha[l] pairs with coordinate zl
    metric = s.metric
    zs = range(1, n + 1)

    grad = [const(0.0)] + [M.true_divide(alpha[i], beta) for i in zs]

    f = [M.neg(M.true_divide(b.diff(0), M.mul(2.0, b)))]
    for i in zs:
        transport = M.sum(M.mul(alpha[l], alpha[i].diff(l)) for l in zs)
        pressure = M.sum(M.mul(metric[i - 1][j - 1], b.diff(j)) for j in zs)
        f.append(M.true_divide(M.sub(transport, M.mul(0.5, pressure)), b))

    h_n = M.sum(
        [
            M.mul(-0.5, M.pow(b.diff(0), 2)),
            M.sum(M.mul(M.mul(alpha[l], alpha[r]), b.diff(l).diff(r)) for l in zs for r in zs),
            M.mul(b, M.sum(M.mul(b.diff(l), f[l]) for l in zs)),
            M.neg(M.sum(M.mul(M.mul(alpha[l], alpha[j].diff(l)), b.diff(j)) for j in zs for l in zs)),
            M.mul(
                -0.5,
                M.sum(
                    M.mul(
                        alpha[j],
                        M.sub(M.mul(alpha[l], b.diff(j).diff(l)), M.mul(alpha[l].diff(j), b.diff(l))),
                    )
                    for j in zs
                    for l in zs
                ),
            ),
        ]
    )
    h_n = M.true_divide(h_n, M.mul(beta, b))

    columns = range(n)  # x, z1, ..., z(n-1)
    dgrad = [e.diff(u) for u in columns for e in grad]
    df = [e.diff(u) for u in columns for e in f]

    log_m = s.log_m
    glog = [log_m.diff(u) for u in range(dim)]
    hlog = [g.diff(v) for g in glog for v in range(dim)]

    exprs = grad + f + [h_n] + dgrad + df + glog + hlog
    log.debug("%s: closed-form jet compiled from %d expressions", s.name, len(exprs))
    return compile_exprs(exprs)


def closed_form_jet(s, q):
    q = np.asarray(q, dtype=float)
    initial_covector(s, q)
    n, dim = s.n, s.dim
    values = _closed_form_fields(s)(q)

    sizes = [dim, dim, 1, n * dim, n * dim, dim, dim * dim]
    grad, f, h_n, dgrad, df, glog, hlog = np.split(values, np.cumsum(sizes)[:-1])
    grad[0] = 0.0
    h = np.full(dim, np.nan)
    h[-1] = h_n[0]
    dgrad = dgrad.reshape(n, dim)
    df = df.reshape(n, dim)
    hlog = hlog.reshape(dim, dim)

    B0, B1, B2 = _assemble(grad, f, h, dgrad, df)
    return DensityJet(
        q=q,
        grad_delta=grad,
        f=f,
        h=h,
        B0=B0,
        B1=B1,
        B2=B2,
        measure_term=float(grad @ hlog @ grad + glog @ f),
        trace_term=log_det_second_derivative(B0, B1, B2),
        pipeline=Pipeline.CLOSED_FORM,
    )


@lru_cache(maxsize=64)
def _density(s):
    return compile_exprs([s.m])


def _scale(s, q):
    if q[0] != 0.0:
        return abs(q[0])
    return s.fields.beta.evaluate(q)


def _taylor(s, q, fit, s0):
    """Derivatives 1..3 of G(., q) and (log m)(G(., q))'' at s = 0 from a polynomial fit."""
    arc = exp_from_surface(s, q, s0, fit.tol)
    t = np.linspace(-1.0, 1.0, 2 * fit.k + 1)
    points = arc.points(s0 * t)
    density = _density(s)
    log_m = np.log([density(p)[0] for p in points])

    V = np.vander(t, fit.degree + 1, increasing=True)
    cond = np.linalg.cond(V)
    if cond > fit.max_condition:
        raise FitConditioning(f"Vandermonde condition number {cond:.3g} exceeds {fit.max_condition:.3g}")
    coef, *_ = np.linalg.lstsq(V, np.column_stack((points, log_m)), rcond=None)
    derivs = [math.factorial(m) * coef[m] / s0**m for m in range(4)]
    log.trace("fit at %s: constant term off by %.3g", q.tolist(), np.max(np.abs(coef[0][: s.dim] - q)))
    return derivs[1][: s.dim], derivs[2][: s.dim], derivs[3][: s.dim], derivs[2][s.dim]


def numeric_taylor_jet(s, q, fit=None):
    """Jet from polynomial fits of integrated arcs, columns by central differences in q."""
    fit = fit or FitParams()
    q = np.asarray(q, dtype=float)
    initial_covector(s, q)
    scale = _scale(s, q)
    s0 = fit.stencil_radius(scale)
    step = fit.column_step * scale

    grad, f, h, measure_second = _taylor(s, q, fit, s0)
    grad[0] = 0.0
    dgrad = np.zeros((s.n, s.dim))
    df = np.zeros((s.n, s.dim))
    for u in range(s.n):
        e = np.zeros(s.dim)
        e[u] = step
        g_plus, f_plus, _, _ = _taylor(s, q + e, fit, s0)
        g_minus, f_minus, _, _ = _taylor(s, q - e, fit, s0)
        dgrad[u] = (g_plus - g_minus) / (2 * step)
        df[u] = (f_plus - f_minus) / (2 * step)

    B0, B1, B2 = _assemble(grad, f, h, dgrad, df)
    return DensityJet(
        q=q,
        grad_delta=grad,
        f=f,
        h=h,
        B0=B0,
        B1=B1,
        B2=B2,
        measure_term=float(measure_second),
        trace_term=log_det_second_derivative(B0, B1, B2),
        pipeline=Pipeline.NUMERIC_TAYLOR,
    )


def density_jet(s, q, pipeline=Pipeline.CLOSED_FORM, fit=None):
    pipeline = Pipeline(pipeline)
    if pipeline is Pipeline.CLOSED_FORM:
        return closed_form_jet(s, q)
    return numeric_taylor_jet(s, q, fit)


def log_h_second_derivative(s, q, pipeline=Pipeline.CLOSED_FORM, fit=None):
    """(log h_q)''(0), measure term included."""
    return density_jet(s, q, pipeline, fit).log_h_second


def density_profile(s, q, grid, column_step=1e-3, tol=1e-12):
    """Rows (s, h_q(s)) with h_q(s) = m(G(s,q)) |det(∇δ | G_*∂x | ... | G_*∂z(n-1))|, up to a constant."""
    q = np.asarray(q, dtype=float)
    grid = np.sort(np.asarray(grid, dtype=float))
    s_max = float(np.max(np.abs(grid)))
    step = column_step * _scale(s, q)
    arc = exp_from_surface(s, q, s_max, tol)

    pushed = []
    for u in range(s.n):
        e = np.zeros(s.dim)
        e[u] = step
        plus = exp_from_surface(s, q + e, s_max, tol).points(grid)
        minus = exp_from_surface(s, q - e, s_max, tol).points(grid)
        pushed.append((plus - minus) / (2 * step))

    density = _density(s)
    values = np.empty(len(grid))
    for i, sv in enumerate(grid):
        st = arc(sv)
        velocity = ham_rhs(s, st)[: s.dim]
        B = np.column_stack([velocity] + [p[i] for p in pushed])
        values[i] = density(st.point)[0] * abs(np.linalg.det(B))
    if not np.all(values > 0):
        raise SingularB0(f"{s.name}: the Jacobian degenerates on the profile grid at q = {q.tolist()}")
    return np.column_stack((grid, values))


def profile_log_second_derivative(profile):
    """Five-point central difference of log h at s = 0 on a uniform grid."""
    profile = np.asarray(profile, dtype=float)
    s_values, values = profile[:, 0], profile[:, 1]
    zero = np.flatnonzero(np.isclose(s_values, 0.0, atol=1e-14))
    if len(zero) != 1 or not 2 <= zero[0] <= len(s_values) - 3:
        raise ValueError("the profile grid must contain s = 0 with two points on each side")
    spacing = np.diff(s_values)
    if not np.allclose(spacing, spacing[0], rtol=1e-9):
        raise ValueError("the profile grid must be uniform")
    d = spacing[0]
    i = zero[0]
    y = np.log(values[i - 2 : i + 3])
    return float((-y[0] + 16 * y[1] - 30 * y[2] + 16 * y[3] - y[4]) / (12 * d * d))


def strongly_regular_second_derivative(s, q, jet=None, require_class=True):
    """The trace term written out with β0 ≡ 0, from the closed-form jet.

    Equals ``jet.trace_term``; the explicit bracket is only offered for
    strongly regular structures with n >= 2 unless ``require_class`` is off.
    """
    if require_class and not (s.regularity.strongly_regular and s.n >= 2):
        raise WrongRegularityClass(
            f"{s.name}: needs a strongly regular structure with n >= 2, got {s.regularity} with n = {s.n}"
        )
    jet = jet or closed_form_jet(s, q)
    n = s.n
    grad, f, h_n = jet.grad_delta, jet.f, jet.h_n
    beta = grad[n]
    # d[a, u] = ∂u of component a, for u = x, z1, ..., z(n-1)
    dgrad = jet.B1[:, 1:]
    df = jet.B2[:, 1:]
    zs = range(1, n)

    D = np.array([[dgrad[a, u] - grad[a] * dgrad[n, u] / beta for u in range(n)] for a in range(n)])
    minors = sum(D[i, i] * D[j, j] - D[i, j] * D[j, i] for i in zs for j in zs if i < j)
    bracket = (
        0.5 * h_n
        + 0.5 * beta * df[0, 0]
        + 0.5 * sum(beta * df[i, i] - grad[i] * df[n, i] for i in zs)
        - f[0] * dgrad[n, 0]
        + sum(f[n] * dgrad[i, i] - f[i] * dgrad[n, i] for i in zs)
        + beta * minors
    )
    S = sum(dgrad[i, i] * beta - grad[i] * dgrad[n, i] for i in zs)
    return float(2.0 / beta * bracket - (f[n] + S) ** 2 / beta**2)


def jet_difference(a, b):
    """Componentwise disagreement between two jets at the same q."""
    if not np.allclose(a.q, b.q):
        raise ValueError("jets are at different points")
    both = ~np.isnan(a.h) & ~np.isnan(b.h)
    scale = max(abs(a.log_h_second), abs(b.log_h_second), 1e-300)
    return {
        "grad_delta": float(np.max(np.abs(a.grad_delta - b.grad_delta))),
        "f": float(np.max(np.abs(a.f - b.f))),
        "h_n": abs(a.h_n - b.h_n),
        "h": float(np.max(np.abs(a.h[both] - b.h[both]))) if both.any() else None,
        "trace_term": abs(a.trace_term - b.trace_term),
        "measure_term": abs(a.measure_term - b.measure_term),
        "log_h_second": abs(a.log_h_second - b.log_h_second),
        "log_h_second_relative": abs(a.log_h_second - b.log_h_second) / scale,
    }
