from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from arlib.errors import CharacteristicPoint, LeftChart, StiffnessFailure
from arlib.ops.codegen import compile_exprs
from arlib.ops.manipulation import diff_matrix
from arlib.utils.log import log
from arlib.utils.parallel import parallel_map

__all__ = [
    "PhaseState",
    "GeodesicArc",
    "hamiltonian_value",
    "ham_rhs",
    "initial_covector",
    "exp_from_surface",
    "exp_from_surface_many",
    "hamiltonian_flow",
    "BETA_FLOOR",
    "TOL",
]

BETA_FLOOR = 1e-8
TOL = 1e-10
SIGMA_TOL = 1e-12


@dataclass(frozen=True)
class PhaseState:
    x: float
    z: np.ndarray
    px: float
    pz: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "px", float(self.px))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float).reshape(-1))
        object.__setattr__(self, "pz", np.asarray(self.pz, dtype=float).reshape(-1))
        if self.z.shape != self.pz.shape:
            raise ValueError(f"z has {self.z.size} components but pz has {self.pz.size}")

    @classmethod
    def from_array(cls, y):
        y = np.asarray(y, dtype=float)
        dim = len(y) // 2
        return cls(y[0], y[1:dim], y[dim], y[dim + 1 :])

    @property
    def point(self):
        return np.concatenate(([self.x], self.z))

    @property
    def covector(self):
        return np.concatenate(([self.px], self.pz))

    def to_array(self):
        return np.concatenate((self.point, self.covector))


@lru_cache(maxsize=64)
def _dynamics(s):
    """Compiled AᵀA followed by its partials along x, z1, ..., zn (row-major)."""
    metric = s.metric
    blocks = [metric] + [diff_matrix(metric, u) for u in range(s.dim)]
    return compile_exprs([e for block in blocks for row in block for e in row])


def _split(s, values):
    n = s.n
    mats = values.reshape(s.dim + 1, n, n)
    return mats[0], mats[1:]


def _rhs_array(s, y):
    n = s.n
    point, px, pz = y[: s.dim], y[s.dim], y[s.dim + 1 :]
    metric, partials = _split(s, _dynamics(s)(point))
    forces = -0.5 * np.einsum("i,uij,j->u", pz, partials, pz)
    out = np.empty(2 * s.dim)
    out[0] = px
    out[1 : s.dim] = metric @ pz
    out[s.dim] = forces[0]
    out[s.dim + 1 :] = forces[1 : n + 1]
    return out


def hamiltonian_value(s, st):
    """H = ½px² + ½ pzᵀ AᵀA pz."""
    metric, _ = _split(s, _dynamics(s)(st.point))
    return 0.5 * st.px**2 + 0.5 * float(st.pz @ metric @ st.pz)


def ham_rhs(s, st):
    """(ẋ, ż, ṗx, ṗz) as one array of length 2(n+1)."""
    return _rhs_array(s, st.to_array())


def initial_covector(s, q, beta_floor=BETA_FLOOR):
    """λ(q) = dzn / β(q) at a point q of Sigma = {zn = 0}."""
    q = np.asarray(q, dtype=float)
    if q.shape != (s.dim,):
        raise ValueError(f"q must have {s.dim} coordinates, got {q.shape}")
    if abs(q[-1]) > SIGMA_TOL:
        raise ValueError(f"q = {q.tolist()} is not on Sigma (zn = {q[-1]!r})")
    beta = s.fields.beta.evaluate(q)
    if not beta > beta_floor:
        raise CharacteristicPoint(q, beta)
    pz = np.zeros(s.n)
    pz[-1] = 1.0 / beta
    return PhaseState(q[0], q[1:], 0.0, pz)


def _chart_event(s):
    lower, upper = np.array(s.chart.lower), np.array(s.chart.upper)

    def leaves_chart(t, y):
        p = y[: s.dim]
        return min(np.min(p - lower), np.min(upper - p))

    leaves_chart.terminal = True
    leaves_chart.direction = -1
    return leaves_chart


def _integrate(s, y0, s_end, tol):
    sol = solve_ivp(
        lambda t, y: _rhs_array(s, y),
        (0.0, s_end),
        y0,
        method="RK45",
        dense_output=True,
        rtol=tol,
        atol=tol,
        events=_chart_event(s),
    )
    if sol.status == -1:
        raise StiffnessFailure(f"{s.name}: integration from {y0[: s.dim].tolist()} failed: {sol.message}")
    if sol.status == 1:
        raise LeftChart(
            f"{s.name}: arc from {y0[: s.dim].tolist()} leaves the chart at s = {sol.t_events[0][0]:.6g}"
        )
    log.trace("%s: %d steps, %d rhs evaluations to s = %g", s.name, len(sol.t) - 1, sol.nfev, s_end)
    return sol


class GeodesicArc:
    """Normal extremal through a point of Sigma, dense on [-s_max, s_max]."""

    def __init__(self, structure, base, covector0, s_max, tol, forward=None, backward=None):
        self.structure = structure
        self.base = np.asarray(base, dtype=float)
        self.covector0 = covector0
        self.s_max = float(s_max)
        self.tol = float(tol)
        self._forward = forward
        self._backward = backward

    @property
    def nfev(self):
        return sum(sol.nfev for sol in (self._forward, self._backward) if sol is not None)

    @property
    def nodes(self):
        """Accepted integrator steps, ascending."""
        ts = [np.zeros(1)]
        if self._backward is not None:
            ts.append(self._backward.t)
        if self._forward is not None:
            ts.append(self._forward.t)
        return np.unique(np.concatenate(ts))

    def _array(self, s):
        if s == 0.0:
            return self.covector0.to_array()
        if abs(s) > self.s_max * (1 + 1e-12):
            raise ValueError(f"s = {s} outside [-{self.s_max}, {self.s_max}]")
        sol = self._forward if s > 0 else self._backward
        return sol.sol(s)

    def __call__(self, s):
        return PhaseState.from_array(self._array(float(s)))

    def states(self, s_values):
        return np.array([self._array(float(s)) for s in s_values])

    def points(self, s_values):
        return self.states(s_values)[:, : self.structure.dim]

    def energy_error(self, s_values):
        """sup |2H - 1| over the given s."""
        return max(
            abs(2.0 * hamiltonian_value(self.structure, PhaseState.from_array(y)) - 1.0)
            for y in self.states(s_values)
        )

    def __repr__(self):
        return f"GeodesicArc(base={self.base.tolist()}, s_max={self.s_max}, tol={self.tol})"


def exp_from_surface(s, q, s_max, tol=TOL):
    """G(., q): the normal extremal with initial covector λ(q), for |s| <= s_max."""
    if s_max < 0:
        raise ValueError(f"s_max must be >= 0, got {s_max}")
    st = initial_covector(s, q)
    y0 = st.to_array()
    if s_max == 0:
        return GeodesicArc(s, q, st, 0.0, tol)
    forward = _integrate(s, y0, s_max, tol)
    backward = _integrate(s, y0, -s_max, tol)
    return GeodesicArc(s, q, st, s_max, tol, forward, backward)


def exp_from_surface_many(s, qs, s_max, tol=TOL, threads=None):
    return parallel_map(lambda q: exp_from_surface(s, q, s_max, tol), qs, threads=threads)


def hamiltonian_flow(s, st, s_end, tol=TOL):
    """Flow an arbitrary phase state for time ``s_end`` (negative runs backwards)."""
    y0 = st.to_array()
    if s_end == 0:
        return st
    sol = _integrate(s, y0, s_end, tol)
    return PhaseState.from_array(sol.y[:, -1])
