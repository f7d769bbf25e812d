"""Finite-difference solver for the half-line Navier-Stokes problems.

Mass coordinate x (impermeable wall) or boundary-fixed coordinate xi (inflow)
on [0, L], nodes x_i = i dx. Central differences for the pressure and the
viscous flux (flux form at half nodes), first-order upwinding for the inflow
convection, Heun time stepping with a parabolic CFL limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numba import njit

from .gas_model import GasLaw
from .shock_profile import (EndStates, ShockProfile, IMPERMEABLE, INFLOW, build_profile)


class InvalidInputError(ValueError):
    pass


class StateInvalidError(ValueError):
    pass


class BlowUpError(RuntimeError):
    """Positivity of v was lost; carries the time, node and any partial record."""

    def __init__(self, t, node, record=None):
        super().__init__(f"specific volume lost positivity at t={t:.6g}, node {node}")
        self.t = t
        self.node = node
        self.record = record


@dataclass(frozen=True)
class Grid:
    length: float
    n_cells: int

    def __post_init__(self):
        if not (self.length > 0 and self.n_cells > 0):
            raise InvalidInputError("grid needs positive length and cell count")

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return self.dx * np.arange(self.n_cells + 1)

    @property
    def size(self) -> int:
        return self.n_cells + 1


@dataclass(frozen=True, eq=False)
class State:
    t: float
    v: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        if self.v.shape != self.u.shape:
            raise StateInvalidError("v and u lengths differ")

    def check(self, grid: Grid | None = None):
        if grid is not None and self.v.shape[0] != grid.size:
            raise InvalidInputError("state does not match the grid")
        if not np.all(self.v > 0):
            raise StateInvalidError("specific volume must be positive at every node")
        return self


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet values; v_left is ignored at an impermeable wall."""
    v_left: float
    u_left: float
    v_right: float
    u_right: float


@dataclass(frozen=True, eq=False)
class Problem:
    kind: str
    end: EndStates
    law: GasLaw
    grid: Grid
    beta: float
    profile: ShockProfile | None = None
    boundary: BoundaryData | None = None

    def __post_init__(self):
        if self.kind not in (IMPERMEABLE, INFLOW):
            raise InvalidInputError(f"unknown problem kind {self.kind!r}")
        if self.kind != self.end.problem_kind:
            raise InvalidInputError("end states were built for the other boundary problem")
        if self.kind == IMPERMEABLE and self.end.u_minus != 0:
            raise InvalidInputError("impermeable problem needs u_minus = 0")
        if self.kind == INFLOW and not self.end.sigma_minus < 0:
            raise InvalidInputError("inflow problem needs sigma_minus < 0")
        if not self.beta > 0:
            raise InvalidInputError("profile offset beta must be positive")
        if self.law.gamma != self.end.gamma:
            raise InvalidInputError("gas law differs from the end states")

    @property
    def bc(self) -> BoundaryData:
        if self.boundary is not None:
            return self.boundary
        e = self.end
        return BoundaryData(e.v_minus, e.u_minus, e.v_plus, e.u_plus)

    @property
    def sigma_minus(self) -> float:
        return self.end.sigma_minus if self.kind == INFLOW else 0.0

    @property
    def front_speed(self) -> float:
        return self.end.sigma - self.sigma_minus

    def shock_position(self, t: float, X: float = 0.0) -> float:
        return self.front_speed * t + X + self.beta

    def zeta(self, t: float, X: float = 0.0) -> np.ndarray:
        return self.grid.nodes - self.shock_position(t, X)

    def with_profile(self, **kw) -> "Problem":
        prof = build_profile(self.end, **kw)
        return Problem(self.kind, self.end, self.law, self.grid, self.beta, prof, self.boundary)


@dataclass(frozen=True)
class SolverConfig:
    cfl_number: float = 0.4
    t_end: float = 200.0
    output_stride: int = 2000
    scheme_order: int = 2

    def __post_init__(self):
        if not 0 < self.cfl_number <= 1:
            raise InvalidInputError("cfl_number must lie in (0, 1]")
        if self.t_end < 0:
            raise InvalidInputError("t_end must be nonnegative")
        if self.output_stride < 1:
            raise InvalidInputError("output_stride must be a positive step count")
        if self.scheme_order != 2:
            raise InvalidInputError("only the second-order scheme is implemented")


def default_length(end: EndStates, beta: float, t_end: float, kind: str) -> float:
    speed = end.sigma - (end.sigma_minus if kind == INFLOW else 0.0)
    return beta + speed * t_end + 80.0 / end.delta


def make_problem(end: EndStates, beta: float | None = None, dx: float = 0.05,
                 t_end: float = 200.0, length: float | None = None, profile_kw=None) -> Problem:
    """Problem with the preset geometry: beta = 60/delta, L = beta + speed t_end + 80/delta."""
    kind = end.problem_kind
    if beta is None:
        beta = 60.0 / end.delta
    if length is None:
        length = default_length(end, beta, t_end, kind)
    n = int(math.ceil(length / dx))
    grid = Grid(n * dx, n)
    kw = dict(profile_kw or {})
    if "half_width" not in kw:
        # cover the wall for the whole run so boundary terms see the true tail
        kw["half_width"] = max(60.0 / end.delta, beta + (end.sigma - end.sigma_minus) * t_end + 40.0 / end.delta)
    prof = build_profile(end, **kw)
    return Problem(kind, end, GasLaw(end.gamma), grid, float(beta), prof)


# ---------------------------------------------------------------------------
# initial data

def bump(r):
    """C-infinity bump exp(1 - 1/(1-r^2)) on |r| < 1, peak value 1 at r = 0."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class Perturbation:
    """amplitude * bump((x - beta - center_offset)/half_width) added to (v, u) with weights."""
    amplitude: float = 0.0
    center_offset: float = 0.0
    half_width: float = 5.0
    v_weight: float = 1.0
    u_weight: float = 1.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise InvalidInputError("perturbation amplitude must be nonnegative")
        if not self.half_width > 0:
            raise InvalidInputError("perturbation half width must be positive")

    def fields(self, x, center):
        b = self.amplitude * bump((x - center - self.center_offset) / self.half_width)
        return self.v_weight * b, self.u_weight * b

    @classmethod
    def randomized(cls, amplitude: float, seed: int, half_width: float = 5.0):
        rng = np.random.default_rng(seed)
        wv, wu = rng.uniform(-1.0, 1.0, size=2)
        off = rng.uniform(-half_width, half_width)
        return cls(amplitude, float(off), half_width, float(wv), float(wu))


class InitialData(NamedTuple):
    state: State
    perturbation_h1: float


def discrete_h1(dx, *fields) -> float:
    total = 0.0
    for f in fields:
        df = np.gradient(f, dx, edge_order=2)
        total += np.trapezoid(f * f + df * df, dx=dx)
    return float(math.sqrt(total))


def make_initial_data(problem: Problem, perturbation: Perturbation | None = None) -> InitialData:
    if problem.profile is None:
        raise InvalidInputError("problem has no shock profile attached")
    pert = perturbation or Perturbation()
    x = problem.grid.nodes
    s = problem.profile.sample(x - problem.beta)
    pv, pu = pert.fields(x, problem.beta)
    bc = problem.bc
    if problem.kind == IMPERMEABLE and pu[0] != 0.0:
        raise InvalidInputError("perturbation violates u(0) = 0 at the wall")
    if problem.kind == INFLOW and (pu[0] != 0.0 or pv[0] != 0.0):
        raise InvalidInputError("perturbation violates the inflow boundary data")
    if pu[-1] != 0.0 or pv[-1] != 0.0:
        raise InvalidInputError("perturbation must vanish at the far-field node")
    v = s.v + pv
    u = s.u + pu
    _impose_bc(v, u, bc.v_left, bc.u_left, bc.v_right, bc.u_right, problem.kind == IMPERMEABLE)
    state = State(0.0, v, u).check(problem.grid)
    return InitialData(state, discrete_h1(problem.grid.dx, pv, pu))


# ---------------------------------------------------------------------------
# kernels

@njit(cache=True)
def _impose_bc(v, u, vl, ul, vr, ur, wall):
    n = v.shape[0] - 1
    u[0] = ul
    if not wall:
        v[0] = vl
    v[n] = vr
    u[n] = ur


@njit(cache=True)
def _pressure_array(v, gamma, p):
    k = int(gamma)
    n = v.shape[0]
    if k == gamma and k == 2:
        for i in range(n):
            p[i] = 1.0 / (v[i] * v[i])
    elif k == gamma and k == 3:
        for i in range(n):
            p[i] = 1.0 / (v[i] * v[i] * v[i])
    else:
        for i in range(n):
            p[i] = math.exp(-gamma * math.log(v[i]))


@njit(cache=True)
def _rhs(v, u, dx, gamma, sm, wall, dv, du, p, f):
    """Tendencies into (dv, du); p and f are scratch arrays of the same length."""
    n = v.shape[0] - 1
    inv2 = 0.5 / dx
    invdx2 = 1.0 / (dx * dx)
    _pressure_array(v, gamma, p)
    for i in range(n):
        f[i] = 2.0 * (u[i + 1] - u[i]) / (v[i] + v[i + 1])
    for i in range(1, n):
        dv[i] = (u[i + 1] - u[i - 1]) * inv2
        du[i] = (p[i - 1] - p[i + 1]) * inv2 + (f[i] - f[i - 1]) * invdx2
    if sm != 0.0:
        c = sm / dx
        for i in range(1, n):
            dv[i] += c * (v[i] - v[i - 1])
            du[i] += c * (u[i] - u[i - 1])
    du[0] = 0.0
    du[n] = 0.0
    dv[n] = 0.0
    if wall:
        dv[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2
    else:
        dv[0] = 0.0


@njit(cache=True)
def _stage(v, u, v0, u0, a, b, dt, dx, gamma, sm, wall, sv, su, has_src,
           vl, ul, vr, ur, p, f, vout, uout, ext):
    """out = a*U0 + b*(U + dt*(R(U) + S)), then boundary values.

    Returns the first node with nonpositive v, or -1; ext receives (min v, max |u|)
    of the output for the next time-step limit.
    """
    n = v.shape[0] - 1
    inv2 = 0.5 / dx
    invdx2 = 1.0 / (dx * dx)
    bdt = b * dt
    _pressure_array(v, gamma, p)
    for i in range(n):
        f[i] = 2.0 * (u[i + 1] - u[i]) / (v[i] + v[i + 1])
    if sm == 0.0:
        for i in range(1, n):
            rv = (u[i + 1] - u[i - 1]) * inv2
            ru = (p[i - 1] - p[i + 1]) * inv2 + (f[i] - f[i - 1]) * invdx2
            vout[i] = a * v0[i] + b * v[i] + bdt * rv
            uout[i] = a * u0[i] + b * u[i] + bdt * ru
    else:
        c = sm / dx
        for i in range(1, n):
            rv = (u[i + 1] - u[i - 1]) * inv2 + c * (v[i] - v[i - 1])
            ru = (p[i - 1] - p[i + 1]) * inv2 + (f[i] - f[i - 1]) * invdx2 + c * (u[i] - u[i - 1])
            vout[i] = a * v0[i] + b * v[i] + bdt * rv
            uout[i] = a * u0[i] + b * u[i] + bdt * ru
    if wall:
        rv0 = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2
        vout[0] = a * v0[0] + b * v[0] + bdt * rv0
    if has_src:
        for i in range(n + 1):
            vout[i] += bdt * sv[i]
            uout[i] += bdt * su[i]
    _impose_bc(vout, uout, vl, ul, vr, ur, wall)
    vmin = vout[0]
    umax = abs(uout[0])
    for i in range(n + 1):
        vmin = min(vmin, vout[i])
        umax = max(umax, abs(uout[i]))
    ext[0] = vmin
    ext[1] = umax
    if vmin > 0.0:
        return -1
    for i in range(n + 1):
        if not vout[i] > 0.0:
            return i
    return -1


@njit(cache=True)
def _cfl_terms(v, u):
    vmin = v[0]
    umax = abs(u[0])
    for i in range(v.shape[0]):
        vmin = min(vmin, v[i])
        umax = max(umax, abs(u[i]))
    return vmin, umax


# ---------------------------------------------------------------------------
# public operations

Source = Callable[[float, np.ndarray], tuple]


def semidiscrete_rhs(problem: Problem, state: State):
    """Tendencies (dv/dt, du/dt) at every node; Dirichlet rows are zero."""
    state.check(problem.grid)
    dv = np.empty_like(state.v)
    du = np.empty_like(state.u)
    _rhs(state.v, state.u, problem.grid.dx, problem.law.gamma, problem.sigma_minus,
         problem.kind == IMPERMEABLE, dv, du, np.empty_like(dv), np.empty_like(dv))
    return dv, du


def cfl_dt(problem: Problem, state: State, cfl_number: float = 0.4) -> float:
    vmin, umax = _cfl_terms(state.v, state.u)
    return _cfl_from_extrema(problem, vmin, umax, cfl_number)


def _cfl_from_extrema(problem, vmin, umax, cfl_number):
    dx = problem.grid.dx
    g = problem.law.gamma
    if not vmin > 0:
        raise StateInvalidError("specific volume must be positive")
    c_max = math.sqrt(g) * vmin ** (-(g + 1.0) / 2.0)
    return cfl_number * min(dx * dx * vmin / 2.0, dx / (umax + abs(problem.sigma_minus) + c_max))


class _Workspace:
    def __init__(self, n):
        self.dv = np.empty(n)
        self.du = np.empty(n)
        self.p = np.empty(n)
        self.f = np.empty(n)
        self.ext = np.empty(2)
        self.empty = np.empty(0)


def _stages(problem, state, dt, source, ws, stage_hook=None):
    """Heun step; ``stage_hook(v1, u1)`` is called with the intermediate stage."""
    bc = problem.bc
    wall = problem.kind == IMPERMEABLE
    args = (problem.grid.dx, problem.law.gamma, problem.sigma_minus, wall)
    v, u = state.v, state.u
    n = v.shape[0]
    v1 = np.empty(n)
    u1 = np.empty(n)
    if source is not None:
        sv, su = source(state.t, problem.grid.nodes)
        has = True
    else:
        sv = su = ws.empty
        has = False
    bad = _stage(v, u, v, u, 0.0, 1.0, dt, *args, sv, su, has,
                 bc.v_left, bc.u_left, bc.v_right, bc.u_right, ws.p, ws.f, v1, u1, ws.ext)
    if bad >= 0:
        raise BlowUpError(state.t + dt, bad)
    if stage_hook is not None:
        stage_hook(v1, u1)
    if source is not None:
        sv, su = source(state.t + dt, problem.grid.nodes)
    v2 = np.empty(n)
    u2 = np.empty(n)
    bad = _stage(v1, u1, v, u, 0.5, 0.5, dt, *args, sv, su, has,
                 bc.v_left, bc.u_left, bc.v_right, bc.u_right, ws.p, ws.f, v2, u2, ws.ext)
    if bad >= 0:
        raise BlowUpError(state.t + dt, bad)
    return State(state.t + dt, v2, u2)


def step(problem: Problem, state: State, dt: float, source: Source | None = None) -> State:
    """One Heun step. ``source(t, x) -> (s_v, s_u)`` adds forcing (used for manufactured solutions)."""
    if dt < 0:
        raise InvalidInputError("dt must be nonnegative")
    if dt == 0:
        return State(state.t, state.v.copy(), state.u.copy())
    return _stages(problem, state, dt, source, _Workspace(state.v.shape[0]))


@dataclass(frozen=True)
class StepEvent:
    """Solver state at one accepted step, handed to observers."""
    n: int
    t: float
    state: State
    X: float
    Xdot: float
    is_output: bool
    is_final: bool = False


@dataclass
class RunRecord:
    final_state: State | None = None
    steps: int = 0
    times: list = field(default_factory=list)
    shifts: list = field(default_factory=list)
    rates: list = field(default_factory=list)
    output_steps: list = field(default_factory=list)
    outputs: list = field(default_factory=list)   # per-output results returned by observers
    snapshots: list = field(default_factory=list)  # StepEvents at output steps (when kept)

    def shift_history(self):
        return np.array(self.times), np.array(self.shifts), np.array(self.rates)


def run(problem: Problem, config: SolverConfig, initial: State, shift=None,
        observers: Sequence = (), keep_snapshots: bool = False, max_steps: int | None = None) -> RunRecord:
    """Advance to t_end, co-integrating the shift with the same Heun stages.

    ``shift`` provides ``rate(v, u, X, t)``. Each observer is called with every
    StepEvent; whatever it returns on output steps is appended to
    ``record.outputs``.
    """
    initial.check(problem.grid)
    rec = RunRecord()
    ws = _Workspace(problem.grid.size)
    state = initial
    X = 0.0
    n = 0
    t_end = config.t_end
    stride = config.output_stride

    def emit(state, X, rate, final):
        out = final or (n % stride == 0)
        ev = StepEvent(n, state.t, state, X, rate, out, final)
        rec.times.append(state.t)
        rec.shifts.append(X)
        rec.rates.append(rate)
        if out:
            rec.output_steps.append(n)
            if keep_snapshots:
                rec.snapshots.append(ev)
        results = [obs(ev) for obs in observers]
        if out:
            rec.outputs.append(results)

    rate = shift.rate(state.v, state.u, X, state.t) if shift is not None else 0.0
    vmin, umax = _cfl_terms(state.v, state.u)
    try:
        while state.t < t_end - 1e-12 * max(1.0, t_end):
            emit(state, X, rate, False)
            dt = min(_cfl_from_extrema(problem, vmin, umax, config.cfl_number), t_end - state.t)
            if shift is not None:
                stage_rate = []
                X1 = X + dt * rate
                hook = lambda v1, u1: stage_rate.append(shift.rate(v1, u1, X1, state.t + dt))
                new = _stages(problem, state, dt, None, ws, hook)
                X = X + 0.5 * dt * (rate + stage_rate[0])
            else:
                new = _stages(problem, state, dt, None, ws)
            state = new
            vmin, umax = ws.ext[0], ws.ext[1]
            n += 1
            if state.t > t_end:
                state = State(t_end, state.v, state.u)
            rate = shift.rate(state.v, state.u, X, state.t) if shift is not None else 0.0
            if max_steps is not None and n >= max_steps:
                break
    except BlowUpError as err:
        rec.final_state = state
        rec.steps = n
        err.record = rec
        raise
    emit(state, X, rate, True)
    rec.final_state = state
    rec.steps = n
    return rec
