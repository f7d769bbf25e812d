"""Functionals of a solver state measured against the shifted shock profile.

Differences v - v~ and u - u~ are formed through the tabulated deviations
from the end states, so exponentially small perturbations near the boundary
keep their relative precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .gas_model import GasLaw, dpressure, pressure_difference, relative_energy, relative_pressure
from .halfline_solver import Grid, InvalidInputError, State, StateInvalidError, StepEvent, Problem
from .shift_weight import WeightParams, ShiftState, weight_value, y_coordinates
from .shock_profile import ShockProfile, IMPERMEABLE, INFLOW


# ---------------------------------------------------------------------------
# stencils shared with the solver

def ddx(f, dx):
    """Central first derivative with second-order one-sided ends."""
    return np.gradient(f, dx, edge_order=2)


def d2dx2(f, dx):
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / dx ** 2
    out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / dx ** 2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / dx ** 2
    return out


def _trap(f, dx):
    return float(np.trapezoid(f, dx=dx))


# ---------------------------------------------------------------------------
# pointwise fields

class Fields(NamedTuple):
    x: np.ndarray
    v: np.ndarray
    u: np.ndarray
    vt: np.ndarray
    ut: np.ndarray
    vt_x: np.ndarray
    ut_x: np.ndarray
    ut_xx: np.ndarray
    wv: np.ndarray      # v - v~
    wu: np.ndarray      # u - u~
    dp: np.ndarray      # p(v) - p(v~)
    q_rel: np.ndarray   # Q(v|v~)
    p_rel: np.ndarray   # p(v|v~)
    a: np.ndarray
    a_x: np.ndarray
    dev_minus: np.ndarray


def _zeta(grid_or_x, params: WeightParams, t, X):
    x = grid_or_x.nodes if isinstance(grid_or_x, Grid) else np.asarray(grid_or_x, dtype=float)
    return x, params.zeta(x, t, X)


def perturbation_fields(v, u, x, profile: ShockProfile, params: WeightParams, t: float, X: float) -> Fields:
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(~(v > 0)):
        raise StateInvalidError("specific volume must be positive")
    e = profile.end_states
    law = GasLaw(e.gamma)
    x, z = _zeta(x, params, t, X)
    s = profile.sample(z)
    left = s.dev_minus <= s.dev_plus
    wv = np.where(left, (v - e.v_minus) - s.dev_minus, (v - e.v_plus) + s.dev_plus)
    wu = np.where(left, (u - e.u_minus) + e.sigma * s.dev_minus, (u - e.u_plus) - e.sigma * s.dev_plus)
    dp = np.asarray(pressure_difference(law, v, s.v, dvw=wv))
    q = np.asarray(relative_energy(law, v, s.v, dvw=wv))
    pr = np.asarray(relative_pressure(law, v, s.v, dvw=wv))
    rd = math.sqrt(params.delta)
    a = weight_value(e.sigma, s.dev_minus, params.delta)
    a_x = -s.du / rd
    return Fields(x, v, u, s.v, s.u, s.dv, s.du, s.ddu, wv, wu, dp, q, pr, a, a_x, s.dev_minus)


def relative_entropy_field(state: State, profile: ShockProfile, params: WeightParams, X: float,
                           grid: Grid) -> np.ndarray:
    """eta(U|U~) = |u-u~|^2/2 + Q(v|v~) at every node."""
    _compatible(state, grid)
    f = perturbation_fields(state.v, state.u, grid, profile, params, state.t, X)
    return 0.5 * f.wu ** 2 + f.q_rel


def weighted_entropy(state: State, profile: ShockProfile, params: WeightParams, X: float,
                     grid: Grid) -> float:
    f = perturbation_fields(state.v, state.u, grid, profile, params, state.t, X)
    return _trap(f.a * (0.5 * f.wu ** 2 + f.q_rel), grid.dx)


def _compatible(state: State, grid: Grid):
    if state.v.shape[0] != grid.size:
        raise InvalidInputError("state and grid are incompatible")


# ---------------------------------------------------------------------------
# term breakdown

@dataclass(frozen=True)
class TermBreakdown:
    t: float
    X: float
    xdot: float
    weighted_entropy: float
    Y: float
    jbad: tuple
    jgood: tuple
    P: float
    b: tuple
    g1: float
    g2: float
    d_visc: float
    gs: float
    dv1: float
    du1: float
    du2: float
    y_parts: tuple

    @property
    def identity_terms(self) -> tuple:
        """Signed contributions to d/dt of the weighted entropy."""
        return (self.xdot * self.Y,) + tuple(self.jbad) + tuple(-j for j in self.jgood) + (self.P,)

    @property
    def identity_rhs(self) -> float:
        return float(sum(self.identity_terms))

    def row(self) -> dict:
        r = {"weighted_entropy": self.weighted_entropy, "Y": self.Y}
        for i, v in enumerate(self.jbad, 1):
            r[f"jbad{i}"] = v
        for i, v in enumerate(self.jgood, 1):
            r[f"jgood{i}"] = v
        r["P"] = self.P
        for i, v in enumerate(self.b, 1):
            r[f"B{i}"] = v
        r.update(G1=self.g1, G2=self.g2, D=self.d_visc, GS=self.gs, Dv1=self.dv1,
                 Du1=self.du1, Du2=self.du2)
        for i, v in enumerate(self.y_parts, 1):
            r[f"Y{i}"] = v
        return r


def _kind_of(params: WeightParams) -> str:
    return IMPERMEABLE if params.sigma_minus == 0.0 else INFLOW


def boundary_term(f: Fields, params: WeightParams, dx: float, wu_x0: float | None = None) -> float:
    """Boundary contribution at x = 0 from the integrations by parts.

    General form a[(u-u~)(p-p~) - s/2 (u-u~)^2 - s Q(v|v~) - (u-u~)(u-u~)_x / v
    + (u-u~)(v-v~) u~_x/(v v~)] with s = sigma_minus; at a wall (s = 0, u = 0)
    it reduces to the impermeable expression.
    """
    sm = params.sigma_minus
    if wu_x0 is None:
        wu_x0 = (-3 * f.wu[0] + 4 * f.wu[1] - f.wu[2]) / (2 * dx)
    a, wu, wv, v, vt = f.a[0], f.wu[0], f.wv[0], f.v[0], f.vt[0]
    return float(a * (wu * f.dp[0] - 0.5 * sm * wu * wu - sm * f.q_rel[0]
                      - wu * wu_x0 / v + wu * wv * f.ut_x[0] / (v * vt)))


def term_breakdown(state: State, profile: ShockProfile, params: WeightParams, shift: ShiftState,
                   kind: str, grid: Grid, b_constant: float = 1.0) -> TermBreakdown:
    """Every integral of the weighted relative-entropy identity and its good/bad split.

    ``b_constant`` is the generic constant in front of the cubic-order pressure
    terms B5 and B6.
    """
    _compatible(state, grid)
    if kind != _kind_of(params):
        raise InvalidInputError(f"weight parameters do not describe a {kind} problem")
    dx = grid.dx
    law = GasLaw(params.gamma)
    X = shift.X
    f = perturbation_fields(state.v, state.u, grid, profile, params, state.t, X)
    sig = params.sigma
    cs = params.c_star
    a, ax, wu, wv, dp = f.a, f.a_x, f.wu, f.wv, f.dp
    v, vt = f.v, f.vt
    wu_x = ddx(state.u, dx) - f.ut_x
    wu_xx = d2dx2(state.u, dx) - f.ut_xx
    pt_x = np.asarray(dpressure(law, vt)) * f.vt_x   # p(v~)_x
    eta = 0.5 * wu ** 2 + f.q_rel

    went = _trap(a * eta, dx)
    Y = -_trap(ax * eta, dx) + _trap(a * (f.ut_x * wu - pt_x * wv), dx)
    jbad = (
        _trap(ax * dp * wu, dx),
        -_trap(a * f.ut_x * f.p_rel, dx),
        -_trap(ax * wu / v * wu_x, dx),
        _trap(ax * wu * wv * f.ut_x / (v * vt), dx),
        _trap(a * wu_x * wv * f.ut_x / (v * vt), dx),
    )
    jgood = (
        0.5 * sig * _trap(ax * wu ** 2, dx),
        sig * _trap(ax * f.q_rel, dx),
        _trap(a / v * wu_x ** 2, dx),
    )
    P = boundary_term(f, params, dx, wu_x[0])
    inv4c = 1.0 / (4.0 * cs) if cs != 0 else math.inf
    b = (
        inv4c * _trap(ax * wu ** 2, dx),
        jbad[2],
        jbad[3],
        jbad[4],
        b_constant * params.delta * _trap(ax * dp ** 2, dx),
        b_constant * _trap(ax * np.abs(dp) ** 3, dx),
    )
    g1 = cs * _trap(ax * (dp - wu / (2 * cs)) ** 2, dx) if cs != 0 else math.nan
    g2 = jgood[0]
    d_visc = jgood[2]
    gs = _trap(np.abs(f.ut_x) * wu ** 2, dx)
    dpx = ddx(state.v ** (-params.gamma), dx) - pt_x
    dv1 = _trap(dpx ** 2, dx)
    du1 = _trap(wu_x ** 2, dx)
    du2 = _trap(wu_xx ** 2, dx)
    y_parts = (
        _trap(a * f.ut_x * wu, dx),
        _trap(a * pt_x * wu, dx) / sig,
        -0.5 * _trap(ax * (wu - 2 * cs * dp) * (wu + 2 * cs * dp), dx),
        -2 * cs * cs * _trap(ax * dp ** 2, dx) - _trap(ax * f.q_rel, dx),
        -_trap(a * pt_x * (wv + (2 * cs / sig) * dp), dx),
        _trap(a * pt_x * (2 * cs / sig) * (dp - wu / (2 * cs)), dx) if cs != 0 else math.nan,
    )
    return TermBreakdown(state.t, X, shift.Xdot, went, Y, jbad, jgood, P, b, g1, g2, d_visc,
                         gs, dv1, du1, du2, y_parts)


# ---------------------------------------------------------------------------
# identity residual

class EntropySample(NamedTuple):
    t: float
    weighted_entropy: float


def entropy_identity_residual(snapshots: Sequence, floor: float = 1e-30) -> float:
    """Normalized residual of d/dt int a eta = X' Y + J_bad - J_good + P.

    ``snapshots`` are consecutive steps exposing ``t`` and
    ``weighted_entropy``; those that are TermBreakdowns also supply the
    right-hand side. Three snapshots give a centered derivative at the middle
    one (whose terms are used); two give the difference quotient compared
    with the mean of the available right-hand sides.
    """
    if len(snapshots) < 2:
        raise InvalidInputError("need at least two consecutive snapshots")
    with_terms = [s for s in snapshots if isinstance(s, TermBreakdown)]
    if not with_terms:
        raise InvalidInputError("no snapshot carries the identity terms")
    if len(snapshots) >= 3:
        s0, s1, s2 = snapshots[-3:] if len(snapshots) > 3 else snapshots
        h0 = s1.t - s0.t
        h1 = s2.t - s1.t
        deriv = (-h1 / (h0 * (h0 + h1)) * s0.weighted_entropy
                 + (h1 - h0) / (h0 * h1) * s1.weighted_entropy
                 + h0 / (h1 * (h0 + h1)) * s2.weighted_entropy)
        ref = [s1] if isinstance(s1, TermBreakdown) else with_terms
    else:
        s0, s1 = snapshots
        deriv = (s1.weighted_entropy - s0.weighted_entropy) / (s1.t - s0.t)
        ref = with_terms
    rhs = sum(r.identity_rhs for r in ref) / len(ref)
    scale = max(max(abs(x) for r in ref for x in r.identity_terms), floor)
    return abs(deriv - rhs) / scale


# ---------------------------------------------------------------------------
# effective velocity

def effective_velocity(state: State, grid: Grid) -> np.ndarray:
    """h = u - (ln v)_x."""
    _compatible(state, grid)
    if np.any(~(state.v > 0)):
        raise StateInvalidError("specific volume must be positive")
    return state.u - ddx(np.log(state.v), grid.dx)


def h_entropy(state: State, profile: ShockProfile, params: WeightParams, X: float, grid: Grid) -> float:
    """int |h - h~|^2/2 + Q(v|v~) with h~ = u~ - v~'/v~ from the exact profile."""
    h = effective_velocity(state, grid)
    f = perturbation_fields(state.v, state.u, grid, profile, params, state.t, X)
    ht = f.ut - f.vt_x / f.vt
    return _trap(0.5 * (h - ht) ** 2 + f.q_rel, grid.dx)


# ---------------------------------------------------------------------------
# Poincare inequality

def poincare_gap(y, f):
    """(lhs, rhs) of the weighted Poincare inequality for piecewise-linear f on [y0, yn].

    lhs = int |f - mean f|^2, rhs = 1/2 int (y-c)(d-y)|f'|^2, both exact per cell.
    """
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.shape != f.shape or y.size < 2:
        raise InvalidInputError("need at least two samples with matching abscissae")
    c, d = y[0], y[-1]
    if not c < d:
        raise InvalidInputError("interval needs c < d")
    h = np.diff(y)
    if np.any(h <= 0):
        raise InvalidInputError("abscissae must be strictly increasing")
    mean = np.sum(0.5 * (f[:-1] + f[1:]) * h) / (d - c)
    g0 = f[:-1] - mean
    g1 = f[1:] - mean
    lhs = float(np.sum(h * (g0 * g0 + g0 * g1 + g1 * g1) / 3.0))
    slope = (f[1:] - f[:-1]) / h
    A = y[:-1] - c
    B = y[1:] - c
    D = d - c
    # int_A^B s (D - s) ds, factored to avoid cancellation
    wint = (B - A) * (D * (A + B) / 2.0 - (A * A + A * B + B * B) / 3.0)
    rhs = float(0.5 * np.sum(slope ** 2 * wint))
    return lhs, rhs


# ---------------------------------------------------------------------------
# convergence metrics and the R1 inequality

@dataclass(frozen=True)
class ConvergenceMetrics:
    sup_perturbation: float
    xdot_abs: float
    x_over_t: float
    h1_perturbation: float


def convergence_metrics(state: State, profile: ShockProfile, params: WeightParams, shift: ShiftState,
                        grid: Grid, t_floor: float = 1.0) -> ConvergenceMetrics:
    """sup |(v,u) - (v~,u~)|, |X'|, |X|/t (zero for t <= t_floor) and the discrete H1 norm."""
    f = perturbation_fields(state.v, state.u, grid, profile, params, state.t, shift.X)
    sup = float(np.max(np.hypot(f.wv, f.wu)))
    dx = grid.dx
    wv_x = ddx(state.v, dx) - f.vt_x
    wu_x = ddx(state.u, dx) - f.ut_x
    h1 = math.sqrt(_trap(f.wv ** 2 + f.wu ** 2 + wv_x ** 2 + wu_x ** 2, dx))
    xt = abs(shift.X) / state.t if state.t > t_floor else 0.0
    return ConvergenceMetrics(sup, abs(shift.Xdot), xt, h1)


def r1_inequality_check(breakdown: TermBreakdown, params: WeightParams) -> float:
    """margin = -C1 G^S - R1 with R1 = -(delta/2M) X'^2 + B1 - G2 - 3/4 D.

    A nonnegative margin means the inequality holds. Without a positive C*
    the quadratic bound behind B1 does not exist and the margin is NaN.
    """
    if not params.c_star > 0:
        return math.nan
    r1 = (-(params.delta / (2 * params.big_m)) * breakdown.xdot ** 2 + breakdown.b[0]
          - breakdown.g2 - 0.75 * breakdown.d_visc)
    return -params.c1 * breakdown.gs - r1


# ---------------------------------------------------------------------------
# run observer

DIAGNOSTIC_COLUMNS = (
    ["t", "X", "weighted_entropy", "Y"] + [f"jbad{i}" for i in range(1, 6)]
    + [f"jgood{i}" for i in range(1, 4)] + ["P"] + [f"B{i}" for i in range(1, 7)]
    + ["G1", "G2", "D", "GS", "Dv1", "Du1", "Du2"] + [f"Y{i}" for i in range(1, 7)]
    + ["sup_pert", "xdot", "x_over_t", "h1_pert", "y0", "r1_margin",
       "identity_residual", "cumulative_abs_P", "min_eta"]
)


@dataclass
class DiagnosticsRecorder:
    """Observer computing the diagnostic row at every output step.

    The identity residual needs the weighted entropy at the neighbouring
    steps, so a row is completed one step after its output step (the final
    output uses the preceding step instead). The boundary term is accumulated
    every ``p_stride`` steps (and at outputs) with the trapezoid rule in time.
    """
    problem: Problem
    params: WeightParams
    t_floor: float = 1.0
    b_constant: float = 1.0
    p_stride: int = 1
    rows: list = field(default_factory=list)
    cumulative_abs_P: float = 0.0
    hard_violations: list = field(default_factory=list)
    _prev: StepEvent | None = None
    _pending: tuple | None = None
    _last_P: float | None = None
    _last_t: float | None = None

    def _P(self, ev: StepEvent) -> float:
        dx = self.problem.grid.dx
        x = self.problem.grid.nodes[:3]
        f = perturbation_fields(ev.state.v[:3], ev.state.u[:3], x, self.problem.profile,
                                self.params, ev.t, ev.X)
        return boundary_term(f, self.params, dx)

    def _breakdown(self, ev: StepEvent) -> TermBreakdown:
        sh = ShiftState(ev.t, ev.X, ev.Xdot)
        return term_breakdown(ev.state, self.problem.profile, self.params, sh, self.problem.kind,
                              self.problem.grid, self.b_constant)

    def _entropy(self, ev: StepEvent) -> EntropySample:
        return EntropySample(ev.t, weighted_entropy(ev.state, self.problem.profile, self.params,
                                                    ev.X, self.problem.grid))

    def __call__(self, ev: StepEvent):
        if ev.is_output or ev.n % self.p_stride == 0:
            P = self._P(ev)
            if self._last_t is not None:
                self.cumulative_abs_P += 0.5 * (abs(P) + abs(self._last_P)) * (ev.t - self._last_t)
            self._last_P, self._last_t = P, ev.t
        if self._pending is not None:
            prev_ev, center_ev, bd = self._pending
            seq = ([prev_ev] if prev_ev is not None else []) + [bd, self._entropy(ev)]
            self._finish(center_ev, bd, entropy_identity_residual(seq))
            self._pending = None
        if ev.is_output:
            bd = self._breakdown(ev)
            if ev.is_final:
                if self._prev is not None:
                    seq = [self._breakdown(self._prev), bd]
                    res = entropy_identity_residual(seq)
                else:
                    res = 0.0 if bd.weighted_entropy == 0 else math.nan
                self._finish(ev, bd, res)
            else:
                prev = self._entropy(self._prev) if self._prev is not None else None
                self._pending = (prev, ev, bd)
        self._prev = ev
        return None

    def flush(self):
        """Complete a row still waiting for its successor (run stopped early)."""
        if self._pending is not None:
            prev_ev, center_ev, bd = self._pending
            res = entropy_identity_residual([prev_ev, bd]) if prev_ev is not None else math.nan
            self._finish(center_ev, bd, res)
            self._pending = None

    def _finish(self, ev: StepEvent, bd: TermBreakdown, residual: float):
        pb = self.problem
        sh = ShiftState(ev.t, ev.X, ev.Xdot)
        m = convergence_metrics(ev.state, pb.profile, self.params, sh, pb.grid, self.t_floor)
        y0, _ = y_coordinates(pb.profile, self.params, ev.X, ev.t)
        eta = relative_entropy_field(ev.state, pb.profile, self.params, ev.X, pb.grid)
        min_eta = float(eta.min())
        row = {"t": ev.t, "X": ev.X}
        row.update(bd.row())
        row.update(sup_pert=m.sup_perturbation, xdot=ev.Xdot, x_over_t=m.x_over_t,
                   h1_pert=m.h1_perturbation, y0=y0, r1_margin=r1_inequality_check(bd, self.params),
                   identity_residual=residual, cumulative_abs_P=self.cumulative_abs_P,
                   min_eta=min_eta)
        self._check_hard(row)
        self.rows.append(row)

    def _check_hard(self, row):
        tol = 1e-13
        scale = max(1.0, abs(row["weighted_entropy"]))
        for k in ("jgood1", "jgood2", "jgood3", "G2", "D", "GS", "Dv1", "Du1", "Du2"):
            if row[k] < -tol * scale:
                self.hard_violations.append((row["t"], k, row[k]))
        if row["min_eta"] < -tol:
            self.hard_violations.append((row["t"], "eta", row["min_eta"]))
        if self.params.c_star > 0 and row["G1"] < -tol * scale:
            self.hard_violations.append((row["t"], "G1", row["G1"]))

    def column(self, name):
        return np.array([r[name] for r in self.rows])
