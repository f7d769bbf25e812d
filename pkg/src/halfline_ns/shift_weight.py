"""Weight function, contraction constants and the shift ODE."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .gas_model import GasLaw, pressure, dpressure
from .halfline_solver import Grid, InvalidInputError, State
from .shock_profile import EndStates, ShockProfile, INFLOW


class WeightBoundWarning(UserWarning):
    """sup a = 1 + sqrt(delta) reaches 3/2."""


class InadmissibleStrengthError(ValueError):
    """The shock is too strong for the contraction constant C* to stay positive."""


class ShiftForm(enum.Enum):
    """Which perturbation multiplies the pressure-gradient integral of the shift ODE.

    VELOCITY uses u - u~, so that the rate equals -(M/delta)(Y1 + Y2) of the
    Y-decomposition. VOLUME uses v - v~ as printed in the source formula.
    """
    VELOCITY = "velocity"
    VOLUME = "volume"


@dataclass(frozen=True)
class WeightParams:
    delta: float
    beta: float
    sigma: float
    sigma_minus: float
    u_minus: float
    v_minus: float
    gamma: float
    sigma_l: float
    alpha_l: float
    big_m: float
    c_star: float
    weight_bound_flag: bool = False
    cstar_admissible: bool = True

    @classmethod
    def from_end_states(cls, end: EndStates, beta: float, strict: bool = True) -> "WeightParams":
        """Constants from (gamma, v_minus, delta).

        With ``strict`` a nonpositive C* raises; otherwise it is recorded in
        ``cstar_admissible`` so negative-control runs can proceed.
        """
        law = GasLaw(end.gamma)
        g = end.gamma
        delta = end.delta
        if not delta > 0:
            raise InvalidInputError("weight needs a shock of positive strength")
        pm = pressure(law, end.v_minus)
        sigma_l = math.sqrt(-dpressure(law, end.v_minus))
        alpha_l = (g + 1.0) / (2.0 * g * sigma_l * pm)
        big_m = 1.5 * sigma_l ** 3 * alpha_l
        c_star = 0.5 * (1.0 / sigma_l - math.sqrt(delta) * (g + 1.0) / (g * pm))
        flag = 1.0 + math.sqrt(delta) >= 1.5
        if flag:
            warnings.warn(f"delta={delta}: sup of the weight reaches 1 + sqrt(delta) >= 3/2",
                          WeightBoundWarning, stacklevel=2)
        ok = c_star > 0
        if not ok and strict:
            raise InadmissibleStrengthError(f"C* = {c_star:.4g} <= 0 at delta = {delta}")
        sm = end.sigma_minus if end.problem_kind == INFLOW else 0.0
        return cls(delta, float(beta), end.sigma, sm, end.u_minus, end.v_minus, g,
                   sigma_l, alpha_l, big_m, c_star, flag, ok)

    @property
    def front_speed(self) -> float:
        return self.sigma - self.sigma_minus

    @property
    def c1(self) -> float:
        return self.sigma_l ** 3 * self.alpha_l / 8.0

    def zeta(self, x, t: float, X: float):
        return np.asarray(x, dtype=float) - (self.front_speed * t + X + self.beta)


def weight_value(sigma, dev_minus, delta):
    """1 + sqrt(delta) * f with f = sigma (v~ - v_-) / delta clipped to [0, 1] against rounding."""
    return 1.0 + math.sqrt(delta) * np.clip(sigma * np.asarray(dev_minus) / delta, 0.0, 1.0)


def weight_eval(profile: ShockProfile, params: WeightParams, zeta):
    """(a, a') with a = 1 + (u_- - u~)/sqrt(delta) and a' = -u~'/sqrt(delta)."""
    s = profile.sample(zeta)
    e = profile.end_states
    rd = math.sqrt(params.delta)
    a = weight_value(e.sigma, s.dev_minus, params.delta)
    ap = -np.asarray(s.du) / rd
    if np.ndim(zeta) == 0:
        return float(a), float(ap)
    return a, ap


def _check_grid(state: State, grid: Grid):
    if state.v.shape[0] != grid.size:
        raise InvalidInputError("state and grid are incompatible")


def shift_rhs(state: State, profile: ShockProfile, params: WeightParams, X: float, t: float,
              grid: Grid, form: ShiftForm = ShiftForm.VELOCITY) -> float:
    """Shift rate by trapezoid quadrature with direct profile evaluation."""
    _check_grid(state, grid)
    x = grid.nodes
    s = profile.sample(params.zeta(x, t, X))
    law = GasLaw(params.gamma)
    a = weight_value(params.sigma, s.dev_minus, params.delta)
    du = state.u - s.u
    dp_x = np.asarray(dpressure(law, s.v)) * s.dv
    second = du if form is ShiftForm.VELOCITY else state.v - s.v
    integrand = a * s.du * du + a * dp_x * second / params.sigma
    return float(-(params.big_m / params.delta) * np.trapezoid(integrand, dx=grid.dx))


@njit(cache=True)
def _lagrange4(t):
    # weights for f(-1), f(0), f(1), f(2) at local position t in [0, 1)
    w0 = -t * (t - 1.0) * (t - 2.0) / 6.0
    w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w2 = -(t + 1.0) * t * (t - 2.0) / 2.0
    w3 = (t + 1.0) * t * (t - 1.0) / 6.0
    return w0, w1, w2, w3


@njit(cache=True)
def _shift_quadrature(v, u, dx, offset, tv, tu, w1, w2, velocity_form):
    """Trapezoid sum of w1*(u-u~) + w2*(u-u~ or v-v~) with tables sampled at spacing dx.

    Node i sits at table position i - offset. In the velocity form w1 already
    holds w1 + w2 and tv, w2 are unused.
    """
    n = v.shape[0] - 1
    m = math.floor(offset)
    loc = 1.0 - (offset - m)
    if loc >= 1.0:
        loc -= 1.0
        m -= 1
    c0, c1, c2, c3 = _lagrange4(loc)
    ntab = tu.shape[0]
    # table index j = i - m - 1 needs j - 1 >= 0 and j + 2 <= ntab - 1
    i_lo = max(m + 2, 0)
    i_hi = min(ntab + m - 2, n)
    if i_hi < i_lo:
        return 0.0
    acc = 0.0
    if velocity_form:
        for i in range(i_lo, i_hi + 1):
            j = i - m - 1
            ut = c0 * tu[j - 1] + c1 * tu[j] + c2 * tu[j + 1] + c3 * tu[j + 2]
            a1 = c0 * w1[j - 1] + c1 * w1[j] + c2 * w1[j + 1] + c3 * w1[j + 2]
            acc += a1 * (u[i] - ut)
    else:
        for i in range(i_lo, i_hi + 1):
            j = i - m - 1
            vt = c0 * tv[j - 1] + c1 * tv[j] + c2 * tv[j + 1] + c3 * tv[j + 2]
            ut = c0 * tu[j - 1] + c1 * tu[j] + c2 * tu[j + 1] + c3 * tu[j + 2]
            a1 = c0 * w1[j - 1] + c1 * w1[j] + c2 * w1[j + 1] + c3 * w1[j + 2]
            a2 = c0 * w2[j - 1] + c1 * w2[j] + c2 * w2[j + 1] + c3 * w2[j + 2]
            acc += a1 * (u[i] - ut) + a2 * (v[i] - vt)
    # trapezoid end corrections
    for k in range(2):
        i = i_lo if k == 0 else i_hi
        if k == 1 and i_hi == i_lo:
            break
        if i == 0 or i == n:
            j = i - m - 1
            ut = c0 * tu[j - 1] + c1 * tu[j] + c2 * tu[j + 1] + c3 * tu[j + 2]
            a1 = c0 * w1[j - 1] + c1 * w1[j] + c2 * w1[j + 1] + c3 * w1[j + 2]
            corr = a1 * (u[i] - ut)
            if not velocity_form:
                vt = c0 * tv[j - 1] + c1 * tv[j] + c2 * tv[j + 1] + c3 * tv[j + 2]
                a2 = c0 * w2[j - 1] + c1 * w2[j] + c2 * w2[j + 1] + c3 * w2[j + 2]
                corr += a2 * (v[i] - vt)
            acc -= 0.5 * corr
    return acc * dx


@dataclass
class ShiftIntegrator:
    """Fast shift rate for the time loop.

    The integrands a u~' and a p(v~)'/sigma are tabulated once at the solver's
    spacing over the window where they exceed ``cutoff`` times their peak, and
    evaluated by 4-point Lagrange interpolation (the offset between the table
    and the grid is the same for every node).
    """
    profile: ShockProfile
    params: WeightParams
    grid: Grid
    form: ShiftForm = ShiftForm.VELOCITY
    cutoff: float = 1e-18

    def __post_init__(self):
        dx = self.grid.dx
        prof = self.profile
        hw = prof.half_width
        k = np.arange(-int(hw / dx), int(hw / dx) + 1)
        z = k * dx
        s = prof.sample(z)
        mag = np.abs(s.dv)
        keep = np.nonzero(mag >= self.cutoff * mag.max())[0]
        lo, hi = max(keep[0] - 3, 0), min(keep[-1] + 3, len(z) - 1)
        z = z[lo:hi + 1]
        s = prof.sample(z)
        law = GasLaw(self.params.gamma)
        a = weight_value(self.params.sigma, s.dev_minus, self.params.delta)
        self._z0 = float(z[0])
        self._tv = np.ascontiguousarray(s.v)
        self._tu = np.ascontiguousarray(s.u)
        w1 = a * s.du
        w2 = a * np.asarray(dpressure(law, s.v)) * s.dv / self.params.sigma
        if self.form is ShiftForm.VELOCITY:
            w1 = w1 + w2
        self._w1 = np.ascontiguousarray(w1)
        self._w2 = np.ascontiguousarray(w2)
        self._scale = -self.params.big_m / self.params.delta

    def rate(self, v, u, X, t) -> float:
        dx = self.grid.dx
        # node i has zeta = i dx - c; table k has zeta = z0 + k dx, so i = k + (z0 + c)/dx
        c = self.params.front_speed * t + X + self.params.beta
        offset = (self._z0 + c) / dx
        q = _shift_quadrature(v, u, dx, offset, self._tv, self._tu, self._w1, self._w2,
                              self.form is ShiftForm.VELOCITY)
        return self._scale * q


@dataclass
class ShiftState:
    t: float = 0.0
    X: float = 0.0
    Xdot: float = 0.0
    history: list = field(default_factory=list)

    def __post_init__(self):
        if not self.history:
            self.history.append((self.t, self.X, self.Xdot))


def advance_shift(shift: ShiftState, rate: float, dt: float, rate_stage2: float | None = None) -> ShiftState:
    """Heun update X + dt (r1 + r2)/2; a single rate means a constant rate."""
    if not dt > 0:
        raise InvalidInputError("dt must be positive")
    r2 = rate if rate_stage2 is None else rate_stage2
    X = shift.X + 0.5 * dt * (rate + r2)
    hist = list(shift.history)
    hist.append((shift.t + dt, X, r2))
    return ShiftState(shift.t + dt, X, r2, hist)


def y_coordinates(profile: ShockProfile, params: WeightParams, X: float, t: float, x=None):
    """(y0, y) with y(x) = (u_- - u~(zeta))/delta; y0 is the value at the boundary."""
    e = profile.end_states
    if x is None:
        x = np.array([0.0])
    z = params.zeta(np.concatenate([[0.0], np.atleast_1d(x)]), t, X)
    s = profile.sample(z)
    y = e.sigma * np.asarray(s.dev_minus) / params.delta
    y0 = float(y[0])
    if not 0.0 < y0 < 1.0:
        raise AssertionError(f"y0 = {y0} outside (0, 1)")
    return y0, y[1:]
