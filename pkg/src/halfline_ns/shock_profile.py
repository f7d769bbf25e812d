"""Rankine-Hugoniot closures and the viscous 2-shock profile.

The profile is stored as the logarithm of its distance to the nearer end
state, d_-(z) = v~ - v_- on the left half and d_+(z) = v_+ - v~ on the right
half. Both satisfy the same first-order equation

    (log d)' = -(v~/sigma) (sigma^2 + [p(v_end +- d) - p(v_end)] / (+-d)),

which keeps exponentially small tails (needed for boundary terms far from
the shock) at full relative precision.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .gas_model import GasLaw, DomainError, pressure, dpressure

IMPERMEABLE = "impermeable"
INFLOW = "inflow"
RH_TOL = 1e-10


class DegenerateShockError(ValueError):
    """No 2-shock exists for the requested data (zero or wrong-sign strength)."""


class InfeasibleStateError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class ProfileIntegrationError(RuntimeError):
    pass


class WidenDomainError(RuntimeError):
    """The tabulated tails have not reached the end states within tolerance."""


class TailFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class EndStates:
    v_minus: float
    u_minus: float
    v_plus: float
    u_plus: float
    sigma: float
    gamma: float
    problem_kind: str

    def __post_init__(self):
        if self.problem_kind not in (IMPERMEABLE, INFLOW):
            raise ValueError(f"unknown problem kind {self.problem_kind!r}")
        if not (0 < self.v_minus < self.v_plus):
            raise PreconditionError("entropy condition requires 0 < v_minus < v_plus")
        if not self.u_minus > self.u_plus:
            raise PreconditionError("entropy condition requires u_minus > u_plus")
        if not self.sigma > 0:
            raise PreconditionError("2-shock speed must be positive")
        if self.problem_kind == IMPERMEABLE and self.u_minus != 0.0:
            raise PreconditionError("impermeable problem needs u_minus = 0")
        if self.problem_kind == INFLOW and not self.u_minus > 0:
            raise PreconditionError("inflow problem needs u_minus > 0")
        r1, r2 = self.rh_residuals()
        if abs(r1) > RH_TOL or abs(r2) > RH_TOL:
            raise InfeasibleStateError(f"Rankine-Hugoniot residuals too large: {r1:.3e}, {r2:.3e}")

    @property
    def law(self) -> GasLaw:
        return GasLaw(self.gamma)

    @property
    def delta(self) -> float:
        return abs(self.u_plus - self.u_minus)

    @property
    def sigma_minus(self) -> float:
        return -self.u_minus / self.v_minus

    @property
    def front_speed(self) -> float:
        """Speed of the shock in the computational coordinate."""
        return self.sigma - self.sigma_minus

    def rh_residuals(self):
        pp = self.v_plus ** (-self.gamma)
        pm = self.v_minus ** (-self.gamma)
        r1 = -self.sigma * (self.v_plus - self.v_minus) - (self.u_plus - self.u_minus)
        r2 = -self.sigma * (self.u_plus - self.u_minus) + pp - pm
        return r1, r2


def impermeable_closure(r: float, v_plus: float, u_plus: float, gamma: float) -> float:
    """Residual of the wall closure in the ratio r = v_minus/v_plus."""
    return v_plus ** (1.0 - gamma) * (1.0 - r ** (-gamma)) * (1.0 - r) + u_plus ** 2


def solve_left_state_impermeable(v_plus: float, u_plus: float, law: GasLaw) -> EndStates:
    if not v_plus > 0:
        raise DomainError("v_plus must be positive")
    if not u_plus < 0:
        raise DegenerateShockError("impermeable 2-shock needs u_plus < 0 (entropy condition)")
    g = law.gamma
    f = lambda r: impermeable_closure(r, v_plus, u_plus, g)
    lo = 1.0
    # f(r) -> -inf as r -> 0 and f(1) = u_plus^2 > 0
    while f(lo) > 0:
        lo *= 0.5
        if lo < 1e-300:
            raise InfeasibleStateError("no root of the wall closure in (0, v_plus)")
    hi = 1.0
    r = brentq(f, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    v_minus = r * v_plus
    if not 0 < v_minus < v_plus:
        raise InfeasibleStateError("wall closure root outside (0, v_plus)")
    sigma = -u_plus / (v_plus - v_minus)
    return EndStates(v_minus, 0.0, v_plus, u_plus, sigma, g, IMPERMEABLE)


def is_subsonic(v: float, u: float, law: GasLaw) -> bool:
    if not v > 0:
        raise DomainError("specific volume must be positive")
    return abs(u) < math.sqrt(law.gamma) * v ** ((1.0 - law.gamma) / 2.0)


def shock_curve_inflow(v_minus: float, u_minus: float, v_plus: float, law: GasLaw) -> EndStates:
    if not v_minus > 0:
        raise DomainError("v_minus must be positive")
    if not v_plus > v_minus:
        raise PreconditionError("2-shock needs v_plus > v_minus")
    if not u_minus > 0:
        raise PreconditionError("inflow needs u_minus > 0")
    if not is_subsonic(v_minus, u_minus, law):
        raise PreconditionError("boundary state is not subsonic")
    dp = pressure(law, v_plus) - pressure(law, v_minus)
    sigma = math.sqrt(-dp / (v_plus - v_minus))
    u_plus = u_minus - sigma * (v_plus - v_minus)
    return EndStates(v_minus, u_minus, v_plus, u_plus, sigma, law.gamma, INFLOW)


# ---------------------------------------------------------------------------
# scalar kernels (numba) shared by profile evaluation, weights and diagnostics

@njit(cache=True)
def _pow_neg(v, gamma):
    # v^-gamma with a multiply-only path for integer exponents
    k = int(gamma)
    if k == gamma and 0 < k <= 8:
        r = v
        for _ in range(k - 1):
            r *= v
        return 1.0 / r
    return math.exp(-gamma * math.log(v))


@njit(cache=True)
def _dq(w, s, gamma):
    """(p(w+s) - p(w))/s, with the limit p'(w) at s = 0."""
    if s == 0.0:
        return -gamma * _pow_neg(w, gamma) / w
    return _pow_neg(w, gamma) * math.expm1(-gamma * math.log1p(s / w)) / s


@njit(cache=True)
def _logdev_slope(d, side, v_end, sigma, gamma):
    # side = -1: d = v - v_minus; side = +1: d = v_plus - v
    vt = v_end - side * d
    return -(vt / sigma) * (sigma * sigma + _dq(v_end, -side * d, gamma))


@njit(cache=True)
def _eval_point(z, z0, h, nh, tab_l, tab_ls, tab_r, tab_rs, vm, vp, um, sigma, gamma, out):
    """Fill out = (v, u, v', u', u'', d_minus, d_plus) at zeta = z."""
    dv = vp - vm
    k = (z - z0) / h  # table index relative to anchor
    if k <= -nh or k >= nh:
        if k <= -nh:
            out[0] = vm
            out[5] = 0.0
            out[6] = dv
        else:
            out[0] = vp
            out[5] = dv
            out[6] = 0.0
        out[1] = um - sigma * (out[0] - vm)
        out[2] = 0.0
        out[3] = 0.0
        out[4] = 0.0
        return
    if k < 0:
        side = -1.0
        kk = -k
        tab = tab_l
        tabs = tab_ls
        v_end = vm
        sgn = -1.0  # d log d / d|k| = -slope in zeta
    else:
        side = 1.0
        kk = k
        tab = tab_r
        tabs = tab_rs
        v_end = vp
        sgn = 1.0
    i = int(kk)
    if i >= nh:
        i = nh - 1
    t = kk - i
    y0 = tab[i]
    y1 = tab[i + 1]
    m0 = sgn * tabs[i] * h
    m1 = sgn * tabs[i + 1] * h
    t2 = t * t
    t3 = t2 * t
    L = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1
    d = math.exp(L)
    vt = v_end - side * d
    g = _logdev_slope(d, side, v_end, sigma, gamma)
    vz = -side * d * g
    hval = d * (sigma * sigma + _dq(v_end, -side * d, gamma)) * (-side)
    pprime = -gamma * _pow_neg(vt, gamma) / vt
    fprime = -(hval + vt * (sigma * sigma + pprime)) / sigma
    vzz = fprime * vz
    out[0] = vt
    if side < 0:
        out[5] = d
        out[6] = dv - d
        out[1] = um - sigma * d
    else:
        out[5] = dv - d
        out[6] = d
        out[1] = um - sigma * (dv - d)
    out[2] = vz
    out[3] = -sigma * vz
    out[4] = -sigma * vzz


@njit(cache=True)
def _eval_many(zs, z0, h, nh, tab_l, tab_ls, tab_r, tab_rs, vm, vp, um, sigma, gamma):
    n = zs.shape[0]
    res = np.empty((7, n))
    buf = np.empty(7)
    for j in range(n):
        _eval_point(zs[j], z0, h, nh, tab_l, tab_ls, tab_r, tab_rs, vm, vp, um, sigma, gamma, buf)
        for c in range(7):
            res[c, j] = buf[c]
    return res


class ProfileSample(NamedTuple):
    v: np.ndarray
    u: np.ndarray
    dv: np.ndarray
    du: np.ndarray
    ddu: np.ndarray
    dev_minus: np.ndarray  # v~ - v_minus
    dev_plus: np.ndarray   # v_plus - v~


@dataclass(frozen=True, eq=False)
class ShockProfile:
    end_states: EndStates
    anchor: float
    spacing: float
    n_half: int
    logdev_left: np.ndarray    # log d_-(anchor - k h), k = 0..n_half
    logdev_right: np.ndarray   # log d_+(anchor + k h)
    slope_left: np.ndarray     # d/dzeta log d_- at those points
    slope_right: np.ndarray

    @property
    def half_width(self) -> float:
        return self.n_half * self.spacing

    @property
    def zeta_grid(self) -> np.ndarray:
        return self.anchor + self.spacing * np.arange(-self.n_half, self.n_half + 1)

    @property
    def v_tilde(self) -> np.ndarray:
        e = self.end_states
        left = e.v_minus + np.exp(self.logdev_left[:0:-1])
        right = e.v_plus - np.exp(self.logdev_right)
        return np.concatenate([left, right])

    @property
    def u_tilde(self) -> np.ndarray:
        e = self.end_states
        dm = np.concatenate([np.exp(self.logdev_left[:0:-1]),
                             (e.v_plus - e.v_minus) - np.exp(self.logdev_right)])
        return e.u_minus - e.sigma * dm

    def kernel_args(self):
        e = self.end_states
        return (self.anchor, self.spacing, self.n_half, self.logdev_left, self.slope_left,
                self.logdev_right, self.slope_right, e.v_minus, e.v_plus, e.u_minus, e.sigma, e.gamma)

    def sample(self, zeta) -> ProfileSample:
        z = np.atleast_1d(np.asarray(zeta, dtype=float))
        res = _eval_many(z.ravel(), *self.kernel_args())
        shape = z.shape
        cols = [res[c].reshape(shape) for c in range(7)]
        if np.ndim(zeta) == 0:
            cols = [float(c[0]) for c in cols]
        return ProfileSample(*cols)


def eval_profile(profile: ShockProfile, zeta):
    """(v~, u~, v~', u~', u~'') at zeta; far-field constants outside the table."""
    s = profile.sample(zeta)
    return s.v, s.u, s.dv, s.du, s.ddu


def default_half_width(end: EndStates) -> float:
    return 60.0 / end.delta


def build_profile(end: EndStates, half_width: float | None = None, n: int | None = None,
                  anchor: float = 0.0, tail_tol: float = 1e-12, spacing: float | None = None,
                  residual_tol: float = 1e-6) -> ShockProfile:
    """Integrate the profile outward from the midpoint anchor and tabulate it.

    ``n`` is the total sample count (rounded up to odd); when omitted the
    samples are ``spacing`` apart, by default 0.05 shrunk for strong shocks.
    """
    if not end.delta > 0:
        raise PreconditionError("profile needs a shock of positive strength")
    if spacing is None:
        spacing = min(0.05, 0.005 / end.delta)
    if half_width is None:
        half_width = default_half_width(end)
    if n is None:
        n_half = int(math.ceil(half_width / spacing))
    else:
        if n < 64:
            raise PreconditionError("profile needs at least 64 samples")
        n_half = (n + 1) // 2
    h = half_width / n_half
    vm, vp, sigma, g = end.v_minus, end.v_plus, end.sigma, end.gamma
    dv = vp - vm
    L0 = math.log(dv / 2.0)

    def integrate(side, v_end):
        def rhs(s, y):
            # s is the distance from the anchor, zeta = anchor + side * s
            return [side * _logdev_slope(math.exp(y[0]), side, v_end, sigma, g)]
        s_eval = np.minimum(h * np.arange(n_half + 1), half_width)
        sol = solve_ivp(rhs, (0.0, half_width), [L0], method="DOP853", t_eval=s_eval,
                        rtol=1e-12, atol=1e-12)
        if not sol.success:
            raise ProfileIntegrationError(sol.message)
        L = sol.y[0]
        slopes = np.array([_logdev_slope(math.exp(x), side, v_end, sigma, g) for x in L])
        return L, slopes

    # left half: zeta = anchor - s, and d/dzeta = -d/ds, so d/ds log d_- = -slope
    L_left, S_left = integrate(-1.0, vm)
    L_right, S_right = integrate(1.0, vp)
    if np.any(L_left > math.log(dv)) or np.any(L_right > math.log(dv)):
        raise ProfileIntegrationError("profile left the interval (v_minus, v_plus)")
    if np.any(np.diff(L_left) >= 0) or np.any(np.diff(L_right) >= 0):
        raise ProfileIntegrationError("profile tails are not monotone")
    tail = max(math.exp(L_left[-1]), math.exp(L_right[-1]))
    if tail > tail_tol:
        raise WidenDomainError(f"tails reach only {tail:.3e} from the end states; widen half_width")
    prof = ShockProfile(end, float(anchor), float(h), n_half, L_left, L_right, S_left, S_right)
    res = profile_residuals(prof)
    if max(res) > residual_tol:
        raise ProfileIntegrationError(f"profile residual {max(res):.3e} exceeds {residual_tol}")
    return prof


def profile_residuals(profile: ShockProfile, zeta=None):
    """Max residuals of the first-order and viscous profile equations.

    Uses the exact derivative evaluators, plus a table-consistency residual
    comparing centered differences of the tabulated v~ with the evaluator's v~'.
    """
    e = profile.end_states
    law = e.law
    if zeta is None:
        zeta = profile.zeta_grid[1:-1]
    s = profile.sample(zeta)
    r1 = -e.sigma * s.dv - s.du
    pz = np.asarray(dpressure(law, s.v)) * s.dv
    visc = s.ddu / s.v - s.du * s.dv / s.v ** 2
    r2 = -e.sigma * s.du + pz - visc
    vt = profile.v_tilde
    fd = (vt[2:] - vt[:-2]) / (2 * profile.spacing)
    ex = profile.sample(profile.zeta_grid[1:-1]).dv
    r3 = fd - ex
    return float(np.max(np.abs(r1))), float(np.max(np.abs(r2))), float(np.max(np.abs(r3)))


@dataclass(frozen=True)
class DecayReport:
    rate_minus: float
    rate_plus: float
    r2_minus: float
    r2_plus: float
    samples_minus: int
    samples_plus: int

    @property
    def linear(self) -> bool:
        return min(self.r2_minus, self.r2_plus) >= 0.999 and min(self.rate_minus, self.rate_plus) > 0


def _linfit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return coef[0], coef[1], 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def check_tail_decay(profile: ShockProfile, onset: float = 1e-3, floor: float = 1e-12) -> DecayReport:
    """Fit log|v~ - v_end| against |zeta| where the deviation lies in [floor, onset*dv]."""
    e = profile.end_states
    dv = e.v_plus - e.v_minus
    dist = profile.spacing * np.arange(profile.n_half + 1)
    out = []
    for L in (profile.logdev_left, profile.logdev_right):
        d = np.exp(L)
        sel = (d <= onset * dv) & (d >= floor)
        if np.count_nonzero(sel) < 8:
            raise TailFitError("not enough tail samples in the fit window")
        slope, _, r2 = _linfit(dist[sel], L[sel])
        out.append((-slope, r2, int(np.count_nonzero(sel))))
    (rm, r2m, nm), (rp, r2p, npl) = out
    return DecayReport(rm, rp, r2m, r2p, nm, npl)


def write_profile_csv(profile: ShockProfile, path) -> None:
    z = profile.zeta_grid
    v = profile.v_tilde
    u = profile.u_tilde
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["zeta", "v", "u"])
        for row in zip(z, v, u):
            w.writerow([repr(float(x)) for x in row])


def read_profile_csv(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    return data["zeta"], data["v"], data["u"]
