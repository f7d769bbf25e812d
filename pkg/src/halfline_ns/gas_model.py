"""Gamma-law gas: pressure, internal energy and relative quantities.

The viscosity is fixed to one throughout the package, so the only material
parameter is the adiabatic exponent.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np


class DomainError(ValueError):
    """Raised when a thermodynamic function is evaluated at a nonpositive volume."""


@dataclass(frozen=True)
class GasLaw:
    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 1.0:
            raise ValueError(f"adiabatic exponent must be > 1, got {self.gamma}")


def _check_volume(v):
    arr = np.asarray(v, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("specific volume must be positive")
    return arr


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def pressure(law: GasLaw, v):
    """p(v) = v^-gamma."""
    return _out(_check_volume(v) ** (-law.gamma))


def dpressure(law: GasLaw, v):
    """p'(v) = -gamma v^(-gamma-1)."""
    return _out(-law.gamma * _check_volume(v) ** (-law.gamma - 1.0))


def d2pressure(law: GasLaw, v):
    g = law.gamma
    return _out(g * (g + 1.0) * _check_volume(v) ** (-g - 2.0))


def internal_energy(law: GasLaw, v):
    """Q(v) = v^(1-gamma)/(gamma-1), so that Q' = -p."""
    g = law.gamma
    return _out(_check_volume(v) ** (1.0 - g) / (g - 1.0))


def sound_speed(law: GasLaw, v):
    """Lagrangian sound speed sqrt(-p'(v))."""
    return _out(np.sqrt(-np.asarray(dpressure(law, v))))


class ScalarFunction(NamedTuple):
    f: Callable
    df: Callable


def pressure_fn(law: GasLaw) -> ScalarFunction:
    return ScalarFunction(lambda v: pressure(law, v), lambda v: dpressure(law, v))


def energy_fn(law: GasLaw) -> ScalarFunction:
    return ScalarFunction(lambda v: internal_energy(law, v),
                          lambda v: -np.asarray(pressure(law, v)))


def relative_quantity(F: ScalarFunction, v, w):
    """F(v|w) = F(v) - F(w) - F'(w)(v - w), by the definition.

    Suffers cancellation when v is close to w; use ``relative_pressure`` and
    ``relative_energy`` for the gas functions.
    """
    v = _check_volume(v)
    w = _check_volume(w)
    return _out(F.f(v) - F.f(w) - F.df(w) * (v - w))


# (1+s)^a - 1 - a s without cancellation near s = 0
_SERIES_CUT = 1e-2
_SERIES_TERMS = 14


def _power_remainder(a: float, s):
    s = np.asarray(s, dtype=float)
    direct = np.expm1(a * np.log1p(s)) - a * s
    small = np.abs(s) < _SERIES_CUT
    if np.any(small):
        ss = np.where(small, s, 0.0)
        coef = a * (a - 1.0) / 2.0
        term = coef * ss * ss
        acc = term.copy()
        for k in range(3, _SERIES_TERMS):
            term = term * ss * (a - k + 1.0) / k
            acc = acc + term
        direct = np.where(small, acc, direct)
    return direct


def power_difference(a: float, v, w):
    """v^a - w^a evaluated as w^a * expm1(a log1p((v-w)/w))."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return w ** a * np.expm1(a * np.log1p((v - w) / w))


def pressure_difference(law: GasLaw, v, w, dvw=None):
    """p(v) - p(w); ``dvw`` optionally supplies v - w computed more accurately."""
    v = _check_volume(v)
    w = _check_volume(w)
    d = v - w if dvw is None else np.asarray(dvw, dtype=float)
    return _out(w ** (-law.gamma) * np.expm1(-law.gamma * np.log1p(d / w)))


def relative_pressure(law: GasLaw, v, w, dvw=None):
    """p(v|w), accurate down to |v-w| ~ 1e-300."""
    v = _check_volume(v)
    w = _check_volume(w)
    d = v - w if dvw is None else np.asarray(dvw, dtype=float)
    return _out(w ** (-law.gamma) * _power_remainder(-law.gamma, d / w))


def relative_energy(law: GasLaw, v, w, dvw=None):
    """Q(v|w), accurate down to |v-w| ~ 1e-300."""
    v = _check_volume(v)
    w = _check_volume(w)
    g = law.gamma
    d = v - w if dvw is None else np.asarray(dvw, dtype=float)
    return _out(w ** (1.0 - g) / (g - 1.0) * _power_remainder(1.0 - g, d / w))


# ---------------------------------------------------------------------------
# bound certificates for the relative quantities

ITEM_NAMES = ("1a", "1b", "2", "3a", "3b", "3c")


@dataclass(frozen=True)
class BoundConstants:
    """Constants for the relative-quantity bounds (one per item carrying a C)."""
    c1a: float
    c1b: float
    c2: float
    c3a: float
    c3c: float


@dataclass(frozen=True)
class CertificateItem:
    name: str
    lhs: float
    rhs: float
    hypothesis_met: bool

    @property
    def holds(self) -> bool:
        if not self.hypothesis_met:
            return True
        return self.lhs <= self.rhs + 1e-12 * max(1.0, abs(self.rhs))


@dataclass(frozen=True)
class CertificateReport:
    items: tuple = field(default_factory=tuple)

    def __getitem__(self, name):
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    @property
    def all_hold(self) -> bool:
        return all(it.holds for it in self.items)


def _item_values(law, v, vbar, v_plus, delta, c):
    g = law.gamma
    v = np.asarray(v, dtype=float)
    vbar = np.asarray(vbar, dtype=float)
    dv2 = (v - vbar) ** 2
    pbar = vbar ** (-g)
    dp = np.asarray(pressure_difference(law, v, vbar))
    q = np.asarray(relative_energy(law, v, vbar))
    prel = np.asarray(relative_pressure(law, v, vbar))
    hyp1 = (vbar < 2 * v_plus) & (v < 3 * v_plus)
    hyp2 = (v > v_plus / 2) & (vbar > v_plus / 2)
    hyp3 = (np.abs(dp) < delta) & (np.abs(pbar - v_plus ** (-g)) < delta)
    lead = pbar ** (-1.0 / g - 1.0) / (2 * g)
    out = {
        "1a": (dv2, c.c1a * q, hyp1),
        "1b": (dv2, c.c1b * prel, hyp1),
        "2": (np.abs(dp), c.c2 * np.abs(v - vbar), hyp2),
        "3a": (prel, ((g + 1) / (2 * g * pbar) + c.c3a * delta) * dp ** 2, hyp3),
        "3b": (lead * dp ** 2 - (1 + g) / (3 * g * g) * pbar ** (-1.0 / g - 2.0) * dp ** 3, q, hyp3),
        "3c": (q, (lead + c.c3c * delta) * dp ** 2, hyp3),
    }
    return out


def lemma21_certificate(law: GasLaw, v: float, vbar: float, v_plus: float, delta: float,
                        constants: BoundConstants | None = None) -> CertificateReport:
    """Evaluate both sides of every relative-quantity bound at one point.

    Items whose hypotheses fail at (v, vbar) are reported with
    ``hypothesis_met=False`` instead of raising.
    """
    _check_volume([v, vbar, v_plus])
    if constants is None:
        constants = calibrate_bound_constants(law, v_plus, delta)
    vals = _item_values(law, v, vbar, v_plus, delta, constants)
    items = tuple(CertificateItem(k, float(l), float(r), bool(h)) for k, (l, r, h) in vals.items())
    return CertificateReport(items)


def _item3_pairs(law, v_plus, delta, n):
    g = law.gamma
    p_plus = v_plus ** (-g)
    s = np.linspace(-1.0, 1.0, n + 2)[1:-1] * delta
    pbar = p_plus + s[:, None] + 0 * s[None, :]
    p = pbar + s[None, :]
    ok = (p > 0) & (pbar > 0)
    return p[ok] ** (-1.0 / g), pbar[ok] ** (-1.0 / g)


def calibrate_bound_constants(law: GasLaw, v_plus: float, delta: float, n: int = 100,
                              margin: float = 0.05) -> BoundConstants:
    """Smallest constants on an n-by-n sweep of each hypothesis region, inflated by ``margin``.

    Item 1 is swept over v in (0.3, 2.7) v_plus and vbar in (0.3, 1.9) v_plus,
    item 2 over (v_plus/2, 3 v_plus)^2 and item 3 over pressure pairs inside the
    delta-neighbourhoods. Coincident points are skipped; their limits are finite.
    """
    g = law.gamma
    v = np.linspace(0.3, 2.7, n) * v_plus
    vb = np.linspace(0.3, 1.9, n) * v_plus
    V, VB = np.meshgrid(v, vb, indexing="ij")
    off = np.abs(V - VB) > 1e-9 * v_plus
    V, VB = V[off], VB[off]
    dv2 = (V - VB) ** 2
    c1a = np.max(dv2 / relative_energy(law, V, VB))
    c1b = np.max(dv2 / relative_pressure(law, V, VB))
    # local limits at v = vbar: |dv|^2 / (F''/2 |dv|^2)
    c1a = max(c1a, np.max(2.0 / (g * vb ** (-g - 1.0))))
    c1b = max(c1b, np.max(2.0 / (g * (g + 1) * vb ** (-g - 2.0))))

    w = np.linspace(0.5, 3.0, n) * v_plus
    W1, W2 = np.meshgrid(w, w, indexing="ij")
    off = W1 != W2
    c2 = np.max(np.abs(pressure_difference(law, W1[off], W2[off])) / np.abs(W1[off] - W2[off]))
    c2 = max(c2, g * (0.5 * v_plus) ** (-g - 1.0))

    V3, VB3 = _item3_pairs(law, v_plus, delta, n)
    off = np.abs(V3 - VB3) > 0
    V3, VB3 = V3[off], VB3[off]
    dp2 = np.asarray(pressure_difference(law, V3, VB3)) ** 2
    pbar = VB3 ** (-g)
    r3a = relative_pressure(law, V3, VB3) / dp2 - (g + 1) / (2 * g * pbar)
    r3c = relative_energy(law, V3, VB3) / dp2 - pbar ** (-1.0 / g - 1.0) / (2 * g)
    c3a = max(0.0, np.max(r3a) / delta)
    c3c = max(0.0, np.max(r3c) / delta)
    k = 1.0 + margin
    return BoundConstants(k * c1a, k * c1b, k * c2, k * c3a, k * c3c)


def verify_bound_constants(law: GasLaw, v_plus: float, delta: float, constants: BoundConstants,
                           n: int = 400) -> dict:
    """Re-check every bound on a finer sweep; returns item name -> violation count."""
    v = np.linspace(0.3, 2.7, n) * v_plus
    vb = np.linspace(0.3, 1.9, n) * v_plus
    V, VB = np.meshgrid(v, vb, indexing="ij")
    V3, VB3 = _item3_pairs(law, v_plus, delta, n)
    w = np.linspace(0.5, 3.0, n) * v_plus
    W1, W2 = np.meshgrid(w, w, indexing="ij")
    counts = {}
    for name, (a, b) in {"1a": (V, VB), "1b": (V, VB), "2": (W1, W2),
                         "3a": (V3, VB3), "3b": (V3, VB3), "3c": (V3, VB3)}.items():
        lhs, rhs, hyp = _item_values(law, a.ravel(), b.ravel(), v_plus, delta, constants)[name]
        bad = hyp & (lhs > rhs + 1e-12 * np.maximum(1.0, np.abs(rhs)))
        counts[name] = int(np.count_nonzero(bad))
    return counts
