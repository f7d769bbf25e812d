"""Property suites behind the `check` subcommand."""
from __future__ import annotations

import numpy as np

from ..diagnostics import poincare_gap
from ..gas_model import GasLaw, calibrate_bound_constants, verify_bound_constants
from ..shock_profile import (build_profile, check_tail_decay, profile_residuals,
                             solve_left_state_impermeable)


def poincare_suite(n: int = 1000, seed: int = 0) -> dict:
    """Random piecewise-linear functions on random intervals; counts lhs > rhs."""
    rng = np.random.default_rng(seed)
    violations = 0
    worst = -np.inf
    for _ in range(n):
        c = rng.uniform(-5.0, 5.0)
        d = c + rng.uniform(1e-3, 10.0)
        m = int(rng.integers(2, 60))
        y = np.sort(np.concatenate([[c, d], rng.uniform(c, d, m - 2)]))
        y = np.unique(y)
        f = rng.normal(size=y.size) * 10.0 ** rng.uniform(-3, 3)
        lhs, rhs = poincare_gap(y, f)
        scale = max(abs(lhs), abs(rhs), 1e-300)
        worst = max(worst, (lhs - rhs) / scale)
        if lhs > rhs + 1e-12 * scale:
            violations += 1
    lhs, rhs = poincare_gap(np.linspace(0.0, 1.0, 11), np.linspace(0.0, 1.0, 11))
    return {"cases": n, "violations": violations, "worst_relative_gap": float(worst),
            "linear_lhs": lhs, "linear_rhs": rhs, "linear_tightness": abs(lhs - rhs),
            "passed": violations == 0 and abs(lhs - rhs) <= 1e-10 and abs(lhs - 1 / 12) <= 1e-12}


def certificate_suite(gammas=(1.4, 2.0, 3.0), deltas=(0.05, 0.1, 0.2), n: int = 200) -> dict:
    """Calibrate the relative-quantity constants on a coarse sweep and re-check them on a finer one."""
    out = []
    for g in gammas:
        law = GasLaw(g)
        for d in deltas:
            consts = calibrate_bound_constants(law, 1.0, d)
            counts = verify_bound_constants(law, 1.0, d, consts, n=n)
            out.append({"gamma": g, "delta": d, "violations": counts})
    return {"cases": out, "passed": all(sum(c["violations"].values()) == 0 for c in out)}


def profile_suite(u_plus=(-0.2, -0.1, -0.05), gamma: float = 2.0) -> dict:
    """Residuals, monotonicity, the linear u-v relation and tail-decay rates across shock strengths."""
    law = GasLaw(gamma)
    cases = []
    for up in u_plus:
        end = solve_left_state_impermeable(1.0, up, law)
        prof = build_profile(end)
        r1, r2, r3 = profile_residuals(prof)
        v = prof.v_tilde
        lin = np.max(np.abs(prof.u_tilde - (end.u_minus - end.sigma * (v - end.v_minus))))
        rep = check_tail_decay(prof)
        cases.append({"u_plus": up, "delta": end.delta, "residual_first": r1, "residual_viscous": r2,
                      "residual_table": r3, "monotone": bool(np.all(np.diff(v) >= 0)),
                      "linear_relation": float(lin), "rate_minus_over_delta": rep.rate_minus / end.delta,
                      "rate_plus_over_delta": rep.rate_plus / end.delta,
                      "r2": min(rep.r2_minus, rep.r2_plus)})
    ok = all(max(c["residual_first"], c["residual_viscous"], c["residual_table"]) <= 1e-6
             and c["monotone"] and c["linear_relation"] <= 1e-10 and c["r2"] >= 0.999 for c in cases)
    spread = max(float(r.max() / r.min() - 1.0)
                 for r in (np.array([c[side] for c in cases])
                           for side in ("rate_minus_over_delta", "rate_plus_over_delta")))
    return {"cases": cases, "rate_spread": spread, "passed": bool(ok and spread <= 0.15)}
