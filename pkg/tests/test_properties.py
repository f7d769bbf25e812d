import math

import numpy as np
from hypothesis import assume, given, settings, strategies as st

from halfline_ns.diagnostics import ddx, poincare_gap, relative_entropy_field, term_breakdown
from halfline_ns.gas_model import GasLaw
from halfline_ns.halfline_solver import Perturbation, make_initial_data, make_problem
from halfline_ns.harness.config import load_preset, scenario_from_sections
from halfline_ns.shift_weight import ShiftState, WeightParams, weight_eval
from halfline_ns.shock_profile import build_profile, solve_left_state_impermeable

bumps = st.builds(Perturbation, st.floats(0.0, 0.05), st.floats(-10.0, 10.0), st.floats(1.0, 8.0),
                  st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=30), st.lists(st.floats(-5, 5), min_size=31, max_size=31),
       st.floats(-3, 3), st.floats(0.1, 4))
def test_poincare_holds_for_piecewise_linear(steps, values, lo, width):
    y = lo + width * np.concatenate([[0.0], np.cumsum(steps)]) / np.sum(steps)
    f = np.asarray(values[:len(y)])
    lhs, rhs = poincare_gap(y, f)
    assert lhs <= rhs + 1e-12 * max(1.0, rhs)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_difference_operator_exact_on_quadratics(a, b, c):
    x = np.linspace(0, 2, 41)
    got = ddx(a + b * x + c * x * x, x[1] - x[0])
    assert np.allclose(got, b + 2 * c * x, atol=1e-10 * (1 + abs(a) + abs(b) + abs(c)))


@settings(max_examples=15)
@given(st.floats(-0.25, -0.02))
def test_weight_stays_in_band(u_plus):
    e = solve_left_state_impermeable(1.0, u_plus, GasLaw(2.0))
    prof = build_profile(e)
    wp = WeightParams.from_end_states(e, 60.0 / e.delta)
    a, ap = weight_eval(prof, wp, prof.zeta_grid)
    assert a.min() >= 1.0 and a.max() <= 1.0 + math.sqrt(e.delta)
    assert np.all(ap >= 0)


@settings(max_examples=20)
@given(bumps, st.floats(-0.5, 0.5))
def test_entropy_and_good_terms_nonnegative(imp_end, bump, X):
    pb = make_problem(imp_end, beta=40.0, dx=0.2, t_end=0.0, length=120.0)
    wp = WeightParams.from_end_states(imp_end, pb.beta)
    s = make_initial_data(pb, bump).state
    assert relative_entropy_field(s, pb.profile, wp, X, pb.grid).min() >= 0
    bd = term_breakdown(s, pb.profile, wp, ShiftState(0.0, X, 0.0), "impermeable", pb.grid)
    assert min(bd.jgood) >= 0 and min(bd.g1, bd.g2, bd.d_visc, bd.gs, bd.dv1, bd.du1, bd.du2) >= 0


@given(st.floats(0.001, 0.05), st.floats(1.0, 3.0), st.floats(0.1, 1.0), st.integers(0, 10_000) | st.none())
def test_scenario_round_trips_through_sections(amp, gamma, cfl, seed):
    base = load_preset("impermeable-weak-shock")
    sec = base.to_sections()
    sec["perturbation"].update(amplitude=amp, seed=seed)
    sec["gas"]["gamma"] = gamma
    sec["time"]["cfl"] = cfl
    try:
        sc = scenario_from_sections(sec)
    except ValueError:
        assume(False)
    assert scenario_from_sections(sc.to_sections()) == sc
