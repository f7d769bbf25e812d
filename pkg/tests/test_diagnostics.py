import math

import numpy as np
import pytest

from halfline_ns.diagnostics import (
    DIAGNOSTIC_COLUMNS, DiagnosticsRecorder, EntropySample, convergence_metrics, d2dx2, ddx,
    effective_velocity, entropy_identity_residual, h_entropy, poincare_gap, r1_inequality_check,
    relative_entropy_field, term_breakdown, weighted_entropy,
)
from halfline_ns.halfline_solver import (
    Grid, InvalidInputError, Perturbation, SolverConfig, State, make_initial_data, make_problem, run,
)
from halfline_ns.shift_weight import ShiftIntegrator, ShiftState, WeightParams


def test_stencils_second_order_everywhere():
    errs1, errs2 = [], []
    for n in (40, 80, 160):
        x = np.linspace(0.0, 1.0, n + 1)
        dx = 1.0 / n
        f = np.sin(2 * x) + x ** 3
        errs1.append(np.max(np.abs(ddx(f, dx) - (2 * np.cos(2 * x) + 3 * x ** 2))))
        errs2.append(np.max(np.abs(d2dx2(f, dx) - (-4 * np.sin(2 * x) + 6 * x))))
    for e in (errs1, errs2):
        assert math.log2(e[0] / e[1]) >= 1.9 and math.log2(e[1] / e[2]) >= 1.9


def test_poincare_linear_is_tight():
    y = np.linspace(0.0, 1.0, 7)
    lhs, rhs = poincare_gap(y, y)
    assert lhs == pytest.approx(1 / 12, abs=1e-15)
    assert abs(lhs - rhs) <= 1e-15


def test_poincare_constant_and_kink():
    y = np.array([0.0, 0.3, 1.0])
    assert poincare_gap(y, np.full(3, 2.0)) == (0.0, 0.0)
    lhs, rhs = poincare_gap(y, np.array([0.0, 1.0, 0.0]))
    assert lhs < rhs


@pytest.mark.parametrize("y,f", [([0.0], [1.0]), ([0.0, 0.0], [1.0, 2.0]), ([0.0, 2.0, 1.0], [0, 1, 2])])
def test_poincare_rejects_bad_abscissae(y, f):
    with pytest.raises(InvalidInputError):
        poincare_gap(y, f)


@pytest.fixture(scope="module")
def imp_case(imp_end):
    pb = make_problem(imp_end, t_end=2.0)
    wp = WeightParams.from_end_states(imp_end, pb.beta)
    return pb, wp


def test_entropy_vanishes_on_profile(imp_case):
    pb, wp = imp_case
    st = make_initial_data(pb).state
    eta = relative_entropy_field(st, pb.profile, wp, 0.0, pb.grid)
    # rounding in the interpolated tables leaves a residue far below any physical scale
    assert eta.min() >= 0 and eta.max() <= 1e-30
    assert weighted_entropy(st, pb.profile, wp, 0.0, pb.grid) <= 1e-30


def test_breakdown_signs_and_y_parts(imp_case):
    pb, wp = imp_case
    st = make_initial_data(pb, Perturbation(0.01)).state
    bd = term_breakdown(st, pb.profile, wp, ShiftState(0.0, 0.0, 0.0), "impermeable", pb.grid)
    assert min(bd.jgood) >= 0 and bd.g1 >= 0 and bd.g2 >= 0 and bd.d_visc >= 0 and bd.gs >= 0
    assert min(bd.dv1, bd.du1, bd.du2) >= 0
    assert sum(bd.y_parts) == pytest.approx(bd.Y, rel=1e-10)
    assert set(bd.row()) == set(DIAGNOSTIC_COLUMNS[2:2 + len(bd.row())])
    with pytest.raises(InvalidInputError):
        term_breakdown(st, pb.profile, wp, ShiftState(), "inflow", pb.grid)


def test_identity_residual_needs_two_snapshots():
    with pytest.raises(InvalidInputError):
        entropy_identity_residual([EntropySample(0.0, 1.0)])
    with pytest.raises(InvalidInputError):
        entropy_identity_residual([EntropySample(0.0, 1.0), EntropySample(1.0, 1.0)])


def _recorded_run(end, beta, dx, T, length, stride=40, amplitude=0.01):
    pb = make_problem(end, beta=beta, dx=dx, t_end=T, length=length)
    wp = WeightParams.from_end_states(end, pb.beta)
    init = make_initial_data(pb, Perturbation(amplitude)).state
    rec = DiagnosticsRecorder(pb, wp)
    run(pb, SolverConfig(t_end=T, output_stride=stride), init,
        shift=ShiftIntegrator(pb.profile, wp, pb.grid), observers=[rec])
    return rec


@pytest.mark.parametrize("fixture", ["imp_end", "inf_end"])
def test_identity_closes_with_active_boundary_term(fixture, request):
    # the shock sits close to x = 0, so the boundary term is a sizeable part of the identity
    end = request.getfixturevalue(fixture)
    rec = _recorded_run(end, beta=12.0, dx=0.05, T=1.0, length=120.0)
    # data and boundary values are incompatible at t = 0, skip the initial layer
    late = rec.column("t") >= 0.5
    res = rec.column("identity_residual")
    P = np.abs(rec.column("P"))
    assert np.max(res[late]) <= 0.02
    assert np.max(P / np.abs(rec.column("weighted_entropy"))) >= 1e-3
    assert not rec.hard_violations


def test_identity_residual_shrinks_under_refinement(inf_end):
    worst = [np.max(_recorded_run(inf_end, 100.0, dx, 1.0, 200.0, stride=int(0.2 / dx ** 2)).column("identity_residual"))
             for dx in (0.1, 0.05)]
    assert worst[1] < worst[0]


def test_recorder_rows_match_outputs(imp_end):
    rec = _recorded_run(imp_end, 100.0, 0.1, 0.5, 200.0, stride=25)
    t = rec.column("t")
    assert t[0] == 0.0 and t[-1] == pytest.approx(0.5)
    assert np.all(np.diff(t) > 0)
    assert np.all(np.diff(rec.column("cumulative_abs_P")) >= 0)
    assert set(rec.rows[0]) == set(DIAGNOSTIC_COLUMNS)


def test_effective_velocity_order():
    errs = []
    for n in (50, 100, 200):
        g = Grid(2.0, n)
        x = g.nodes
        v = 1 + 0.2 * np.sin(x)
        u = np.cos(x)
        h = effective_velocity(State(0.0, v, u), g)
        errs.append(np.max(np.abs(h - (u - 0.2 * np.cos(x) / v))))
    assert math.log2(errs[0] / errs[1]) >= 1.9


def test_h_entropy_small_on_profile(imp_case):
    pb, wp = imp_case
    st = make_initial_data(pb).state
    # only the discretization error of (ln v)_x remains
    assert h_entropy(st, pb.profile, wp, 0.0, pb.grid) <= 1e-10


def test_metrics_and_floor(imp_case):
    pb, wp = imp_case
    st = make_initial_data(pb, Perturbation(0.01)).state
    m = convergence_metrics(st, pb.profile, wp, ShiftState(0.0, 0.0, -0.2), pb.grid)
    assert m.sup_perturbation == pytest.approx(0.01 * math.sqrt(2), rel=1e-6)
    assert m.x_over_t == 0.0 and m.xdot_abs == 0.2
    late = State(10.0, st.v, st.u)
    assert convergence_metrics(late, pb.profile, wp, ShiftState(10.0, 0.5, 0.0), pb.grid).x_over_t == pytest.approx(0.05)


def test_r1_margin_undefined_without_positive_cstar(imp_case):
    pb, wp = imp_case
    st = make_initial_data(pb, Perturbation(0.01)).state
    bd = term_breakdown(st, pb.profile, wp, ShiftState(), "impermeable", pb.grid)
    assert math.isfinite(r1_inequality_check(bd, wp))
    bad = WeightParams(**{**wp.__dict__, "c_star": -0.1, "cstar_admissible": False})
    assert math.isnan(r1_inequality_check(bd, bad))
