import os

import pytest
from hypothesis import HealthCheck, settings

from halfline_ns.gas_model import GasLaw
from halfline_ns.shock_profile import build_profile, shock_curve_inflow, solve_left_state_impermeable

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# independent bisection oracle (notes/oracles), gamma = 2, v_plus = 1
RH_GOLDEN = {
    -0.1: (0.9328988455210125, 1.4902873248077235),
    -0.05: (0.9655644033857815, 1.4519858784544766),
    -0.025: (0.9825544734751179, 1.4330321279981544),
}
INFLOW_PRESET_V_PLUS = 1.0746073927700333


@pytest.fixture(scope="session")
def law():
    return GasLaw(2.0)


@pytest.fixture(scope="session")
def imp_end(law):
    return solve_left_state_impermeable(1.0, -0.1, law)


@pytest.fixture(scope="session")
def inf_end(law):
    return shock_curve_inflow(1.0, 0.1, INFLOW_PRESET_V_PLUS, law)


@pytest.fixture(scope="session")
def imp_profile(imp_end):
    return build_profile(imp_end)


@pytest.fixture(scope="session")
def inf_profile(inf_end):
    return build_profile(inf_end)


# one line per acceptance criterion, filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
