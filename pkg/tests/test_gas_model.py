import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from halfline_ns.gas_model import (
    DomainError, GasLaw, calibrate_bound_constants, d2pressure, dpressure, energy_fn, internal_energy,
    lemma21_certificate, pressure, pressure_difference, pressure_fn, relative_energy, relative_pressure,
    relative_quantity, sound_speed, verify_bound_constants,
)


def test_pressure_values():
    law = GasLaw(1.4)
    assert pressure(law, 1.0) == 1.0
    assert pressure(law, 2.0) == pytest.approx(2.0 ** -1.4, rel=1e-15)
    assert dpressure(GasLaw(2.0), 1.0) == -2.0
    assert d2pressure(GasLaw(2.0), 1.0) == 6.0
    assert sound_speed(GasLaw(2.0), 1.0) == pytest.approx(math.sqrt(2.0))


def test_energy_derivative_is_minus_pressure():
    law = GasLaw(1.4)
    h = 1e-5
    v = 1.3
    fd = (internal_energy(law, v + h) - internal_energy(law, v - h)) / (2 * h)
    assert abs(fd + pressure(law, v)) < 1e-8


@pytest.mark.parametrize("v", [0.0, -1.0, np.nan])
def test_nonpositive_volume_rejected(v):
    with pytest.raises(DomainError):
        pressure(GasLaw(2.0), v)


@pytest.mark.parametrize("g", [1.0, 0.5, np.inf])
def test_gamma_must_exceed_one(g):
    with pytest.raises(ValueError):
        GasLaw(g)


def test_relative_quantities_vanish_on_diagonal():
    law = GasLaw(2.0)
    assert relative_quantity(pressure_fn(law), 1.2, 1.2) == 0.0
    assert relative_pressure(law, 1.2, 1.2) == 0.0
    assert relative_energy(law, 1.2, 1.2) == 0.0


def test_stable_forms_match_definition_away_from_diagonal():
    law = GasLaw(1.4)
    v = np.linspace(0.5, 2.0, 31)
    w = 1.1
    ref_p = relative_quantity(pressure_fn(law), v, w)
    ref_q = relative_quantity(energy_fn(law), v, w)
    far = np.abs(v - w) > 0.05
    assert np.allclose(relative_pressure(law, v, w)[far], ref_p[far], rtol=1e-11)
    assert np.allclose(relative_energy(law, v, w)[far], ref_q[far], rtol=1e-11)


def test_small_separation_matches_taylor_limit():
    # p(v|w) ~ p''(w)/2 d^2 and Q(v|w) ~ -p'(w)/2 d^2 as d -> 0
    law = GasLaw(2.0)
    w = 0.9
    for d in (1e-6, 1e-20, 1e-150):
        assert relative_pressure(law, w + d, w, dvw=d) == pytest.approx(0.5 * d2pressure(law, w) * d * d, rel=1e-5)
        assert relative_energy(law, w + d, w, dvw=d) == pytest.approx(-0.5 * dpressure(law, w) * d * d, rel=1e-5)
        assert pressure_difference(law, w + d, w, dvw=d) == pytest.approx(dpressure(law, w) * d, rel=1e-5)


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(1.05, 3.0))
def test_relative_quantities_nonnegative(v, w, g):
    law = GasLaw(g)
    assert relative_pressure(law, v, w) >= 0.0
    assert relative_energy(law, v, w) >= 0.0


@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_pressure_difference_antisymmetric(v, w):
    law = GasLaw(2.0)
    a = pressure_difference(law, v, w)
    b = pressure_difference(law, w, v)
    assert a == pytest.approx(-b, rel=1e-13, abs=1e-300)


def test_certificate_items_and_hypotheses():
    law = GasLaw(2.0)
    consts = calibrate_bound_constants(law, 1.0, 0.1)
    rep = lemma21_certificate(law, 1.02, 1.0, 1.0, 0.1, consts)
    assert {i.name for i in rep.items} == {"1a", "1b", "2", "3a", "3b", "3c"}
    assert rep.all_hold
    # far from the delta-neighbourhood item 3 is inapplicable rather than violated
    far = lemma21_certificate(law, 2.0, 1.0, 1.0, 0.1, consts)
    assert not far["3a"].hypothesis_met
    assert far["3a"].holds


@pytest.mark.parametrize("g", [1.4, 2.0, 3.0])
def test_calibrated_constants_hold_on_finer_sweep(g):
    law = GasLaw(g)
    consts = calibrate_bound_constants(law, 1.0, 0.1)
    counts = verify_bound_constants(law, 1.0, 0.1, consts, n=300)
    assert counts == {k: 0 for k in ("1a", "1b", "2", "3a", "3b", "3c")}
