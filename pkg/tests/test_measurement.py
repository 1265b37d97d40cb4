import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinpair.exceptions import InputError
from spinpair.measurement import (
    DetectionModel,
    EjectionOutcome,
    apparent_outcome,
    chi_squared_p_value,
    chi_squared_uniformity,
    db_to_zeta2,
    detection_variance,
    detection_variance_monte_carlo,
    squeezing_from_outcomes,
    squeezing_from_variance,
)

prob = st.floats(0.0, 1.0)


def test_reference_variance_gives_reference_squeezing():
    res = squeezing_from_variance(0.032, 2)
    assert res.zeta2 == pytest.approx(0.064, rel=1e-12)
    assert res.db == pytest.approx(-11.94, abs=0.005)
    assert abs(res.db - -11.9) <= 0.3


def test_perfect_squeezing_flagged():
    res = squeezing_from_outcomes(EjectionOutcome(0.6, 0.0, 0.4))
    assert res.zeta2 == 0.0 and res.db == -math.inf and res.perfect


def test_equal_outcomes():
    assert squeezing_from_outcomes(EjectionOutcome(0.5, 0.5), 2).zeta2 == pytest.approx(0.25)


def test_undefined_without_postselected_outcomes():
    res = squeezing_from_outcomes(EjectionOutcome(0.0, 0.0, 1.0))
    assert not res.defined and math.isnan(res.zeta2)


def test_outcome_validation():
    with pytest.raises(InputError):
        EjectionOutcome(0.7, 0.5, 0.0)


@given(prob, prob, st.integers(1, 10))
def test_zeta2_identity(p0, p1, n):
    if p0 + p1 == 0 or p0 + p1 > 1:
        return
    res = squeezing_from_outcomes(EjectionOutcome(p0, p1, 0.0), n)
    assert res.variance == 0.25 * (p1 / (p0 + p1))
    assert res.zeta2 == pytest.approx(p1 / (n * (p0 + p1)), rel=1e-15)


@given(st.floats(1e-6, 10.0))
def test_db_round_trip(zeta2):
    res = squeezing_from_variance(zeta2 / 2, 2)
    assert db_to_zeta2(res.db) == pytest.approx(zeta2, rel=1e-12)


def test_perfect_detection_gives_no_variance():
    assert detection_variance(DetectionModel(1.0, 1.0)) == 0.0


def test_detection_variance_reference_value():
    # Reference 0.034 +- 0.004 for perfectly correlated pairs. The relaxed-state
    # model gives 0.0446; this test records that gap and is expected to fail.
    value = detection_variance(DetectionModel(0.944, 0.997))
    assert value == pytest.approx(0.034, abs=0.004)


def test_detection_variance_closed_form_value():
    e2, e3, f = 0.944, 0.997, 1 / 3
    p0 = (1 - f) * (1 - e2) ** 2 + f * e3**2
    p1 = (1 - f) * 2 * e2 * (1 - e2) + f * 2 * e3 * (1 - e3)
    assert detection_variance(DetectionModel(e2, e3)) == pytest.approx(0.25 * p1 / (p0 + p1), rel=1e-15)
    assert detection_variance(DetectionModel(e2, e3)) == pytest.approx(0.044640, abs=1e-6)


@given(st.floats(0.85, 1.0), st.floats(0.85, 1.0), st.floats(0.0, 0.05))
def test_detection_variance_monotone_in_efficiencies(e2, e3, step):
    base = detection_variance(DetectionModel(e2, e3))
    assert detection_variance(DetectionModel(min(e2 + step, 1.0), e3)) <= base + 1e-15
    assert detection_variance(DetectionModel(e2, min(e3 + step, 1.0))) <= base + 1e-15


def test_detection_variance_not_monotone_for_poor_detection():
    # Losing every kept atom also gives zero apparent variance, so the
    # variance must rise somewhere on the way from eta_f2 = 0 to 1.
    assert detection_variance(DetectionModel(0.0, 1.0)) == 0.0
    assert detection_variance(DetectionModel(0.53125, 1.0)) > detection_variance(DetectionModel(0.5, 1.0))


def test_monte_carlo_agrees_with_closed_form():
    model = DetectionModel(0.944, 0.997)
    expected = detection_variance(model)
    value, se = detection_variance_monte_carlo(model, 1_000_000, np.random.default_rng(2024))
    assert abs(value - expected) < 4 * se


def test_monte_carlo_three_figures_with_more_trials():
    model = DetectionModel(0.944, 0.997)
    expected = detection_variance(model)
    value, _ = detection_variance_monte_carlo(model, 10_000_000, np.random.default_rng(7))
    assert value == pytest.approx(expected, rel=2e-3)


def test_apparent_outcome_sums_to_one():
    out = apparent_outcome(DetectionModel(0.9, 0.95), 0.4)
    assert out.p0 + out.p1 + out.p2 == pytest.approx(1.0, abs=1e-15)


def test_chi_squared_zero_for_exact_match():
    res = chi_squared_uniformity([100, 100, 100], [1 / 3, 1 / 3, 1 / 3])
    assert res.statistic == 0.0 and res.p_value == 1.0 and res.df == 2


def test_chi_squared_detects_wrong_distribution():
    counts = np.random.default_rng(11).multinomial(500, [1 / 3, 1 / 3, 1 / 3])
    res = chi_squared_uniformity(counts, [0.2, 0.4, 0.4], df=3)
    assert res.p_value < 0.001


def test_chi_squared_reference_values():
    # chi2 = 1.9 and 71.1 with three degrees of freedom.
    assert chi_squared_p_value(1.9, 3) == pytest.approx(0.5934, abs=1e-4)
    assert chi_squared_p_value(71.1, 3) < 0.001


@given(st.floats(0.1, 100.0))
def test_chi_squared_scale_invariant(scale):
    obs = [30, 50, 20]
    a = chi_squared_uniformity(obs, [0.2, 0.5, 0.3])
    b = chi_squared_uniformity(obs, [0.2 * scale, 0.5 * scale, 0.3 * scale])
    assert a.statistic == pytest.approx(b.statistic, rel=1e-12)


def test_chi_squared_p_value_matches_scipy():
    from scipy.stats import chi2

    res = chi_squared_uniformity([40, 70, 90], [1, 1, 1], df=3)
    assert res.p_value == pytest.approx(chi2.sf(res.statistic, 3), rel=1e-12)


def test_chi_squared_rejects_zero_expected():
    with pytest.raises(InputError):
        chi_squared_uniformity([1, 2, 3], [0.5, 0.5, 0.0])
