import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinpair.exceptions import InputError
from spinpair.rate_model import (
    RateEquationModel,
    RateParams,
    fit_rate,
    rate_ratios,
    sample_rate_ratios,
    solve_rate_equations,
)
from spinpair.spin_channels import CouplingTable, ScatteringLengths, coupling_table
from spinpair.trajectory import PopulationTrajectory

rate = st.floats(0.01, 50.0)
simplex = st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)).filter(lambda p: sum(p) > 1e-3).map(
    lambda p: tuple(v / sum(p) for v in p)
)


def test_reference_rate_ratios():
    r = rate_ratios(coupling_table(ScatteringLengths.rb85()))
    assert r.r01_12 == pytest.approx(2.34, abs=0.01)
    assert r.r02_01 == pytest.approx(0.04, abs=0.01)
    assert r.r02_12 == pytest.approx(0.09, abs=0.01)
    assert r.degenerate == (False, False, False)


def test_sampled_ratio_spread_brackets_central_value():
    spread = sample_rate_ratios(ScatteringLengths.rb85(), 20_000, seed=3)
    for k in range(3):
        assert spread.lower[k] < spread.central.as_tuple()[k] < spread.upper[k]
    assert spread.median[0] == pytest.approx(2.34, abs=0.1)


def test_sampling_is_seeded():
    a = sample_rate_ratios(ScatteringLengths.rb85(), 1000, seed=9)
    b = sample_rate_ratios(ScatteringLengths.rb85(), 1000, seed=9)
    assert a == b


def test_symmetric_table_gives_unit_ratio():
    g12 = 0.8
    table = CouplingTable(0.0, g12 * np.sqrt(2), 0.1, 0.0, g12, 0.0)
    assert rate_ratios(table).r01_12 == pytest.approx(1.0, rel=1e-15)


def test_degenerate_ratio_flagged():
    table = CouplingTable(1.0, 0.5, 0.0, 1.0, 0.0, 1.0)
    r = rate_ratios(table)
    assert r.degenerate == (True, False, True)
    assert np.isinf(r.r01_12) and np.isnan(r.r02_12)


def test_uniform_initial_is_stationary():
    traj = solve_rate_equations(RateParams(3.0, 1.2), [1 / 3] * 3, np.linspace(0, 5, 11))
    assert traj.populations == pytest.approx(np.full((11, 3), 1 / 3), abs=1e-15)


def test_relaxes_to_uniform():
    params = RateParams(2.34 * 0.7, 0.7)
    t = 50 / min(params.gamma01, params.gamma12)
    traj = solve_rate_equations(params, [1, 0, 0], [0.0, t])
    assert traj.populations[-1] == pytest.approx([1 / 3] * 3, abs=1e-6)


def test_two_state_limit():
    g01 = 1.7
    times = np.linspace(0, 3, 31)
    traj = solve_rate_equations(RateParams(g01, 0.0), [1, 0, 0], times)
    expected = 0.5 * (1 + np.exp(-2 * g01 * times))
    assert traj.p00 == pytest.approx(expected, abs=1e-14)
    assert np.all(traj.p2m2 == 0.0)


def test_negative_rates_rejected():
    with pytest.raises(InputError):
        RateParams(-1.0, 1.0)


@given(rate, rate, rate, simplex)
def test_conservation_and_bounds(g01, g12, g02, p0):
    traj = solve_rate_equations(RateParams(g01, g12, g02), p0, np.linspace(0, 10, 40))
    assert np.max(np.abs(traj.totals() - sum(p0))) < 1e-12
    assert np.all(traj.populations >= -1e-12) and np.all(traj.populations <= 1 + 1e-12)


@given(rate, rate, rate)
def test_generator_columns_sum_to_zero(g01, g12, g02):
    assert RateParams(g01, g12, g02).generator().sum(axis=0) == pytest.approx(np.zeros(3), abs=1e-12)


def synthetic(gamma12=2.0, ratio=2.34, points=20, stop=3.0):
    times = np.linspace(0, stop, points)
    return solve_rate_equations(RateParams.from_ratio(gamma12, ratio), [1, 0, 0], times)


def test_noiseless_round_trip():
    fit = fit_rate(synthetic(), 2.34)
    assert fit.gamma12 == pytest.approx(2.0, rel=1e-6)
    assert fit.residual < 1e-20


def test_golden_and_scan_refinement_agree():
    data = synthetic(gamma12=0.37, stop=20.0)
    a = fit_rate(data, 2.34, method="golden").gamma12
    b = fit_rate(data, 2.34, method="scan").gamma12
    assert a == pytest.approx(b, rel=1e-8)


def test_constant_data_fits_zero_rate():
    data = PopulationTrajectory(np.linspace(0, 1, 10), np.tile([1.0, 0.0, 0.0], (10, 1)))
    fit = fit_rate(data, 2.34)
    assert fit.gamma12 == 0.0
    assert fit.degenerate


def test_noisy_fits_within_ten_percent():
    clean = synthetic()
    errors = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noisy = PopulationTrajectory(clean.times, clean.populations + 0.01 * rng.standard_normal((20, 3)))
        errors.append(fit_rate(noisy, 2.34).gamma12 / 2.0 - 1.0)
    assert np.max(np.abs(errors)) < 0.10


def test_weighted_fit_uses_standard_errors():
    clean = synthetic()
    se = np.full_like(clean.populations, 0.01)
    data = PopulationTrajectory(clean.times, clean.populations, se)
    assert fit_rate(data, 2.34, weighted=True).gamma12 == pytest.approx(2.0, rel=1e-6)


def test_fit_needs_two_points():
    with pytest.raises(InputError):
        fit_rate(PopulationTrajectory([0.0], [[1.0, 0.0, 0.0]]), 2.34)


def test_estimator_round_trip_and_params():
    data = synthetic()
    model = RateEquationModel(ratio=2.34).fit(data.times, data.populations)
    assert model.gamma12_ == pytest.approx(2.0, rel=1e-6)
    assert model.predict(data.times) == pytest.approx(data.populations, abs=1e-9)
    assert model.get_params()["ratio"] == 2.34
    assert model.score(data.times, data.populations) == pytest.approx(1.0)


def test_gamma02_can_be_enabled():
    times = np.linspace(0, 3, 20)
    data = solve_rate_equations(RateParams.from_ratio(1.5, 2.34, 0.09), [1, 0, 0], times)
    assert fit_rate(data, 2.34, gamma02_ratio=0.09).gamma12 == pytest.approx(1.5, rel=1e-6)
