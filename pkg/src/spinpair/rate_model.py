"""Incoherent three-state rate model and single-rate fit to population data.

    dP0/dt = g01 (P1 - P0) + g02 (P2 - P0)
    dP1/dt = g01 (P0 - P1) + g12 (P2 - P1)
    dP2/dt = g02 (P0 - P2) + g12 (P1 - P2)

Rates are proportional to the squared spin-block couplings between the pair
states, so only one overall rate is free once their ratio is fixed.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import minimize_scalar
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_nonnegative, check_populations, check_positive, check_times
from .exceptions import InputError, NumericError
from .spin_channels import CouplingTable, ScatteringLengths, closed_form_table, coupling_table
from .trajectory import PopulationTrajectory

DEFAULT_RATIO = 2.34
SCAN_POINTS = 241


@dataclass(frozen=True)
class RateParams:
    gamma01: float
    gamma12: float
    gamma02: float = 0.0

    def __post_init__(self):
        for name in ("gamma01", "gamma12", "gamma02"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise InputError(f"{name} must be finite and >= 0, got {value!r}")

    @classmethod
    def from_ratio(cls, gamma12, ratio, gamma02_ratio=0.0):
        """gamma01 = ratio * gamma12 and gamma02 = gamma02_ratio * gamma12."""
        return cls(ratio * gamma12, gamma12, gamma02_ratio * gamma12)

    def generator(self):
        a, b, c = self.gamma01, self.gamma12, self.gamma02
        return np.array(
            [
                [-(a + c), a, c],
                [a, -(a + b), b],
                [c, b, -(b + c)],
            ]
        )


@dataclass(frozen=True)
class RateRatios:
    """gamma01/gamma12, gamma02/gamma01, gamma02/gamma12.

    A ratio with a vanishing denominator is NaN (0/0) or inf and its entry in
    ``degenerate`` is True.
    """

    r01_12: float
    r02_01: float
    r02_12: float
    degenerate: tuple = (False, False, False)

    def as_tuple(self):
        return (self.r01_12, self.r02_01, self.r02_12)


def _ratio(num, den):
    if den == 0.0:
        return (math.nan if num == 0.0 else math.inf), True
    return num / den, False


def _squared_transitions(table):
    # Off-diagonal spin-block entries: sqrt2 g00_1m1, sqrt2 g00_2m2, 2 g1m1_2m2.
    return 2.0 * table.g00_1m1**2, 2.0 * table.g00_2m2**2, 4.0 * table.g1m1_2m2**2


def rate_ratios(table: CouplingTable) -> RateRatios:
    """Ratios of squared transition couplings of the spin block."""
    c01, c02, c12 = (float(v) for v in _squared_transitions(table))
    r1, d1 = _ratio(c01, c12)
    r2, d2 = _ratio(c02, c01)
    r3, d3 = _ratio(c02, c12)
    return RateRatios(r1, r2, r3, (d1, d2, d3))


@dataclass(frozen=True)
class RatioSpread:
    """Central ratios and percentiles from sampling the scattering-length errors."""

    central: RateRatios
    median: tuple
    lower: tuple
    upper: tuple
    n_samples: int


def sample_rate_ratios(lengths: ScatteringLengths, n_samples=100_000, seed=0, percentiles=(15.865, 84.135)):
    """Propagate independent normal errors on a_F into the rate ratios.

    Reports the median and the given percentiles (one-sigma equivalents by
    default). Samples with a zero denominator are dropped.
    """
    if lengths.uncertainties is None:
        raise InputError("scattering lengths carry no uncertainties")
    rng = np.random.default_rng(seed)
    a = lengths.as_array()
    draws = a + rng.standard_normal((int(n_samples), 3)) * np.asarray(lengths.uncertainties, dtype=float)
    t01, t02, t12 = _squared_transitions(closed_form_table(*draws.T))
    stats = []
    for num, den in ((t01, t12), (t02, t01), (t02, t12)):
        ok = den > 0
        r = num[ok] / den[ok]
        stats.append(np.percentile(r, [50.0, percentiles[0], percentiles[1]]))
    stats = np.array(stats)
    return RatioSpread(
        central=rate_ratios(coupling_table(lengths)),
        median=tuple(stats[:, 0]),
        lower=tuple(stats[:, 1]),
        upper=tuple(stats[:, 2]),
        n_samples=int(n_samples),
    )


def _check_initial(initial):
    p = np.asarray(initial, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InputError("initial populations must be three finite nonnegative numbers")
    return p


def solve_rate_equations(params: RateParams, initial, times) -> PopulationTrajectory:
    """Exact solution P(t) = U exp(D t) U^T P(0) of the symmetric generator."""
    p0 = _check_initial(initial)
    times = check_times(times)
    return PopulationTrajectory(times, _propagate(params, p0, times))


def _propagate(params, p0, times):
    rates, vectors = eigh(params.generator())
    # The generator is negative semidefinite; clip roundoff above zero.
    rates = np.minimum(rates, 0.0)
    amp = vectors.T @ p0
    return (np.exp(np.outer(times, rates)) * amp) @ vectors.T


@dataclass(frozen=True, eq=False)
class RateFit:
    gamma12: float
    residual: float
    model: PopulationTrajectory
    degenerate: bool = False
    notes: list = field(default_factory=list)


def _objective(data, weights, ratio, gamma02_ratio, p0):
    def sse(gamma):
        model = _propagate(RateParams.from_ratio(gamma, ratio, gamma02_ratio), p0, data.times)
        return float(np.sum(weights * (model - data.populations) ** 2))
    return sse


def _inverse_variance(data):
    if data.stderr is None:
        return np.ones_like(data.populations)
    if np.any(data.stderr <= 0):
        raise InputError("standard errors must be positive for inverse-variance weighting")
    return 1.0 / data.stderr**2


def _scan_grid(times):
    span = times[-1] - times[0]
    steps = np.diff(times)
    finest = steps[steps > 0].min()
    return np.geomspace(1e-3 / span, 1e3 / finest, SCAN_POINTS)


def _bracket(grid, i):
    return (0.0 if i == 0 else grid[i - 1]), grid[i + 1]


def fit_rate(data: PopulationTrajectory, ratio=DEFAULT_RATIO, weighted=False, initial=None,
             gamma02_ratio=0.0, method="golden") -> RateFit:
    """Least-squares gamma12 over all three series, with gamma01 = ratio * gamma12.

    The model starts from ``initial`` or, by default, from the first data row.
    A logarithmic scan brackets the minimum; ``method`` refines it by
    golden-section search (``"golden"``) or by repeated grid zooming
    (``"scan"``). gamma12 = 0 is always a candidate, so data without any
    relaxation fit to exactly zero.
    """
    if len(data) < 2:
        raise InputError("need at least two time points to fit a rate")
    ratio = check_positive(ratio, "ratio")
    gamma02_ratio = check_nonnegative(gamma02_ratio, "gamma02_ratio")
    if data.times[-1] == data.times[0]:
        raise InputError("time points must not all coincide")
    p0 = data.populations[0] if initial is None else _check_initial(initial)
    weights = _inverse_variance(data) if weighted else np.ones_like(data.populations)
    sse = _objective(data, weights, ratio, gamma02_ratio, p0)

    notes = []
    degenerate = bool(np.all(data.populations == data.populations[0]))
    if degenerate:
        notes.append("all data rows are identical; the rate is not identifiable")

    grid = _scan_grid(data.times)
    values = np.array([sse(g) for g in grid])
    i = int(np.argmin(values))
    if i == len(grid) - 1:
        raise NumericError(
            f"no minimum inside the scan [{grid[0]:.3g}, {grid[-1]:.3g}] 1/s; "
            f"objective still falling at the upper edge ({values[-2]:.3g} -> {values[-1]:.3g})"
        )
    if method not in ("golden", "scan"):
        raise InputError(f"unknown method {method!r}")
    lo, hi = _bracket(grid, i)
    zero = sse(0.0)
    if degenerate or zero <= values[i]:
        best = 0.0
    elif method == "golden":
        best = _golden(sse, lo, grid[i], hi)
    else:
        best = _zoom(sse, lo, hi)
    if sse(best) >= zero:
        best = 0.0
    model = PopulationTrajectory(data.times, _propagate(RateParams.from_ratio(best, ratio, gamma02_ratio), p0, data.times))
    return RateFit(best, sse(best), model, degenerate, notes)


def _golden(f, lo, mid, hi):
    res = minimize_scalar(f, bracket=(lo, mid, hi), method="golden", options={"xtol": 1e-12})
    if not res.success:
        raise NumericError(f"golden-section search failed in [{lo:.6g}, {hi:.6g}]: {res.message}")
    return float(res.x)


def _zoom(f, lo, hi, points=21, rounds=60):
    for _ in range(rounds):
        grid = np.linspace(lo, hi, points)
        k = int(np.argmin([f(g) for g in grid]))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, points - 1)]
        if hi - lo <= 1e-14 * max(abs(hi), 1e-300):
            break
    return float(0.5 * (lo + hi))


class RateEquationModel(RegressorMixin, BaseEstimator):
    """Estimator wrapper: ``fit(times, populations)`` then ``predict(times)``.

    ``sample_weight`` in :meth:`fit` takes per-point standard errors of shape
    (n, 3) and switches on inverse-variance weighting.
    """

    def __init__(self, ratio=DEFAULT_RATIO, gamma02_ratio=0.0, initial=None, method="golden"):
        self.ratio = ratio
        self.gamma02_ratio = gamma02_ratio
        self.initial = initial
        self.method = method

    def fit(self, X, y, sample_weight=None):
        data = PopulationTrajectory(np.ravel(X), check_populations(y), stderr=sample_weight)
        result = fit_rate(
            data, self.ratio, weighted=sample_weight is not None, initial=self.initial,
            gamma02_ratio=self.gamma02_ratio, method=self.method,
        )
        self.gamma12_ = result.gamma12
        self.params_ = RateParams.from_ratio(result.gamma12, self.ratio, self.gamma02_ratio)
        self.initial_ = data.populations[0] if self.initial is None else _check_initial(self.initial)
        self.residual_ = result.residual
        self.degenerate_ = result.degenerate
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        return _propagate(self.params_, self.initial_, check_times(np.ravel(X)))
