"""Number squeezing, detection-error variance and chi-squared tests on outcome counts.

After state-selective ejection of one spin component, P_n is the probability
that n of the two atoms remain. Conditioned on n < 2, the imbalance variance
is (dJz)^2 = P1 / (4 (P0 + P1)) and the squeezing parameter compares it with
the shot-noise variance N/4.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from ._validation import check_probability
from .exceptions import InputError


@dataclass(frozen=True)
class EjectionOutcome:
    p0: float
    p1: float
    p2: float = 0.0

    def __post_init__(self):
        for name in ("p0", "p1", "p2"):
            check_probability(getattr(self, name), name)
        if self.p0 + self.p1 + self.p2 > 1.0 + 1e-12:
            raise InputError("outcome probabilities sum to more than one")


@dataclass(frozen=True)
class SqueezingResult:
    mean_jz: float
    variance: float
    zeta2: float
    db: float
    defined: bool = True
    perfect: bool = False


def squeezing_from_variance(variance, n_atoms=2):
    """zeta^2 = variance / (N/4) and its value in dB relative to shot noise."""
    variance = float(variance)
    if not variance >= 0.0:
        raise InputError(f"variance must be >= 0, got {variance!r}")
    if n_atoms < 1:
        raise InputError("need at least one atom")
    zeta2 = variance / (n_atoms / 4.0)
    if zeta2 == 0.0:
        return SqueezingResult(0.0, variance, 0.0, -math.inf, True, True)
    return SqueezingResult(0.0, variance, zeta2, 10.0 * math.log10(zeta2))


def squeezing_from_outcomes(outcome: EjectionOutcome, n_atoms=2) -> SqueezingResult:
    """Squeezing of the postselected (n < 2) outcomes; undefined when P0 + P1 = 0."""
    if n_atoms < 1:
        raise InputError("need at least one atom")
    kept = outcome.p0 + outcome.p1
    if kept == 0.0:
        return SqueezingResult(0.0, math.nan, math.nan, math.nan, defined=False)
    return squeezing_from_variance(0.25 * (outcome.p1 / kept), n_atoms)


def db_to_zeta2(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class DetectionModel:
    """eta_f2: a remaining f = 2 atom is detected; eta_f3: an ejected atom is removed."""

    eta_f2: float = 0.944
    eta_f3: float = 0.997

    def __post_init__(self):
        check_probability(self.eta_f2, "eta_f2")
        check_probability(self.eta_f3, "eta_f3")


#: Fraction of pairs ejected together when the state is an even mix of the
#: three pair states and |0,0>-pairs survive together.
RELAXED_EJECTED_FRACTION = 1.0 / 3.0


def apparent_outcome(model: DetectionModel, ejected_fraction=RELAXED_EJECTED_FRACTION) -> EjectionOutcome:
    """Outcome probabilities seen through imperfect detection.

    The true state is perfectly pair-correlated: a fraction ``ejected_fraction``
    of pairs has both atoms ejected, the rest keeps both. Each kept atom is
    lost with probability 1 - eta_f2; each ejected atom survives the push-out
    with probability 1 - eta_f3. Apparent counts follow from the two binomials.
    """
    f = check_probability(ejected_fraction, "ejected_fraction")
    e2, e3 = model.eta_f2, model.eta_f3
    p0 = (1.0 - f) * (1.0 - e2) ** 2 + f * e3**2
    p1 = (1.0 - f) * 2.0 * e2 * (1.0 - e2) + f * 2.0 * e3 * (1.0 - e3)
    p2 = (1.0 - f) * e2**2 + f * (1.0 - e3) ** 2
    return EjectionOutcome(p0, p1, p2)


def detection_variance(model: DetectionModel, ejected_fraction=RELAXED_EJECTED_FRACTION):
    """Expected apparent (dJz)^2 when the true variance is zero."""
    return squeezing_from_outcomes(apparent_outcome(model, ejected_fraction)).variance


def detection_variance_monte_carlo(model: DetectionModel, trials, rng, ejected_fraction=RELAXED_EJECTED_FRACTION):
    """Per-atom simulation of :func:`detection_variance`; returns (variance, standard error).

    ``rng`` is a numpy Generator supplied by the caller.
    """
    trials = int(trials)
    if trials < 1:
        raise InputError("trials must be >= 1")
    f = check_probability(ejected_fraction, "ejected_fraction")
    ejected = rng.random(trials) < f
    # Chance that each of the two atoms is counted as remaining.
    stay = np.where(ejected, 1.0 - model.eta_f3, model.eta_f2)
    counted = (rng.random(trials) < stay).astype(np.int64) + (rng.random(trials) < stay)
    n0 = int(np.count_nonzero(counted == 0))
    n1 = int(np.count_nonzero(counted == 1))
    kept = n0 + n1
    if kept == 0:
        return math.nan, math.nan
    q = n1 / kept
    return 0.25 * q, 0.25 * math.sqrt(q * (1.0 - q) / kept)


@dataclass(frozen=True)
class ChiSquaredResult:
    statistic: float
    df: int
    p_value: float


def chi_squared_uniformity(observed, expected, df=None) -> ChiSquaredResult:
    """Pearson chi-squared of counts against class probabilities.

    ``expected`` is renormalized to sum to one. ``df`` defaults to
    classes - 1 and can be set explicitly. The p-value is the regularized
    upper incomplete gamma Q(df/2, chi2/2).
    """
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    if obs.ndim != 1 or obs.shape != exp.shape or obs.size < 2:
        raise InputError("observed and expected must be matching 1-D sequences of at least two classes")
    if np.any(obs < 0) or not np.all(np.isfinite(obs)):
        raise InputError("observed counts must be finite and nonnegative")
    total = obs.sum()
    if total <= 0:
        raise InputError("observed counts sum to zero")
    if np.any(exp <= 0) or not np.all(np.isfinite(exp)):
        raise InputError("every expected probability must be positive")
    counts = total * exp / exp.sum()
    stat = float(np.sum((obs - counts) ** 2 / counts))
    df = obs.size - 1 if df is None else int(df)
    if df < 1:
        raise InputError("df must be >= 1")
    return ChiSquaredResult(stat, df, chi_squared_p_value(stat, df))


def chi_squared_p_value(statistic, df):
    """Survival function of the chi-squared distribution, Q(df/2, x/2)."""
    return float(gammaincc(df / 2.0, statistic / 2.0))
