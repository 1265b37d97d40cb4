"""Gaussian and contact pseudopotentials in the harmonic-oscillator basis.

The Gaussian V(r) = exp(-r^2 / 2w^2) / (2 pi w^2)^(3/2) couples every pair of
modes whose per-axis indices share parity. Its matrix elements factorize into
one-dimensional overlaps

    I_{n,m} = int dx phi_n(x) exp(-x^2 / 2w^2) phi_m(x),

which have a closed form as a terminating Gauss hypergeometric series.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from ._validation import check_nonnegative, check_positive
from .basis import BasisSet
from .exceptions import InputError, NumericError
from .spin_channels import ScatteringLengths
from .units import TrapFrequencies

# Digits that must survive cancellation in the hypergeometric sum.
_KEPT_DIGITS = 22
_START_DPS = 30


@dataclass(frozen=True)
class GaussianPotential:
    width: float

    def __post_init__(self):
        check_positive(self.width, "width")

    @property
    def normalization(self):
        return (2.0 * math.pi * self.width**2) ** -1.5


def gaussian_width(lengths: ScatteringLengths):
    """Width that matches the low-energy total cross section of a contact potential.

    w^2 = (a0^4 + a2^4 + a4^4) / (a0^2 + a2^2 + a4^2), same length unit as the input.
    """
    a = lengths.as_array() if isinstance(lengths, ScatteringLengths) else np.asarray(lengths, float)
    a2 = a * a
    s2 = math.fsum(a2)
    if s2 == 0.0:
        raise InputError("scattering lengths are all zero")
    return math.sqrt(math.fsum(a2 * a2) / s2)


def _hypergeometric_terms(n, m, s, alpha2):
    """Terms (-1)^N s^(N-k) alpha^(2k) (-m)_k (-n)_k / ((c)_k k!), k = 0..min(n, m).

    Equal to (1 - 2 alpha^2)^N z^k times the F(-m, -n; c; z) coefficients with
    c = (1 - n - m)/2 and z = alpha^2 / (2 alpha^2 - 1), rewritten so no
    intermediate overflows when s = 2 alpha^2 - 1 is tiny or huge.
    """
    big_n = (n + m) // 2
    c = mpmath.mpf(1 - n - m) / 2
    u = (-1) ** big_n * s**big_n
    terms = [u]
    ratio = alpha2 / s
    for k in range(min(n, m)):
        u = u * (k - m) * (k - n) / ((c + k) * (k + 1)) * ratio
        terms.append(u)
    return terms


@lru_cache(maxsize=None)
def _overlap_cached(n, m, sigma, width):
    big_n = (n + m) // 2
    dps = _START_DPS
    while True:
        with mpmath.workdps(dps):
            s = mpmath.mpf(sigma) ** 2 / (2 * mpmath.mpf(width) ** 2)
            alpha2 = (1 + s) / 2
            terms = _hypergeometric_terms(n, m, s, alpha2)
            total = mpmath.fsum(terms)
            scale = mpmath.fsum(abs(t) for t in terms)
            lost = float(mpmath.log10(scale / abs(total))) if total != 0 else float(dps)
            if dps - lost >= _KEPT_DIGITS:
                log_pref = (
                    mpmath.loggamma(big_n + mpmath.mpf(1) / 2)
                    - mpmath.log(2 * mpmath.pi) / 2
                    - (mpmath.loggamma(n + 1) + mpmath.loggamma(m + 1)) / 2
                    - (2 * big_n + 1) * mpmath.log(alpha2) / 2
                )
                value = float(mpmath.exp(log_pref) * total)
                if not math.isfinite(value):
                    raise NumericError(f"overlap I[{n},{m}] is not finite")
                return value
            dps = int(lost) + _KEPT_DIGITS + 10


def overlap_integral(n, m, sigma, width):
    """I_{n,m} for oscillator length ``sigma`` and Gaussian width ``width``.

    Zero when n + m is odd. The series has min(n, m) + 1 terms; it is summed in
    extended precision, raised until at least 22 significant digits survive the
    alternating-sign cancellation that sets in for narrow Gaussians.
    """
    n, m = int(n), int(m)
    if n < 0 or m < 0:
        raise InputError("oscillator indices must be nonnegative")
    check_positive(sigma, "sigma")
    check_positive(width, "width")
    if (n + m) % 2:
        return 0.0
    if n > m:
        n, m = m, n
    return _overlap_cached(n, m, float(sigma), float(width))


def overlap_table(n_max, sigma, width):
    """Symmetric (n_max+1) x (n_max+1) array of I_{n,m}."""
    size = int(n_max) + 1
    table = np.zeros((size, size))
    for n in range(size):
        for m in range(n, size, 2):
            table[n, m] = table[m, n] = overlap_integral(n, m, sigma, width)
    return table


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """T_{n,m} = I_x I_y I_z / (2 pi w^2)^(3/2) over a basis (oscillator units)."""

    matrix: np.ndarray
    sigmas: np.ndarray
    width: float

    @property
    def alphas(self):
        return np.sqrt((1.0 + self.sigmas**2 / (2.0 * self.width**2)) / 2.0)


def coupling_matrix(basis: BasisSet, trap: TrapFrequencies, potential: GaussianPotential) -> CouplingMatrix:
    """Gaussian-potential coupling matrix; ``potential.width`` in oscillator lengths."""
    if len(basis) == 0:
        raise InputError("basis is empty")
    sigmas = trap.oscillator_lengths
    modes = basis.modes
    matrix = np.full((len(basis), len(basis)), potential.normalization)
    for axis in range(3):
        table = overlap_table(modes[:, axis].max(), sigmas[axis], potential.width)
        idx = modes[:, axis]
        matrix *= table[np.ix_(idx, idx)]
    bad = np.argwhere(~np.isfinite(matrix))
    if bad.size:
        i, j = bad[0]
        raise NumericError(f"non-finite coupling between modes {tuple(modes[i])} and {tuple(modes[j])}")
    return CouplingMatrix(matrix=matrix, sigmas=sigmas, width=float(potential.width))


def oscillator_at_origin(n, sigma):
    """phi_n(0) for a 1-D oscillator eigenfunction with length ``sigma``."""
    n = int(n)
    if n % 2:
        return 0.0
    half = n // 2
    log_mag = 0.5 * math.lgamma(n + 1) - math.lgamma(half + 1) - half * math.log(2.0)
    return (-1) ** half * math.exp(log_mag) / (math.pi**0.25 * math.sqrt(sigma))


def delta_coupling_vector(basis: BasisSet, trap: TrapFrequencies) -> np.ndarray:
    """phi_n(0) = phi_nx(0) phi_ny(0) phi_nz(0) for every basis mode."""
    if len(basis) == 0:
        raise InputError("basis is empty")
    sigmas = trap.oscillator_lengths
    out = np.ones(len(basis))
    for axis in range(3):
        col = basis.modes[:, axis]
        values = np.array([oscillator_at_origin(k, sigmas[axis]) for k in range(col.max() + 1)])
        out *= values[col]
    return out


def delta_coupling_matrix(basis: BasisSet, trap: TrapFrequencies) -> CouplingMatrix:
    """Contact-potential coupling phi_n(0) phi_m(0) packaged like the Gaussian one."""
    phi = delta_coupling_vector(basis, trap)
    return CouplingMatrix(matrix=np.outer(phi, phi), sigmas=trap.oscillator_lengths, width=0.0)


def total_cross_section(k, lengths: ScatteringLengths, model="gaussian", width=None):
    """Sum over F channels of the low-energy Born cross section (Bohr units).

    ``model`` is ``"gaussian"`` (width defaults to :func:`gaussian_width`) or
    ``"delta"``. Both reduce to 8 pi sum a_F^2 at k = 0.
    """
    k = check_nonnegative(k, "k")
    a = lengths.as_array()
    if model == "gaussian":
        w = gaussian_width(lengths) if width is None else check_positive(width, "width")
        x = 2.0 * (k * w) ** 2
        factor = 1.0 if x == 0.0 else -math.expm1(-x) / x
        return 8.0 * math.pi * math.fsum(a * a) * factor
    if model == "delta":
        return 8.0 * math.pi * math.fsum(a * a / (1.0 + (k * a) ** 2))
    raise InputError(f"unknown scattering model {model!r}")
