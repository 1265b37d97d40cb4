"""Even-parity relative-motion eigenbasis of the anisotropic harmonic trap.

Energies are in units of hbar * omega_bar (see :mod:`spinpair.units`). Only
modes with (-1)^(nx+ny+nz) = +1 are admitted: the spatial part of a pair in a
symmetric spin state must itself be exchange symmetric.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive, check_probability
from .exceptions import InputError
from .units import TrapFrequencies

#: Parity patterns (nx, ny, nz) mod 2 that make up the even-parity space.
PARITY_CLASSES = ((0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1))


def mode_energy(n, trap: TrapFrequencies):
    """hbar omega_x (nx + 1/2) + hbar omega_y (ny + 1/2) + hbar omega_z (nz + 1/2)."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise InputError("mode indices must be nonnegative")
    return _weighted_sum(n + 0.5, trap.ratios)


def _weighted_sum(rows, weights):
    # Explicit per-axis sum so every row is evaluated in the same order (no BLAS).
    rows = np.asarray(rows, dtype=float)
    return rows[..., 0] * weights[0] + rows[..., 1] * weights[1] + rows[..., 2] * weights[2]


def is_even_parity(n):
    return int(np.sum(n)) % 2 == 0


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Ordered even-parity modes with energy at or below ``e_cut``."""

    modes: np.ndarray
    energies: np.ndarray
    e_cut: float

    def __len__(self):
        return len(self.modes)

    def max_index(self):
        return self.modes.max(axis=0)

    def parity_labels(self):
        """Index into PARITY_CLASSES for every mode."""
        pattern = self.modes % 2
        labels = np.empty(len(self), dtype=int)
        for k, cls in enumerate(PARITY_CLASSES):
            labels[np.all(pattern == cls, axis=1)] = k
        return labels

    def index_of(self, n):
        hits = np.flatnonzero(np.all(self.modes == np.asarray(n), axis=1))
        if hits.size == 0:
            raise KeyError(tuple(n))
        return int(hits[0])

    def summary(self):
        return {
            "n_modes": len(self),
            "e_cut": float(self.e_cut),
            "max_index": [int(v) for v in self.max_index()],
        }


def _candidate_modes(trap, e_cut):
    r = trap.ratios
    rest = e_cut - 0.5 * r.sum()
    nmax = np.floor(rest / r).astype(int) + 1
    nx, ny, nz = np.meshgrid(*(np.arange(k + 1) for k in nmax), indexing="ij")
    modes = np.stack([nx.ravel(), ny.ravel(), nz.ravel()], axis=1)
    modes = modes[modes.sum(axis=1) % 2 == 0]
    energies = _weighted_sum(modes + 0.5, r)
    keep = energies <= e_cut
    return modes[keep], energies[keep]


def enumerate_basis(trap: TrapFrequencies, e_cut) -> BasisSet:
    """All even-parity modes with energy <= ``e_cut`` (hbar omega_bar units).

    Ordered by energy, ties broken lexicographically on (nx, ny, nz).
    """
    e_cut = float(e_cut)
    ground = 0.5 * trap.ratios.sum()
    if not e_cut >= ground:
        raise InputError(f"e_cut={e_cut} lies below the ground-state energy {ground}")
    modes, energies = _candidate_modes(trap, e_cut)
    order = np.lexsort((modes[:, 2], modes[:, 1], modes[:, 0], energies))
    return BasisSet(modes=modes[order], energies=energies[order], e_cut=e_cut)


@dataclass(frozen=True)
class PartitionFunctions:
    """Even/odd single-axis sums and the total even-parity partition function.

    ``z_even``, ``z_odd`` and ``z`` are the plain sums. The ``*_reduced``
    variants are multiplied by exp(beta * ground-state energy) so they stay
    finite deep in the quantum regime.
    """

    beta_hbar_omega: np.ndarray
    z_even_reduced: np.ndarray
    z_odd_reduced: np.ndarray
    z_reduced: float
    frozen_reduced: float

    @property
    def ground_factor(self):
        return math.exp(-0.5 * float(self.beta_hbar_omega.sum()))

    @property
    def z_even(self):
        return self.z_even_reduced * np.exp(-0.5 * self.beta_hbar_omega)

    @property
    def z_odd(self):
        return self.z_odd_reduced * np.exp(-0.5 * self.beta_hbar_omega)

    @property
    def z(self):
        return self.z_reduced * self.ground_factor


def partition_functions_from_beta(beta_hbar_omega) -> PartitionFunctions:
    x = np.asarray(beta_hbar_omega, dtype=float)
    if x.shape != (3,) or np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise InputError("beta * hbar * omega_i must be three finite positive numbers")
    denom = -np.expm1(-2.0 * x)
    ze = 1.0 / denom
    zo = np.exp(-x) / denom
    eee = ze[0] * ze[1] * ze[2]
    frozen = zo[0] * zo[1] * ze[2] + zo[0] * ze[1] * zo[2] + ze[0] * zo[1] * zo[2]
    return PartitionFunctions(x, ze, zo, float(eee + frozen), float(frozen))


def partition_functions(trap: TrapFrequencies, temperature) -> PartitionFunctions:
    """Closed-form even-parity partition function of the relative motion."""
    return partition_functions_from_beta(trap.beta_hbar_omega(temperature))


def boltzmann_probability(n, trap: TrapFrequencies, temperature):
    """Canonical probability of the even-parity mode ``n``."""
    n = np.asarray(n)
    if not is_even_parity(n):
        raise InputError(f"mode {tuple(int(v) for v in n)} has odd exchange parity")
    pf = partition_functions(trap, temperature)
    return math.exp(-float(_weighted_sum(n, pf.beta_hbar_omega))) / pf.z_reduced


def frozen_fraction(trap: TrapFrequencies, temperature):
    """Thermal weight of the mixed-parity classes (one even, two odd axes).

    A contact interaction cannot move these members out of |0,0>.
    """
    pf = partition_functions(trap, temperature)
    return pf.frozen_reduced / pf.z_reduced


@dataclass(frozen=True, eq=False)
class ThermalDistribution:
    """Boltzmann weights of a basis at one temperature."""

    temperature: float
    beta_hbar_omega: np.ndarray
    probabilities: np.ndarray
    partition: PartitionFunctions

    @property
    def captured_weight(self):
        return float(math.fsum(self.probabilities))

    def normalized(self):
        """Weights renormalized to sum to one over the truncated basis."""
        return self.probabilities / self.captured_weight


def thermal_distribution(basis: BasisSet, trap: TrapFrequencies, temperature) -> ThermalDistribution:
    temperature = check_positive(temperature, "temperature")
    pf = partition_functions(trap, temperature)
    excitation = _weighted_sum(basis.modes, pf.beta_hbar_omega)
    probs = np.exp(-excitation) / pf.z_reduced
    return ThermalDistribution(temperature, pf.beta_hbar_omega, probs, pf)


def cutoff_for_capture(trap: TrapFrequencies, temperature, capture=0.999):
    """Smallest energy cutoff whose basis holds at least ``capture`` of the thermal weight."""
    capture = check_probability(capture, "capture")
    if capture >= 1.0:
        raise InputError("capture must be < 1")
    pf = partition_functions(trap, temperature)
    ground = 0.5 * trap.ratios.sum()
    kT = float(trap.ratios[0] / pf.beta_hbar_omega[0])
    span = max(4.0 * kT, 2.0 * trap.ratios.max())
    while True:
        modes, energies = _candidate_modes(trap, ground + span)
        order = np.argsort(energies, kind="stable")
        energies = energies[order]
        weights = np.exp(-_weighted_sum(modes[order], pf.beta_hbar_omega)) / pf.z_reduced
        cumulative = np.cumsum(weights)
        hit = np.flatnonzero(cumulative >= capture)
        if hit.size:
            return float(energies[hit[0]])
        span *= 1.5


def basis_for_capture(trap: TrapFrequencies, temperature, capture=0.999) -> BasisSet:
    return enumerate_basis(trap, cutoff_for_capture(trap, temperature, capture))
