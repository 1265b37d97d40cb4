"""Physical constants and the conversion layer between lab and simulation units.

Simulations run in oscillator units: hbar = mu = omega_bar = 1, where mu is the
reduced mass of the atom pair and omega_bar the geometric-mean trap frequency.
Lengths are then measured in ``sqrt(hbar / (mu * omega_bar))``, energies in
``hbar * omega_bar`` and times in ``1 / omega_bar``.

A second unit system, ``BOHR_UNITS``, measures lengths in Bohr radii and picks
the coupling unit so that ``4 pi hbar^2 a / m`` is numerically equal to ``a``.
It is convenient for checking coupling coefficients against closed forms.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import constants

from ._validation import check_positive

HBAR = constants.hbar
K_B = constants.k
BOHR_RADIUS = constants.physical_constants["Bohr radius"][0]
ATOMIC_MASS_UNIT = constants.physical_constants["atomic mass constant"][0]

#: Atomic mass of 85Rb in unified atomic mass units (AME2016).
RB85_MASS_U = 84.911789738
RB85_MASS = RB85_MASS_U * ATOMIC_MASS_UNIT
REDUCED_MASS = RB85_MASS / 2

#: Quadratic Zeeman rates of the S|1,-1> and S|2,-2> pair states, Hz/G^2.
Q1_ZEEMAN = 143.776
Q2_ZEEMAN = 575.104

#: s-wave scattering lengths of 85Rb f=2 pairs (F = 0, 2, 4), Bohr radii.
RB85_SCATTERING_LENGTHS = (-740.0, -570.0, -390.0)
RB85_SCATTERING_UNCERTAINTIES = (60.0, 50.0, 20.0)


@dataclass(frozen=True)
class TrapFrequencies:
    """Angular trap frequencies (rad/s) of the relative-motion oscillator."""

    omega_x: float
    omega_y: float
    omega_z: float

    def __post_init__(self):
        for name in ("omega_x", "omega_y", "omega_z"):
            check_positive(getattr(self, name), name)

    @classmethod
    def from_khz(cls, fx, fy, fz):
        """Build from ordinary frequencies given in kHz."""
        two_pi_khz = 2e3 * np.pi
        return cls(two_pi_khz * fx, two_pi_khz * fy, two_pi_khz * fz)

    @classmethod
    def isotropic(cls, omega):
        return cls(omega, omega, omega)

    @property
    def omega(self):
        return np.array([self.omega_x, self.omega_y, self.omega_z])

    @property
    def omega_bar(self):
        return float(np.prod(self.omega) ** (1.0 / 3.0))

    @property
    def ratios(self):
        """omega_i / omega_bar, i.e. per-axis quanta in oscillator energy units."""
        return self.omega / self.omega_bar

    @property
    def oscillator_lengths(self):
        """sigma_i = sqrt(hbar / (mu omega_i)) in oscillator length units."""
        return 1.0 / np.sqrt(self.ratios)

    def beta_hbar_omega(self, temperature):
        """Per-axis hbar omega_i / (k_B T) for a temperature in kelvin."""
        temperature = check_positive(temperature, "temperature")
        return HBAR * self.omega / (K_B * temperature)

    def khz(self):
        return tuple(float(w / (2e3 * np.pi)) for w in self.omega)


@dataclass(frozen=True)
class UnitSystem:
    """Linear conversions from lab quantities into one simulation unit system.

    ``length_bohr`` is the size of one length unit in Bohr radii,
    ``coupling_per_bohr`` the value of ``4 pi hbar^2 a / m`` for ``a`` equal to
    one Bohr radius, and ``omega_unit`` one frequency unit in rad/s (``None``
    when the system carries no time scale).
    """

    name: str
    length_bohr: float
    coupling_per_bohr: float
    omega_unit: Optional[float] = None

    def length(self, bohr):
        return np.asarray(bohr, dtype=float) / self.length_bohr

    def coupling(self, bohr):
        return np.asarray(bohr, dtype=float) * self.coupling_per_bohr

    def _need_time_scale(self):
        if self.omega_unit is None:
            raise ValueError(f"unit system {self.name!r} has no time scale")
        return self.omega_unit

    def time(self, seconds):
        return np.asarray(seconds, dtype=float) * self._need_time_scale()

    def energy_from_rate(self, rate):
        """Energy ``hbar * rate`` for a rate in 1/s, in this system's energy unit."""
        return np.asarray(rate, dtype=float) / self._need_time_scale()

    def energy_from_temperature(self, kelvin):
        """``k_B T`` in this system's energy unit."""
        return K_B * np.asarray(kelvin, dtype=float) / (HBAR * self._need_time_scale())


BOHR_UNITS = UnitSystem("bohr", 1.0, 1.0, None)


def oscillator_units(trap: TrapFrequencies) -> UnitSystem:
    """Oscillator units (hbar = mu = omega_bar = 1) for ``trap``.

    With m = 2 mu, ``4 pi hbar^2 a / m`` becomes ``2 pi a`` once ``a`` is in
    oscillator lengths.
    """
    length_m = np.sqrt(HBAR / (REDUCED_MASS * trap.omega_bar))
    length_bohr = float(length_m / BOHR_RADIUS)
    return UnitSystem("oscillator", length_bohr, 2.0 * np.pi / length_bohr, trap.omega_bar)


def zeeman_shifts(b_field, units: UnitSystem):
    """Energy offsets hbar q1 B^2 and hbar q2 B^2 for a field in gauss."""
    b2 = float(b_field) ** 2
    return (
        float(units.energy_from_rate(Q1_ZEEMAN * b2)),
        float(units.energy_from_rate(Q2_ZEEMAN * b2)),
    )
