"""Spin-channel coupling constants for pairs of f = 2 atoms.

Two spin-2 atoms starting in m = 0 can only reach the magnetization-zero pair
states |0,0>, S|1,-1> and S|2,-2> (S the exchange symmetrizer). Their contact
interaction is fixed by the three s-wave channels F = 0, 2, 4 and reduces to
six distinct coupling constants.
"""

import math
from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np

from ._validation import check_nonnegative
from .exceptions import InputError
from .units import BOHR_UNITS, RB85_SCATTERING_LENGTHS, RB85_SCATTERING_UNCERTAINTIES, UnitSystem

SPIN = 2
CHANNELS = (0, 2, 4)
SPIN_STATE_LABELS = ("|0,0>", "S|1,-1>", "S|2,-2>")


@dataclass(frozen=True)
class ScatteringLengths:
    """s-wave scattering lengths (Bohr radii) of the F = 0, 2, 4 channels."""

    a0: float
    a2: float
    a4: float
    uncertainties: tuple = None

    def __post_init__(self):
        for name in ("a0", "a2", "a4"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value == 0.0:
                raise InputError(f"scattering length {name} must be finite and nonzero, got {value!r}")
        if self.uncertainties is not None:
            if len(self.uncertainties) != 3:
                raise InputError("uncertainties must hold three values")
            for u in self.uncertainties:
                check_nonnegative(u, "scattering-length uncertainty")

    @classmethod
    def rb85(cls):
        return cls(*RB85_SCATTERING_LENGTHS, uncertainties=RB85_SCATTERING_UNCERTAINTIES)

    def as_array(self):
        return np.array([self.a0, self.a2, self.a4], dtype=float)


@dataclass(frozen=True)
class CouplingTable:
    """The six distinct g_{m1,m2}^{m3,m4} reachable from |0,0>."""

    g00_00: float
    g00_1m1: float
    g00_2m2: float
    g1m1_1m1: float
    g1m1_2m2: float
    g2m2_2m2: float

    def as_dict(self):
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}


def _check_m(j, m, label):
    if j < 0 or abs(m) > j:
        raise InputError(f"invalid quantum numbers {label}: j={j}, m={m}")


def clebsch_gordan(j1, m1, j2, m2, j, m):
    """<j1 m1; j2 m2 | j m> for integer angular momenta, Condon-Shortley phase.

    Evaluated from the Racah formula in exact rational arithmetic; only the
    final square root is taken in floating point.
    """
    args = (j1, m1, j2, m2, j, m)
    if any(int(a) != a for a in args):
        raise InputError("clebsch_gordan only supports integer angular momenta")
    j1, m1, j2, m2, j, m = (int(a) for a in args)
    _check_m(j1, m1, "(j1, m1)")
    _check_m(j2, m2, "(j2, m2)")
    _check_m(j, m, "(j, m)")
    if not abs(j1 - j2) <= j <= j1 + j2:
        raise InputError(f"triangle condition violated for j1={j1}, j2={j2}, j={j}")
    if m1 + m2 != m:
        return 0.0

    f = math.factorial
    norm = Fraction(
        (2 * j + 1) * f(j + j1 - j2) * f(j - j1 + j2) * f(j1 + j2 - j),
        f(j1 + j2 + j + 1),
    )
    norm *= f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)

    k_min = max(0, j2 - j - m1, j1 + m2 - j)
    k_max = min(j1 + j2 - j, j1 - m1, j2 + m2)
    total = Fraction(0)
    for k in range(k_min, k_max + 1):
        denom = (
            f(k) * f(j1 + j2 - j - k) * f(j1 - m1 - k) * f(j2 + m2 - k)
            * f(j - j2 + m1 + k) * f(j - j1 - m2 + k)
        )
        total += Fraction((-1) ** k, denom)
    if total == 0:
        return 0.0
    return math.copysign(math.sqrt(total * total * norm), total)


def _channel_constants(g):
    g = tuple(float(x) for x in g)
    if len(g) != 3:
        raise InputError("need one coupling constant per channel F = 0, 2, 4")
    return g


def coupling_coefficient_general(m1, m2, m3, m4, g):
    """g_{m1,m2}^{m3,m4} = sum_F g_F <m3,m4|F,M><F,M|m1,m2> for two spin-2 atoms.

    ``g`` holds (g0, g2, g4). Returns 0 whenever magnetization is not conserved.
    """
    for m in (m1, m2, m3, m4):
        if int(m) != m or abs(m) > SPIN:
            raise InputError(f"m must be an integer in [-{SPIN}, {SPIN}], got {m!r}")
    g = _channel_constants(g)
    if m1 + m2 != m3 + m4:
        return 0.0
    mtot = m1 + m2
    terms = []
    for gF, F in zip(g, CHANNELS):
        if abs(mtot) > F:
            continue
        terms.append(
            gF * clebsch_gordan(SPIN, m3, SPIN, m4, F, mtot) * clebsch_gordan(SPIN, m1, SPIN, m2, F, mtot)
        )
    return math.fsum(terms)


def coupling_table(lengths: ScatteringLengths, units: UnitSystem = BOHR_UNITS) -> CouplingTable:
    """Closed-form coupling constants from scattering lengths."""
    return closed_form_table(*units.coupling(lengths.as_array()))


def closed_form_table(g0, g2, g4) -> CouplingTable:
    """Coupling table from channel constants; works elementwise on arrays."""
    return CouplingTable(
        g00_00=(7 * g0 + 10 * g2 + 18 * g4) / 35,
        g00_1m1=(-7 * g0 - 5 * g2 + 12 * g4) / 35,
        g00_2m2=(7 * g0 - 10 * g2 + 3 * g4) / 35,
        g1m1_1m1=(14 * g0 + 5 * g2 + 16 * g4) / 70,
        g1m1_2m2=(-7 * g0 + 5 * g2 + 2 * g4) / 35,
        g2m2_2m2=(14 * g0 + 20 * g2 + g4) / 70,
    )


#: (m1, m2, m3, m4) index of each CouplingTable field in the general formula.
TABLE_INDICES = {
    "g00_00": (0, 0, 0, 0),
    "g00_1m1": (0, 0, 1, -1),
    "g00_2m2": (0, 0, 2, -2),
    "g1m1_1m1": (1, -1, 1, -1),
    "g1m1_2m2": (1, -1, 2, -2),
    "g2m2_2m2": (2, -2, 2, -2),
}


def coupling_table_from_cg(lengths: ScatteringLengths, units: UnitSystem = BOHR_UNITS) -> CouplingTable:
    """Same table as :func:`coupling_table`, summed term by term over Clebsch-Gordan products."""
    g = units.coupling(lengths.as_array())
    return CouplingTable(**{k: coupling_coefficient_general(*idx, g) for k, idx in TABLE_INDICES.items()})


def spin_block_matrix(table: CouplingTable) -> np.ndarray:
    """3x3 interaction matrix over (|0,0>, S|1,-1>, S|2,-2>)."""
    r2 = math.sqrt(2.0)
    a = r2 * table.g00_1m1
    b = r2 * table.g00_2m2
    c = 2.0 * table.g1m1_2m2
    return np.array(
        [
            [table.g00_00, a, b],
            [a, 2.0 * table.g1m1_1m1, c],
            [b, c, 2.0 * table.g2m2_2m2],
        ]
    )
