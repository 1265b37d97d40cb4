import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinpair.basis import (
    PARITY_CLASSES,
    basis_for_capture,
    boltzmann_probability,
    cutoff_for_capture,
    enumerate_basis,
    frozen_fraction,
    mode_energy,
    partition_functions,
    partition_functions_from_beta,
    thermal_distribution,
)
from spinpair.exceptions import InputError
from spinpair.units import TrapFrequencies

FIG3_TRAP = TrapFrequencies.from_khz(8.9, 55.5, 56.055)


def brute_axis_sums(x):
    """Even and odd single-axis sums of exp(-x (n + 1/2)), summed term by term."""
    terms = int(60.0 / x) + 50
    even = math.fsum(math.exp(-x * (n + 0.5)) for n in range(0, terms, 2))
    odd = math.fsum(math.exp(-x * (n + 0.5)) for n in range(1, terms, 2))
    return even, odd


beta = st.floats(0.05, 20.0)


@given(beta, beta, beta)
def test_partition_function_matches_brute_sum(x, y, z):
    pf = partition_functions_from_beta([x, y, z])
    sums = [brute_axis_sums(v) for v in (x, y, z)]
    for k in range(3):
        assert pf.z_even[k] == pytest.approx(sums[k][0], rel=1e-12)
        assert pf.z_odd[k] == pytest.approx(sums[k][1], rel=1e-12)
    total = math.fsum(
        sums[0][px] * sums[1][py] * sums[2][pz] for px, py, pz in PARITY_CLASSES
    )
    assert pf.z == pytest.approx(total, rel=1e-12)


def test_frozen_fraction_reference_trap():
    trap = TrapFrequencies.from_khz(8.9, 55.5, 1.01 * 55.5)
    assert frozen_fraction(trap, 44e-6) == pytest.approx(0.733, abs=1e-3)


def test_frozen_fraction_limits():
    # Quantum limit: only (0,0,0) is populated. Classical limit: three of four classes.
    assert frozen_fraction(FIG3_TRAP, 1e-9) < 1e-12
    assert frozen_fraction(FIG3_TRAP, 1.0) == pytest.approx(0.75, abs=1e-4)


def test_basis_is_even_sorted_and_complete():
    basis = enumerate_basis(FIG3_TRAP, 12.0)
    assert np.all(basis.modes.sum(axis=1) % 2 == 0)
    assert np.all(np.diff(basis.energies) >= 0)
    assert np.all(basis.energies <= 12.0)
    brute = [
        n for n in product(range(40), repeat=3)
        if sum(n) % 2 == 0 and mode_energy(np.array(n), FIG3_TRAP) <= 12.0
    ]
    assert len(brute) == len(basis)


def test_basis_below_ground_state_rejected():
    with pytest.raises(InputError):
        enumerate_basis(FIG3_TRAP, 0.1)


def test_ground_state_only_basis():
    ground = 0.5 * FIG3_TRAP.ratios.sum()
    basis = enumerate_basis(FIG3_TRAP, ground)
    assert len(basis) == 1
    assert basis.modes[0].tolist() == [0, 0, 0]


def test_boltzmann_probability_rejects_odd_parity():
    with pytest.raises(InputError):
        boltzmann_probability([1, 0, 0], FIG3_TRAP, 2e-6)


@pytest.mark.parametrize("temperature", [0.5e-6, 2e-6, 5e-6])
def test_capture_cutoff_is_minimal(temperature):
    capture = 0.999
    basis = basis_for_capture(FIG3_TRAP, temperature, capture)
    assert thermal_distribution(basis, FIG3_TRAP, temperature).captured_weight >= capture
    below = basis.energies[basis.energies < basis.e_cut]
    if below.size:
        smaller = enumerate_basis(FIG3_TRAP, below.max())
        assert thermal_distribution(smaller, FIG3_TRAP, temperature).captured_weight < capture


def test_probabilities_sum_to_one_in_large_basis():
    temperature = 1e-6
    basis = enumerate_basis(FIG3_TRAP, cutoff_for_capture(FIG3_TRAP, temperature, 1 - 1e-12))
    assert thermal_distribution(basis, FIG3_TRAP, temperature).captured_weight == pytest.approx(1.0, abs=1e-11)


def test_partition_function_uses_trap():
    pf = partition_functions(FIG3_TRAP, 2e-6)
    assert pf.beta_hbar_omega[0] < pf.beta_hbar_omega[1] < pf.beta_hbar_omega[2]
