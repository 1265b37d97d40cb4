"""Spin-changing collision dynamics of two f = 2 atoms in an optical tweezer."""

__version__ = "0.1.0"

from .basis import BasisSet, enumerate_basis, frozen_fraction, partition_functions
from .dynamics import (
    SpectralPropagator,
    assemble_hamiltonian,
    evolve,
    groundstate_initial,
    postselect_entangled,
    reduced_density_matrix,
    thermal_populations,
)
from .exceptions import InputError, NumericError
from .measurement import DetectionModel, EjectionOutcome, chi_squared_uniformity, squeezing_from_outcomes
from .pseudopotential import GaussianPotential, coupling_matrix, gaussian_width, overlap_integral
from .rate_model import RateEquationModel, RateParams, fit_rate, rate_ratios, solve_rate_equations
from .simulator import SpinCollisionSimulator
from .spin_channels import CouplingTable, ScatteringLengths, coupling_table
from .trajectory import PopulationTrajectory
from .units import TrapFrequencies, oscillator_units
