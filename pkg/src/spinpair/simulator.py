"""Estimator-style front end that wires trap, basis, couplings and dynamics together."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .basis import basis_for_capture, enumerate_basis, thermal_distribution
from .dynamics import (
    SpectralPropagator,
    ThermalKernel,
    assemble_hamiltonian,
    evolve,
    groundstate_initial,
    reduced_density_matrix,
    thermal_populations,
    thermal_snapshots,
)
from .exceptions import InputError
from .pseudopotential import GaussianPotential, coupling_matrix, delta_coupling_matrix, gaussian_width
from .spin_channels import ScatteringLengths, coupling_table, spin_block_matrix
from .trajectory import PopulationTrajectory
from .units import RB85_SCATTERING_LENGTHS, TrapFrequencies, oscillator_units

BACKENDS = ("gaussian", "delta")
INITIAL_STATES = ("thermal", "groundstate")
# Dense float64 arrays alive during diagonalization: H, eigenvectors, LAPACK workspace.
_DENSE_COPIES = 3


def eigenproblem_bytes(n_modes):
    """Rough peak memory of the dense 3N x 3N eigendecomposition."""
    dim = 3 * int(n_modes)
    return _DENSE_COPIES * 8 * dim * dim


class SpinCollisionSimulator(BaseEstimator):
    """Spin-changing collision dynamics of an atom pair in one tweezer.

    ``fit`` builds the basis, coupling matrix and eigendecomposition; ``predict``
    returns spin populations (columns p00, p1m1, p2m2) at times in seconds.

    With ``initial="thermal"`` every basis mode starts in |0,0> with its
    Boltzmann weight at ``temperature_uk``. With ``initial="groundstate"`` the
    pair starts in the interacting motional ground state (zero temperature);
    ``temperature_uk`` then only sizes the basis unless ``e_cut`` is given.
    """

    def __init__(
        self,
        trap_khz=(8.9, 55.5, 56.055),
        temperature_uk=2.0,
        b_field=0.0,
        scattering_lengths=RB85_SCATTERING_LENGTHS,
        backend="gaussian",
        capture=0.999,
        e_cut=None,
        initial="thermal",
        memory_budget_mb=2048.0,
        allow_large=False,
        workers=1,
    ):
        self.trap_khz = trap_khz
        self.temperature_uk = temperature_uk
        self.b_field = b_field
        self.scattering_lengths = scattering_lengths
        self.backend = backend
        self.capture = capture
        self.e_cut = e_cut
        self.initial = initial
        self.memory_budget_mb = memory_budget_mb
        self.allow_large = allow_large
        self.workers = workers

    def _validate_params(self):
        if self.backend not in BACKENDS:
            raise InputError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.initial not in INITIAL_STATES:
            raise InputError(f"initial must be one of {INITIAL_STATES}, got {self.initial!r}")
        if len(self.trap_khz) != 3:
            raise InputError("trap_khz needs three frequencies")
        if int(self.workers) < 1:
            raise InputError("workers must be >= 1")

    def fit(self, X=None, y=None):
        self._validate_params()
        self.trap_ = TrapFrequencies.from_khz(*self.trap_khz)
        self.units_ = oscillator_units(self.trap_)
        self.lengths_ = ScatteringLengths(*self.scattering_lengths)
        temperature = self.temperature_uk * 1e-6
        if self.e_cut is None:
            self.basis_ = basis_for_capture(self.trap_, temperature, self.capture)
        else:
            self.basis_ = enumerate_basis(self.trap_, self.e_cut)
        needed = eigenproblem_bytes(len(self.basis_)) / 2**20
        if needed > self.memory_budget_mb and not self.allow_large:
            raise InputError(
                f"basis of {len(self.basis_)} modes needs about {needed:.0f} MiB for the eigenproblem, "
                f"over the {self.memory_budget_mb:.0f} MiB budget; set allow_large (--allow-large) to override"
            )

        if self.backend == "gaussian":
            width = float(self.units_.length(gaussian_width(self.lengths_)))
            self.coupling_ = coupling_matrix(self.basis_, self.trap_, GaussianPotential(width))
        else:
            self.coupling_ = delta_coupling_matrix(self.basis_, self.trap_)
        self.table_ = coupling_table(self.lengths_, self.units_)
        self.hamiltonian_ = assemble_hamiltonian(
            self.basis_, self.coupling_, spin_block_matrix(self.table_), self.b_field, self.units_
        )
        self.propagator_ = SpectralPropagator(self.hamiltonian_)
        self.thermal_ = thermal_distribution(self.basis_, self.trap_, temperature)
        self.captured_weight_ = self.thermal_.captured_weight
        self.n_modes_ = len(self.basis_)
        return self

    def trajectory(self, times) -> PopulationTrajectory:
        check_is_fitted(self, "propagator_")
        if self.initial == "groundstate":
            state = groundstate_initial(self.hamiltonian_)
            result = evolve(self.hamiltonian_, state, times, self.units_, propagator=self.propagator_)
            return PopulationTrajectory(result.times, result.populations)
        return thermal_populations(
            self.trap_, self.temperature_uk * 1e-6, self.basis_, self.hamiltonian_, times,
            self.units_, capture_threshold=self.capture, workers=int(self.workers),
            propagator=self.propagator_,
        )

    def predict(self, times):
        return self.trajectory(times).populations

    def thermal_kernel(self):
        check_is_fitted(self, "propagator_")
        return ThermalKernel(self.propagator_, self.thermal_.normalized())

    def density_matrix(self, time):
        """Reduced spin density matrix at ``time`` seconds."""
        check_is_fitted(self, "propagator_")
        tau = float(self.units_.time(time))
        if self.initial == "groundstate":
            state = groundstate_initial(self.hamiltonian_)
            column = self.propagator_.propagate(state.coefficients, tau)[:, None]
            return reduced_density_matrix(column, np.ones(1))
        members = np.arange(self.n_modes_)
        snapshots = thermal_snapshots(self.propagator_, members, tau)
        return reduced_density_matrix(snapshots, self.thermal_.normalized())
