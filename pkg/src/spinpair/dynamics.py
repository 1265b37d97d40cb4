"""Coupled spin and relative-motion dynamics of an atom pair.

The state is c = [c0, c1, c2]: one coefficient vector over the motional basis
for each pair spin state |0,0>, S|1,-1>, S|2,-2>. The Hamiltonian is

    H_ij = delta_ij (eps + zeeman_i) + G_ij T

with G the 3x3 spin block and T the motional coupling matrix. Evolution uses
a one-off eigendecomposition: c(t) = U exp(-i D t) U^T c(0).

Energies are in hbar*omega_bar and times in 1/omega_bar (oscillator units)
unless a :class:`~spinpair.units.UnitSystem` is passed to convert seconds.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, eigh
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from threadpoolctl import threadpool_limits

from ._validation import check_nonnegative, check_times
from .basis import BasisSet, TrapFrequencies, thermal_distribution
from .exceptions import InputError, NumericError
from .pseudopotential import CouplingMatrix
from .trajectory import PopulationTrajectory
from .units import UnitSystem, zeeman_shifts

N_SPIN = 3
# Time points handled per task; fixed so results do not depend on the worker count.
TIME_CHUNK = 32
# Time points per batch in single-state evolution; bounds memory at 3N x 256.
EVOLVE_CHUNK = 256


class CaptureWarning(UserWarning):
    """The truncated basis holds less thermal weight than requested."""


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    """Real symmetric (3N x 3N) Hamiltonian, spin-major block layout."""

    matrix: np.ndarray
    n_modes: int
    b_field: float = 0.0
    zeeman: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.matrix.shape != (N_SPIN * self.n_modes,) * 2:
            raise InputError(f"matrix shape {self.matrix.shape} does not match {self.n_modes} modes")

    def block(self, i, j):
        n = self.n_modes
        return self.matrix[i * n:(i + 1) * n, j * n:(j + 1) * n]

    def asymmetry(self):
        return float(np.max(np.abs(self.matrix - self.matrix.T)))


def assemble_hamiltonian(
    basis: BasisSet,
    coupling,
    spin_block,
    b_field=0.0,
    units: Optional[UnitSystem] = None,
) -> HamiltonianMatrix:
    """Build H from motional energies, coupling matrix T and the 3x3 spin block.

    ``coupling`` is a :class:`CouplingMatrix` or a bare (N x N) array. The
    quadratic Zeeman offsets need ``units`` to convert hbar q B^2 into the
    simulation energy unit; without units only ``b_field == 0`` is accepted.
    """
    T = coupling.matrix if isinstance(coupling, CouplingMatrix) else np.asarray(coupling, dtype=float)
    spin_block = np.asarray(spin_block, dtype=float)
    n = len(basis)
    if T.shape != (n, n):
        raise InputError(f"coupling matrix shape {T.shape} does not match basis size {n}")
    if spin_block.shape != (N_SPIN, N_SPIN) or np.any(spin_block != spin_block.T):
        raise InputError("spin block must be a symmetric 3x3 matrix")
    if np.any(T != T.T):
        raise InputError("coupling matrix must be exactly symmetric")
    b_field = check_nonnegative(b_field, "b_field")
    if units is None:
        if b_field != 0.0:
            raise InputError("a unit system is required to apply a nonzero field")
        shifts = (0.0, 0.0)
    else:
        shifts = zeeman_shifts(b_field, units)

    H = np.kron(spin_block, T)
    offsets = (0.0,) + tuple(shifts)
    diag = np.concatenate([basis.energies + off for off in offsets])
    H[np.diag_indices_from(H)] += diag
    return HamiltonianMatrix(matrix=H, n_modes=n, b_field=b_field, zeeman=tuple(shifts))


@dataclass(eq=False)
class SpinMotionState:
    """Complex coefficients over (spin, mode), spin-major."""

    coefficients: np.ndarray
    n_modes: int
    time: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != (N_SPIN * self.n_modes,):
            raise InputError("coefficient vector does not match 3 * n_modes")

    @classmethod
    def from_blocks(cls, c0, c1=None, c2=None):
        c0 = np.asarray(c0, dtype=complex)
        zero = np.zeros_like(c0)
        blocks = [c0, zero if c1 is None else c1, zero if c2 is None else c2]
        return cls(np.concatenate([np.asarray(b, dtype=complex) for b in blocks]), len(c0))

    @classmethod
    def mode(cls, index, n_modes, spin=0):
        c = np.zeros(N_SPIN * n_modes, dtype=complex)
        c[spin * n_modes + index] = 1.0
        return cls(c, n_modes)

    def blocks(self):
        return self.coefficients.reshape(N_SPIN, self.n_modes)

    def populations(self):
        return np.sum(np.abs(self.blocks()) ** 2, axis=1)

    def norm(self):
        return float(np.linalg.norm(self.coefficients))


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    times: np.ndarray
    populations: np.ndarray
    states: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class SpectralBlock:
    indices: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray


class SpectralPropagator:
    """Eigendecomposition of H split over its decoupled components.

    Parity makes H block diagonal (the Gaussian coupling never mixes modes
    whose per-axis parities differ), and the contact model leaves most modes
    fully uncoupled. Diagonalizing each connected component separately is
    cheaper and keeps uncoupled modes exact eigenvectors.
    """

    def __init__(self, hamiltonian: HamiltonianMatrix):
        self.hamiltonian = hamiltonian
        H = hamiltonian.matrix
        if not np.all(np.isfinite(H)):
            raise NumericError("Hamiltonian has non-finite entries")
        n_comp, labels = connected_components(csr_matrix(H != 0), directed=False)
        self.blocks = []
        for k in range(n_comp):
            idx = np.flatnonzero(labels == k)
            sub = H[np.ix_(idx, idx)]
            if len(idx) == 1:
                energies, vectors = sub[0].copy(), np.ones((1, 1))
            else:
                try:
                    energies, vectors = eigh(sub)
                except LinAlgError as exc:
                    raise NumericError(f"eigendecomposition failed: {exc}") from exc
            self.blocks.append(SpectralBlock(idx, energies, vectors))

    @property
    def n_modes(self):
        return self.hamiltonian.n_modes

    def eigenvalues(self):
        return np.sort(np.concatenate([b.energies for b in self.blocks]))

    def propagate(self, coefficients, tau):
        """State at time ``tau`` (simulation units) from ``coefficients`` at 0."""
        coefficients = np.asarray(coefficients, dtype=complex)
        if tau == 0:
            return coefficients.copy()
        out = np.zeros_like(coefficients)
        for b in self.blocks:
            amp = b.vectors.T @ coefficients[b.indices]
            out[b.indices] = b.vectors @ (np.exp(-1j * b.energies * tau) * amp)
        return out


def _to_simulation_times(times, units):
    times = check_times(times)
    return times if units is None else units.time(times)


def evolve(hamiltonian, initial: SpinMotionState, times, units: Optional[UnitSystem] = None,
           keep_states=False, propagator: Optional[SpectralPropagator] = None) -> EvolutionResult:
    """Evolve one pure state; ``times`` in seconds when ``units`` is given."""
    norm = initial.norm()
    if abs(norm - 1.0) > 1e-9:
        raise InputError(f"initial state is not normalized (norm {norm})")
    if propagator is None:
        propagator = SpectralPropagator(hamiltonian)
    times = check_times(times)
    taus = _to_simulation_times(times, units)
    n = initial.n_modes
    c0 = np.asarray(initial.coefficients, dtype=complex)
    pops = np.zeros((len(taus), N_SPIN))
    states = np.zeros((len(taus), N_SPIN * n), dtype=complex) if keep_states else None
    for b in propagator.blocks:
        amp = b.vectors.T @ c0[b.indices]
        # Blocks the state never enters stay empty.
        if not np.any(amp):
            continue
        spin = b.indices // n
        for start in range(0, len(taus), EVOLVE_CHUNK):
            chunk = slice(start, start + EVOLVE_CHUNK)
            phase = np.exp(-1j * np.outer(b.energies, taus[chunk]))
            c = b.vectors @ (phase * amp[:, None])
            weight = np.abs(c) ** 2
            for j in range(N_SPIN):
                pops[chunk, j] += weight[spin == j].sum(axis=0)
            if keep_states:
                states[chunk, b.indices] = c.T
    # Keep t = 0 exact.
    at_zero = taus == 0
    if np.any(at_zero):
        pops[at_zero] = initial.populations()
        if keep_states:
            states[at_zero] = c0
    return EvolutionResult(times=times, populations=pops, states=states)


def groundstate_initial(hamiltonian: HamiltonianMatrix) -> SpinMotionState:
    """Lowest eigenvector of the |0,0> diagonal block (eps + g00_00 T), placed in c0.

    The overall sign is fixed so the largest component is positive.
    """
    block = hamiltonian.block(0, 0)
    _, vectors = eigh(block, subset_by_index=[0, 0])
    v = vectors[:, 0]
    v = v / np.linalg.norm(v)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return SpinMotionState.from_blocks(v)


class ThermalKernel:
    """Precomputed contraction for Boltzmann-weighted spin populations.

    For member weights p on the |0,0> block, the population of spin j is

        P_j(t) = sum_kl Q^j_kl M_kl cos((D_k - D_l) t)

    with M = U0^T diag(p) U0 and Q^j = Uj^T Uj per decoupled component. The
    cosine splits as cos(a)cos(b) + sin(a)sin(b), so each time point costs two
    quadratic forms.
    """

    def __init__(self, propagator: SpectralPropagator, weights):
        n = propagator.n_modes
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (n,):
            raise InputError("need one thermal weight per basis mode")
        self.total = math.fsum(weights)
        self.parts = []
        for b in propagator.blocks:
            spin = b.indices // n
            mode = b.indices % n
            members = spin == 0
            if not members.any():
                continue
            U0 = b.vectors[members]
            M = (U0.T * weights[mode[members]]) @ U0
            R = []
            for j in range(N_SPIN):
                Uj = b.vectors[spin == j]
                R.append((Uj.T @ Uj) * M)
            self.parts.append((b.energies, R))

    def _chunk(self, taus):
        out = np.zeros((len(taus), N_SPIN))
        with threadpool_limits(limits=1):
            for energies, R in self.parts:
                phase = np.outer(energies, taus)
                cos, sin = np.cos(phase), np.sin(phase)
                for j in range(N_SPIN):
                    out[:, j] += np.sum(cos * (R[j] @ cos), axis=0) + np.sum(sin * (R[j] @ sin), axis=0)
        # Every member starts in |0,0>; keep t = 0 exact.
        out[taus == 0] = (self.total, 0.0, 0.0)
        return out

    def populations(self, taus, workers=1):
        taus = np.asarray(taus, dtype=float)
        chunks = [taus[i:i + TIME_CHUNK] for i in range(0, len(taus), TIME_CHUNK)]
        if workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(self._chunk, chunks))
        else:
            results = [self._chunk(c) for c in chunks]
        return np.concatenate(results, axis=0) if results else np.zeros((0, N_SPIN))


def thermal_populations(
    trap: TrapFrequencies,
    temperature,
    basis: BasisSet,
    hamiltonian: HamiltonianMatrix,
    times,
    units: Optional[UnitSystem] = None,
    capture_threshold=0.999,
    workers=1,
    propagator: Optional[SpectralPropagator] = None,
) -> PopulationTrajectory:
    """Boltzmann-averaged spin populations of pairs starting in |0,0>.

    Member weights are renormalized over the truncated basis so the three
    populations sum to one; a :class:`CaptureWarning` (also stored in
    ``notes``) flags a basis holding less than ``capture_threshold``.
    """
    thermal = thermal_distribution(basis, trap, temperature)
    notes = []
    if thermal.captured_weight < capture_threshold:
        msg = f"basis captures {thermal.captured_weight:.6f} of the thermal weight (< {capture_threshold})"
        warnings.warn(msg, CaptureWarning, stacklevel=2)
        notes.append(msg)
    if propagator is None:
        propagator = SpectralPropagator(hamiltonian)
    kernel = ThermalKernel(propagator, thermal.normalized())
    times = check_times(times)
    pops = kernel.populations(_to_simulation_times(times, units), workers=workers)
    return PopulationTrajectory(times, pops, notes=notes)


def thermal_snapshots(propagator: SpectralPropagator, members, tau):
    """Member states at ``tau`` as columns of a (3N x len(members)) array.

    Member k starts in |0,0> with motional mode ``members[k]``.
    """
    n = propagator.n_modes
    members = np.asarray(members, dtype=int)
    out = np.zeros((N_SPIN * n, len(members)), dtype=complex)
    if tau == 0:
        out[members, np.arange(len(members))] = 1.0
        return out
    column = {int(m): k for k, m in enumerate(members)}
    for b in propagator.blocks:
        start = b.indices[(b.indices < n) & np.isin(b.indices, members)]
        if start.size == 0:
            continue
        local = np.searchsorted(b.indices, start)
        cols = [column[int(m)] for m in start]
        amp = b.vectors[local].T * np.exp(-1j * b.energies * tau)[:, None]
        out[np.ix_(b.indices, cols)] = b.vectors @ amp
    return out


@dataclass(frozen=True, eq=False)
class ReducedDensityMatrix:
    """Spin density matrix over (|0,0>, |-1,1>, |1,-1>, |-2,2>, |2,-2>).

    ``blocks`` is the 3x3 matrix rho_ij = sum_n P(n) sum_m c^i_m(n) c^j_m(n)*
    over the symmetrized states, from which ``matrix`` is assembled.
    """

    matrix: np.ndarray
    blocks: np.ndarray

    def trace(self):
        return float(np.real(np.trace(self.matrix)))

    def hermiticity_error(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix).min())


def reduced_density_matrix(snapshots, weights) -> ReducedDensityMatrix:
    """Trace out the motion of a weighted ensemble of pure states.

    ``snapshots`` holds one member state per column (spin-major, 3N rows).
    """
    snapshots = np.asarray(snapshots, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    if snapshots.ndim != 2 or snapshots.shape[0] % N_SPIN:
        raise InputError("snapshots must be a (3N, members) array")
    if weights.shape != (snapshots.shape[1],) or np.any(weights < 0):
        raise InputError("need one nonnegative weight per ensemble member")
    n = snapshots.shape[0] // N_SPIN
    c = snapshots.reshape(N_SPIN, n, -1) * np.sqrt(weights)
    rho = np.einsum("imk,jmk->ij", c, c.conj())
    trace = float(np.real(np.trace(rho)))
    if abs(trace - 1.0) > 1e-6:
        raise NumericError(f"reduced density matrix has trace {trace}")
    return ReducedDensityMatrix(_embed_pair_states(rho), rho)


def _embed_pair_states(rho):
    # Every entry is written explicitly so the symmetric sub-blocks are exactly equal.
    r = 1.0 / math.sqrt(2.0)
    r00, r11, r22 = rho[0, 0].real, rho[1, 1].real, rho[2, 2].real
    r01, r02, r12 = rho[0, 1], rho[0, 2], rho[1, 2]
    out = np.empty((5, 5), dtype=complex)
    out[0, 0] = r00
    out[0, 1:3] = r * r01
    out[0, 3:5] = r * r02
    out[1:3, 0] = np.conj(r * r01)
    out[3:5, 0] = np.conj(r * r02)
    out[1:3, 1:3] = 0.5 * r11
    out[3:5, 3:5] = 0.5 * r22
    out[1:3, 3:5] = 0.5 * r12
    out[3:5, 1:3] = np.conj(0.5 * r12)
    return out


@dataclass(frozen=True)
class PostselectionResult:
    sector: int
    probability: float
    fidelity: float
    defined: bool


_SECTORS = {1: (1, 2), 2: (3, 4)}


def postselect_entangled(rho: ReducedDensityMatrix, sector) -> PostselectionResult:
    """Condition on the atoms being in m = +-``sector`` and compare with the symmetric Bell state.

    The fidelity is <B|rho_sub|B> / probability with B = (|m,-m> + |-m,m>)/sqrt(2).
    For an empty sector the fidelity is NaN and ``defined`` is False.
    """
    if sector not in _SECTORS:
        raise InputError("sector must be 1 or 2")
    i, j = _SECTORS[sector]
    sub = rho.matrix[np.ix_([i, j], [i, j])]
    probability = float(np.real(sub[0, 0] + sub[1, 1]))
    if probability <= 0.0:
        return PostselectionResult(sector, 0.0, float("nan"), False)
    overlap = float(np.real(sub.sum())) / 2.0
    return PostselectionResult(sector, probability, overlap / probability, True)
