"""State vectors, trajectories and unitary propagation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ContractViolation, SolverError
from .operators import DENSE_LIMIT, HERMITIAN_TOL, HilbertSpec, Operator, hermitian_deviation

NORM_TOL = 1e-10
NORM_DRIFT_TOL = 1e-9


class CutoffWarning(UserWarning):
    """Weight on the highest retained oscillator level exceeds the adequacy bound."""


@dataclass(frozen=True, eq=False)
class StateVector:
    space: HilbertSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.total_dimension,):
            raise ContractViolation(f"amplitude vector has shape {amps.shape}, space dimension is {self.space.total_dimension}")
        if abs(np.linalg.norm(amps) - 1) > NORM_TOL:
            raise ContractViolation(f"state is not normalized (norm {np.linalg.norm(amps):.12f})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, space: HilbertSpec, digits) -> "StateVector":
        amps = np.zeros(space.total_dimension, dtype=complex)
        amps[np.ravel_multi_index(tuple(digits), space.dims)] = 1
        return cls(space, amps)

    def expect(self, op: Operator) -> float:
        return op.expectation(self.amplitudes).real

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    observables: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ContractViolation("times and states differ in length")
        for name, series in self.observables.items():
            if len(series) != len(self.times):
                raise ContractViolation(f"observable {name!r} has wrong length")


def _check_hermitian(H: Operator):
    if not H.hermitian and hermitian_deviation(H.matrix) >= HERMITIAN_TOL:
        raise ContractViolation("evolution requires a Hermitian Hamiltonian")


def propagate(H: Operator, psi: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i H dt) psi using a scaled Taylor series (no dense exponential)."""
    return spla.expm_multiply(-1j * dt * H.matrix, psi)


def evolve(H: Operator, psi0: StateVector, times, observables: dict | None = None) -> Trajectory:
    """Propagate psi0 under the time-independent ``H`` onto the grid ``times``.

    Times are measured from ``times[0]``, where the state equals ``psi0``.
    Small spaces use the exact eigendecomposition; larger ones step between
    grid points with ``scipy.sparse.linalg.expm_multiply``.
    """
    _check_hermitian(H)
    if psi0.space != H.space:
        raise ContractViolation("state and Hamiltonian live on different spaces")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or np.any(np.diff(times) < 0):
        raise ContractViolation("time grid must be a non-empty ascending sequence")
    rel = times - times[0]
    if H.space.total_dimension <= DENSE_LIMIT:
        energies, vecs = np.linalg.eigh(H.to_dense())
        coeffs = vecs.conj().T @ psi0.amplitudes
        amps = (vecs @ (np.exp(-1j * np.outer(energies, rel)) * coeffs[:, None])).T
    else:
        amps = np.empty((len(times), H.space.total_dimension), dtype=complex)
        amps[0] = psi0.amplitudes
        for k in range(1, len(times)):
            amps[k] = propagate(H, amps[k - 1], rel[k] - rel[k - 1]) if rel[k] > rel[k - 1] else amps[k - 1]
    drift = np.max(np.abs(np.linalg.norm(amps, axis=1) - 1))
    if drift > NORM_DRIFT_TOL:
        raise SolverError(f"norm drift {drift:.3e} exceeds {NORM_DRIFT_TOL}")
    states = [StateVector(H.space, a) for a in amps]
    series = {}
    for name, op in (observables or {}).items():
        series[name] = np.array([np.vdot(a, op.matrix @ a).real for a in amps])
    return Trajectory(times, states, series)


def top_level_weight(space: HilbertSpec, amplitudes: np.ndarray) -> float:
    """Largest population of the highest retained level over all oscillator sites."""
    probs = np.abs(np.asarray(amplitudes)) ** 2
    digits = space.basis_digits()
    worst = 0.0
    for i in space.oscillator_indices():
        worst = max(worst, float(probs[digits[:, i] == space.sites[i].n_max].sum()))
    return worst


def check_cutoff(space: HilbertSpec, amplitudes, bound: float, where: str = "") -> str | None:
    w = top_level_weight(space, amplitudes)
    if w > bound:
        msg = f"top oscillator level population {w:.2e} exceeds {bound:.0e}{' ' + where if where else ''}; raise the cutoff"
        warnings.warn(msg, CutoffWarning, stacklevel=3)
        return msg
    return None
