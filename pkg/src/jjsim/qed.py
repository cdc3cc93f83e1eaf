"""Jaynes-Cummings model: one qubit and the array's center-of-mass mode.

The qubit is H_Q = -B^z sigma^z/2 - B^x sigma^x/2 with basis (up, down).  For
B^z > 0 the up state is the ground state |g> and down is the excited state
|e>.  The rotating-wave coupling -g (a sigma^+ + a^dag sigma^-) uses
sigma^+ = |e><g|, so resonance sits at B^z = nu_0 and the excitation number
a^dag a + |e><e| is conserved when B^x = 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import StateVector, Trajectory, check_cutoff, evolve
from .errors import ConfigurationError
from .operators import (
    Conserved,
    HilbertSpec,
    Operator,
    Oscillator,
    SectorProjector,
    TwoLevel,
    conserved_operator,
    embed,
    site_operator,
)

QUBIT, MODE = 0, 1
CUTOFF_BOUND = 1e-8
_SIGMA_RAISE = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><g|
_EXCITED = np.array([[0, 0], [0, 1]], dtype=complex)


@dataclass(frozen=True)
class QedSpec:
    qubit_Bz: float
    resonator_freq: float
    coupling_g: float
    fock_cutoff: int = 8
    qubit_Bx: float = 0.0

    def __post_init__(self):
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 1:
            raise ConfigurationError("fock_cutoff must be an integer >= 1")
        for name in ("qubit_Bz", "resonator_freq", "coupling_g", "qubit_Bx"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")

    @property
    def space(self) -> HilbertSpec:
        return HilbertSpec((TwoLevel(), Oscillator(self.fock_cutoff)))

    @property
    def detuning(self) -> float:
        return self.qubit_Bz - self.resonator_freq


def jc_hamiltonian(spec: QedSpec) -> Operator:
    space = spec.space
    sz = site_operator(space, QUBIT, "Sz")
    sx = site_operator(space, QUBIT, "Sx")
    n = site_operator(space, MODE, "NumOp")
    a = site_operator(space, MODE, "A")
    raise_q = embed(space, {QUBIT: _SIGMA_RAISE})
    coupling = raise_q @ a
    H = -spec.qubit_Bz * sz - spec.qubit_Bx * sx + spec.resonator_freq * n - spec.coupling_g * (coupling + coupling.dag())
    return H.as_hermitian()


def excitation_number(spec: QedSpec) -> Operator:
    return conserved_operator(spec.space, Conserved.EXCITATION_NUMBER)


def observables(spec: QedSpec) -> dict[str, Operator]:
    space = spec.space
    return {
        "P_e": embed(space, {QUBIT: _EXCITED}),
        "n_phot": site_operator(space, MODE, "NumOp"),
        "N_exc": excitation_number(spec),
    }


def jc_state(spec: QedSpec, qubit: str = "e", photons: int = 0) -> StateVector:
    if qubit not in ("g", "e"):
        raise ConfigurationError("qubit state must be 'g' or 'e'")
    if not 0 <= photons <= spec.fock_cutoff:
        raise ConfigurationError("photon number outside the Fock cutoff")
    return StateVector.basis(spec.space, (1 if qubit == "e" else 0, photons))


def rabi_trajectory(spec: QedSpec, times, psi0: StateVector | None = None) -> Trajectory:
    """Evolve (default from |e, 0>) recording P_e, <a^dag a> and <N_exc>."""
    psi0 = jc_state(spec) if psi0 is None else psi0
    traj = evolve(jc_hamiltonian(spec), psi0, times, observables(spec))
    for t, state in zip(traj.times, traj.states):
        msg = check_cutoff(spec.space, state.amplitudes, CUTOFF_BOUND, f"at t={t:g}")
        if msg:
            traj.warnings.append(msg)
            break
    return traj


def single_excitation_levels(spec: QedSpec) -> np.ndarray:
    """Eigenvalues of the one-excitation block {|e,0>, |g,1>} (B^x = 0 only)."""
    sector = SectorProjector.build(spec.space, Conserved.EXCITATION_NUMBER, 1)
    block = sector.restrict(jc_hamiltonian(spec)).toarray()
    return np.linalg.eigvalsh(block)


@dataclass(frozen=True)
class SpectroscopyRow:
    detuning: float
    levels: tuple[float, float, float, float]
    splitting: float


def _spectroscopy_row(template: QedSpec, delta: float) -> SpectroscopyRow:
    spec = replace(template, qubit_Bz=template.resonator_freq + delta)
    levels = np.linalg.eigvalsh(jc_hamiltonian(spec).to_dense())[:4]
    if spec.qubit_Bx == 0:
        doublet = single_excitation_levels(spec)
        splitting = float(doublet[1] - doublet[0])
    else:
        splitting = float(levels[2] - levels[1])
    return SpectroscopyRow(float(delta), tuple(float(x) for x in levels), splitting)


def dressed_spectrum(spec_template: QedSpec, detuning_grid, workers: int = 1) -> list[SpectroscopyRow]:
    """Lowest four dressed levels and the one-excitation splitting per detuning."""
    grid = [float(d) for d in detuning_grid]
    if not all(math.isfinite(d) for d in grid):
        raise ConfigurationError("detuning grid must be finite")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda d: _spectroscopy_row(spec_template, d), grid))
    return [_spectroscopy_row(spec_template, d) for d in grid]
