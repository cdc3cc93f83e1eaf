import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jjsim.dynamics import StateVector, evolve
from jjsim.errors import ConfigurationError, ContractViolation
from jjsim.operators import commutator, max_abs
from jjsim.qed import (
    QedSpec,
    dressed_spectrum,
    excitation_number,
    jc_hamiltonian,
    jc_state,
    rabi_trajectory,
    single_excitation_levels,
)


def test_uncoupled_levels():
    spec = QedSpec(1.0, 1.0, 0.0, fock_cutoff=4)
    vals = np.linalg.eigvalsh(jc_hamiltonian(spec).to_dense())
    # ground qubit at -1/2, excited at +1/2, plus n photons
    oracle = sorted(q + n for q in (-0.5, 0.5) for n in range(5))
    np.testing.assert_allclose(vals, oracle, atol=1e-14)


def test_resonant_doublet_splitting():
    g = 0.01
    levels = single_excitation_levels(QedSpec(1.0, 1.0, g))
    assert levels[1] - levels[0] == pytest.approx(2 * g, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.5, 2.0),
    st.floats(0.5, 2.0),
    st.floats(0.0, 0.3),
)
def test_doublet_matches_two_level_formula(bz, nu, g):
    levels = single_excitation_levels(QedSpec(bz, nu, g, fock_cutoff=3))
    delta = bz - nu
    assert levels[1] - levels[0] == pytest.approx(math.sqrt(delta**2 + 4 * g**2), abs=1e-12)


def test_excitation_number_conserved():
    spec = QedSpec(1.1, 0.9, 0.05, fock_cutoff=6)
    assert max_abs(commutator(jc_hamiltonian(spec), excitation_number(spec))) < 1e-14
    leaky = QedSpec(1.1, 0.9, 0.05, fock_cutoff=6, qubit_Bx=0.1)
    assert max_abs(commutator(jc_hamiltonian(leaky), excitation_number(leaky))) > 1e-3


def test_resonant_rabi_cosine():
    g = 0.01
    spec = QedSpec(1.0, 1.0, g, fock_cutoff=4)
    times = np.linspace(0, 2 * math.pi / g, 401)
    traj = rabi_trajectory(spec, times)
    np.testing.assert_allclose(traj.observables["P_e"], np.cos(g * times) ** 2, atol=1e-10)
    np.testing.assert_allclose(traj.observables["N_exc"], 1.0, atol=1e-12)
    np.testing.assert_allclose(traj.observables["P_e"] + traj.observables["n_phot"], 1.0, atol=1e-12)
    assert traj.warnings == []


def test_full_return_at_pi_over_g():
    g = 0.02
    traj = rabi_trajectory(QedSpec(1.0, 1.0, g, fock_cutoff=3), [0.0, math.pi / (2 * g), math.pi / g])
    np.testing.assert_allclose(traj.observables["P_e"], [1, 0, 1], atol=1e-10)


def test_detuned_minimum():
    g, delta = 0.01, 0.03
    spec = QedSpec(1.0 + delta, 1.0, g, fock_cutoff=3)
    omega = math.sqrt(delta**2 + 4 * g**2)
    times = np.linspace(0, 2 * math.pi / omega, 2001)
    pe = rabi_trajectory(spec, times).observables["P_e"]
    oracle = 1 - 4 * g**2 / omega**2 * np.sin(omega * times / 2) ** 2
    np.testing.assert_allclose(pe, oracle, atol=1e-10)
    assert pe.min() == pytest.approx(1 - g**2 / (g**2 + delta**2 / 4), abs=1e-6)


def test_halving_g_doubles_period():
    t = np.linspace(0, 400, 801)
    a = rabi_trajectory(QedSpec(1.0, 1.0, 0.02, 3), t).observables["P_e"]
    b = rabi_trajectory(QedSpec(1.0, 1.0, 0.01, 3), 2 * t).observables["P_e"]
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_diagonal_hamiltonian_is_phase_only():
    spec = QedSpec(1.3, 0.7, 0.0, fock_cutoff=3)
    psi = jc_state(spec, "e", 2)
    traj = evolve(jc_hamiltonian(spec), psi, [0, 1.5, 10.0])
    for state in traj.states:
        assert abs(state.overlap(psi)) == pytest.approx(1, abs=1e-12)
    energy = 0.5 * 1.3 * 1 + 2 * 0.7  # excited qubit (+B_z/2) and two photons
    assert traj.states[1].overlap(psi) == pytest.approx(np.exp(1j * energy * 1.5), abs=1e-12)


def test_cutoff_warning_for_coherent_drive():
    spec = QedSpec(1.0, 1.0, 0.3, fock_cutoff=2)
    amps = np.zeros(spec.space.total_dimension, complex)
    amps[[4, 5]] = 1 / math.sqrt(2)  # photons at the top level
    with pytest.warns(UserWarning):
        traj = rabi_trajectory(spec, [0.0, 1.0], StateVector(spec.space, amps))
    assert traj.warnings


def test_large_space_path_agrees():
    # enough Fock levels to push evolve onto the sparse stepping path; small
    # frequencies keep the operator norm, and so the cost, modest
    g, nu = 0.01, 1e-3
    spec = QedSpec(nu, nu, g, fock_cutoff=2100)
    assert spec.space.total_dimension > 4096
    times = np.linspace(0, math.pi / g, 5)
    traj = rabi_trajectory(spec, times)
    np.testing.assert_allclose(traj.observables["P_e"], np.cos(g * times) ** 2, atol=1e-9)


def test_dressed_spectrum_symmetry_and_dispersive_limit():
    g = 0.01
    grid = [-0.2, -0.05, 0.0, 0.05, 0.2]
    rows = dressed_spectrum(QedSpec(1.0, 1.0, g, fock_cutoff=3), grid, workers=2)
    assert [r.detuning for r in rows] == grid
    split = [r.splitting for r in rows]
    np.testing.assert_allclose(split, split[::-1], rtol=1e-12)
    assert split[2] == pytest.approx(2 * g, abs=1e-12)
    assert split[-1] == pytest.approx(math.sqrt(0.2**2 + 4 * g**2), abs=1e-12)
    # far detuned: the doublet is split by |Delta| plus twice the dispersive shift g^2/|Delta|
    assert split[-1] - 0.2 == pytest.approx(2 * g**2 / 0.2, rel=5e-3)
    for r in rows:
        assert list(r.levels) == sorted(r.levels)


def test_dressed_spectrum_serial_equals_parallel():
    spec = QedSpec(1.0, 1.0, 0.02, fock_cutoff=3)
    grid = np.linspace(-0.1, 0.1, 9)
    assert dressed_spectrum(spec, grid, 1) == dressed_spectrum(spec, grid, 3)


def test_input_validation():
    with pytest.raises(ConfigurationError):
        QedSpec(1.0, 1.0, 0.1, fock_cutoff=0)
    with pytest.raises(ConfigurationError):
        QedSpec(float("nan"), 1.0, 0.1)
    spec = QedSpec(1.0, 1.0, 0.1, fock_cutoff=2)
    with pytest.raises(ConfigurationError):
        jc_state(spec, "x")
    with pytest.raises(ConfigurationError):
        jc_state(spec, "e", 3)
    with pytest.raises(ConfigurationError):
        dressed_spectrum(spec, [0.0, float("inf")])
    with pytest.raises(ContractViolation):
        evolve(jc_hamiltonian(spec), jc_state(spec), [1.0, 0.0])
