import math
from dataclasses import replace

import numpy as np
import pytest

from jjsim.dynamics import StateVector
from jjsim.errors import ConfigurationError, ContractViolation, ResourceError
from jjsim.holstein import (
    HolsteinSpec,
    RampSchedule,
    adiabatic_ramp,
    cdw_structure_factor,
    cutoff_convergence,
    density_profile,
    fermion_number,
    ground_state,
    half_filling_sector,
    holstein_hamiltonian,
    holstein_hamiltonian_fermionic,
    phase_scan,
    solve_point,
    staggered_fields,
    staggered_product_state,
)
from jjsim.operators import commutator, max_abs


def free_fermion_oracle(N, t):
    """Ground energy and S_pi of the open free chain at half filling via Wick's theorem."""
    h = -t * (np.eye(N, k=1) + np.eye(N, k=-1))
    eps, phi = np.linalg.eigh(h)
    occ = phi[:, : N // 2]
    G = occ @ occ.T
    n = np.diag(G)
    # <(n_i - 1/2)(n_j - 1/2)> for a Slater determinant
    corr = np.outer(n - 0.5, n - 0.5) - G**2 + np.diag(n)
    signs = (-1.0) ** np.subtract.outer(np.arange(N), np.arange(N))
    return eps[: N // 2].sum(), 4 / N**2 * np.sum(signs * corr)


def test_free_limit_energy_and_structure_factor():
    spec = HolsteinSpec(4, 1.0, 1.0, 0.0, phonon_cutoff=1)
    E, (gs,) = ground_state(holstein_hamiltonian(spec), half_filling_sector(spec))
    e_oracle, s_oracle = free_fermion_oracle(4, 1.0)
    assert e_oracle == pytest.approx(-math.sqrt(5), abs=1e-14)
    assert E[0] == pytest.approx(e_oracle, abs=1e-10)
    assert cdw_structure_factor(gs) == pytest.approx(s_oracle, abs=1e-10)
    np.testing.assert_allclose(density_profile(gs), 0.5, atol=1e-10)


def test_free_limit_six_sites():
    spec = HolsteinSpec(6, 0.7, 1.0, 0.0, phonon_cutoff=1)
    E, (gs,) = ground_state(holstein_hamiltonian(spec), half_filling_sector(spec))
    e_oracle, s_oracle = free_fermion_oracle(6, 0.7)
    assert E[0] == pytest.approx(e_oracle, abs=1e-9)
    assert cdw_structure_factor(gs) == pytest.approx(s_oracle, abs=1e-9)


@pytest.mark.parametrize("g", [0.5, 1.0])
def test_atomic_limit(g):
    spec = HolsteinSpec(2, 0.0, 1.0, g, phonon_cutoff=10)
    E, _ = ground_state(holstein_hamiltonian(spec), half_filling_sector(spec))
    assert E[0] == pytest.approx(-2 * g**2 / 4, rel=1e-4)


def test_number_conserved_and_hermitian():
    for boundary in ("open", "periodic"):
        spec = HolsteinSpec(3, 0.8, 1.0, 0.6, boundary=boundary, phonon_cutoff=2, anharmonic=0.01, chemical_Bz=0.3)
        H = holstein_hamiltonian(spec)
        assert max_abs(commutator(H, fermion_number(spec))) < 1e-12
        assert max_abs(H - H.dag()) < 1e-14


@pytest.mark.parametrize("N,n_max,lam", [(2, 2, 0.0), (3, 2, 0.02), (4, 1, 0.0)])
def test_spin_and_fermion_forms_agree(N, n_max, lam):
    spec = HolsteinSpec(N, 0.9, 1.1, 0.7, phonon_cutoff=n_max, anharmonic=lam)
    assert max_abs(holstein_hamiltonian(spec) - holstein_hamiltonian_fermionic(spec)) < 1e-12


def test_fermionic_form_open_only():
    with pytest.raises(ContractViolation):
        holstein_hamiltonian_fermionic(HolsteinSpec(4, 1, 1, 0.5, boundary="periodic", phonon_cutoff=1))


def test_half_filled_density_uniform():
    spec = HolsteinSpec(4, 1.0, 1.0, 0.5, phonon_cutoff=2)
    E, (gs, _) = ground_state(holstein_hamiltonian(spec), half_filling_sector(spec), 2)
    assert E[1] - E[0] > 1e-3
    np.testing.assert_allclose(density_profile(gs), 0.5, atol=1e-10)


def test_particle_hole_spectrum():
    # staggered particle-hole map: n_i -> 1 - n_i, c_i -> (-1)^i c_i^dag, x_i -> -x_i
    spec = HolsteinSpec(4, 1.0, 1.0, 0.7, phonon_cutoff=2)
    H = holstein_hamiltonian(spec).to_dense()
    digits = spec.space.basis_digits()
    image = digits.copy()
    image[:, :4] = 1 - image[:, :4]
    perm = np.ravel_multi_index(tuple(image.T), spec.space.dims)
    phonon_parity = (-1.0) ** digits[:, 4:].sum(axis=1)
    U = np.zeros_like(H)
    U[perm, np.arange(len(perm))] = phonon_parity
    # the spin flip maps S^+ S^- bonds to S^- S^+, the hopping is invariant
    np.testing.assert_allclose(U @ H @ U.T, H, atol=1e-12)


def test_polaron_near_degeneracy():
    gaps = [solve_point(HolsteinSpec(2, 0.1, 1.0, g, phonon_cutoff=10)).excitation_gap for g in (0.0, 1.0, 2.0, 3.0)]
    assert gaps[0] == pytest.approx(0.2, abs=1e-12)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-4


def test_basis_state_observables():
    spec = HolsteinSpec(4, 1, 1, 0, phonon_cutoff=1)
    cdw = staggered_product_state(spec)
    np.testing.assert_array_equal(density_profile(cdw), [1, 0, 1, 0])
    assert cdw_structure_factor(cdw) == pytest.approx(1.0)
    full = StateVector.basis(spec.space, [0] * 8)
    np.testing.assert_array_equal(density_profile(full), [1, 1, 1, 1])
    assert cdw_structure_factor(full) == 0.0
    mixed = StateVector(spec.space, (cdw.amplitudes + full.amplitudes) / math.sqrt(2))
    assert cdw_structure_factor(mixed) == pytest.approx(0.5)


def test_cutoff_convergence_monotone():
    rows = cutoff_convergence(HolsteinSpec(2, 1.0, 1.0, 0.5), [1, 2, 4, 6, 8])
    energies = [e for _, e in rows]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    assert abs(energies[-1] - energies[-2]) < 1e-6


def test_quench_fidelity_is_initial_overlap():
    spec = HolsteinSpec(2, 1.0, 1.0, 0.5, phonon_cutoff=3)
    result = adiabatic_ramp(spec, RampSchedule(0.0, 10))
    _, (gs,) = ground_state(holstein_hamiltonian(spec), half_filling_sector(spec))
    assert result.fidelity == pytest.approx(abs(gs.overlap(staggered_product_state(spec))) ** 2, abs=1e-12)
    assert result.number_drift == 0.0


def test_slow_ramp_prepares_ground_state():
    spec = HolsteinSpec(2, 1.0, 1.0, 0.5, phonon_cutoff=3)
    fids = [adiabatic_ramp(spec, RampSchedule(T, 200, staggered_field=2.0)) for T in (10.0, 40.0)]
    assert fids[0].fidelity < fids[1].fidelity
    assert fids[1].fidelity > 0.99
    for r in fids:
        assert r.number_drift < 1e-10
        assert np.linalg.norm(r.state.amplitudes) == pytest.approx(1, abs=1e-12)
        assert r.warnings == []


@pytest.mark.filterwarnings("ignore::jjsim.dynamics.CutoffWarning")
def test_leakage_suppressed_by_large_field():
    base = HolsteinSpec(2, 1.0, 1.0, 0.5, phonon_cutoff=3, leakage_Bx=0.2)
    drifts = [adiabatic_ramp(replace(base, chemical_Bz=bz), RampSchedule(10.0, 50)).number_drift for bz in (0.0, 5.0, 20.0)]
    assert drifts[0] > 0.1
    assert drifts[0] > drifts[1] > drifts[2]


def test_leaky_hamiltonian_rejected_by_sector_solver():
    spec = HolsteinSpec(2, 1.0, 1.0, 0.5, phonon_cutoff=2, leakage_Bx=0.1)
    with pytest.raises(ContractViolation):
        ground_state(holstein_hamiltonian(spec), half_filling_sector(spec))
    point = solve_point(spec)
    assert point.error.startswith("ContractViolation")
    assert math.isnan(point.ground_energy)


def test_phase_scan_order_and_free_row():
    template = HolsteinSpec(4, 1.0, 1.0, 0.0, phonon_cutoff=1)
    rows = phase_scan(template, [0.0, 0.5], [0.5, 1.0], workers=2)
    assert [(r.t_over_omega, r.g_over_omega) for r in rows] == [(0.5, 0.0), (0.5, 0.5), (1.0, 0.0), (1.0, 0.5)]
    assert rows[2].ground_energy == pytest.approx(-math.sqrt(5), abs=1e-10)
    assert rows == phase_scan(template, [0.0, 0.5], [0.5, 1.0], workers=1)


def test_resource_budget():
    with pytest.raises(ResourceError):
        holstein_hamiltonian(HolsteinSpec(8, 1, 1, 1, phonon_cutoff=4))


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        HolsteinSpec(1, 1, 1, 1)
    with pytest.raises(ConfigurationError):
        HolsteinSpec(4, 1, 1, 1, filling=5)
    with pytest.raises(ConfigurationError):
        HolsteinSpec(4, 1, 1, 1, local_Bz=(1.0,))
    with pytest.raises(ConfigurationError):
        staggered_product_state(HolsteinSpec(3, 1, 1, 1, phonon_cutoff=1))
    with pytest.raises(ConfigurationError):
        RampSchedule(1.0, 0)
    with pytest.raises(ConfigurationError):
        RampSchedule(1.0, 5, path=lambda s: (s, s * s + 0.1))
    assert HolsteinSpec.from_hardware(4, 2.0, 1.0, 0.3).hopping == 0.5
    assert staggered_fields(4, 2.0) == (2.0, -2.0, 2.0, -2.0)
