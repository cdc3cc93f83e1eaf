"""Spinless Holstein chain realized by a Jordan-Wigner qubit array.

The Hilbert space lists the N qubits first and then the N local phonon
modes, so Jordan-Wigner strings never cross an oscillator.  A spin-up qubit
is an occupied site.  Energies are in the same (arbitrary) unit as the
phonon frequency; scans use ``omega = 1``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dynamics import CutoffWarning, StateVector, propagate
from .errors import ConfigurationError, ContractViolation, JJSimError, ResourceError, SolverError
from .operators import (
    DENSE_LIMIT,
    Boundary,
    Conserved,
    HilbertSpec,
    Operator,
    Oscillator,
    SectorProjector,
    TwoLevel,
    bonds,
    conserved_operator,
    embed,
    identity,
    jw_fermion,
    position_power,
    site_operator,
)

SPARSE_LIMIT = 2_000_000
RESIDUAL_TOL = 1e-8
RAMP_CUTOFF_BOUND = 1e-4

_SPLUS = np.array([[0, 1], [0, 0]], dtype=complex)
_SMINUS = _SPLUS.T.copy()


@dataclass(frozen=True)
class HolsteinSpec:
    """Parameters of the chain.

    ``local_Bz`` adds site-resolved fields -sum_i h_i S^z_i on top of the
    uniform ``chemical_Bz``; it models the strong per-qubit fields used to
    prepare the initial occupation pattern.
    """

    N_sites: int
    hopping: float
    phonon_freq: float
    coupling: float
    boundary: Boundary = Boundary.OPEN
    phonon_cutoff: int = 4
    anharmonic: float = 0.0
    chemical_Bz: float = 0.0
    leakage_Bx: float = 0.0
    filling: int | None = None
    local_Bz: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if int(self.N_sites) != self.N_sites or self.N_sites < 2:
            raise ConfigurationError(f"N_sites must be an integer >= 2, got {self.N_sites}")
        if int(self.phonon_cutoff) != self.phonon_cutoff or self.phonon_cutoff < 1:
            raise ConfigurationError(f"phonon_cutoff must be an integer >= 1, got {self.phonon_cutoff}")
        if self.filling is None:
            object.__setattr__(self, "filling", self.N_sites // 2)
        if not 0 <= self.filling <= self.N_sites:
            raise ConfigurationError(f"filling {self.filling} outside [0, {self.N_sites}]")
        if self.local_Bz is not None:
            fields = tuple(float(h) for h in self.local_Bz)
            if len(fields) != self.N_sites:
                raise ConfigurationError("local_Bz needs one entry per site")
            object.__setattr__(self, "local_Bz", fields)

    @classmethod
    def from_hardware(cls, N_sites: int, exchange_J: float, plasma_freq: float, coupling: float, **kw) -> "HolsteinSpec":
        """Chain parameters from the qubit S^x S^x exchange J and junction plasma frequency."""
        return cls(N_sites, exchange_J / 4, plasma_freq, coupling, **kw)

    @property
    def space(self) -> HilbertSpec:
        return HilbertSpec((TwoLevel(),) * self.N_sites + (Oscillator(self.phonon_cutoff),) * self.N_sites)

    @property
    def dimension(self) -> int:
        return 2**self.N_sites * (self.phonon_cutoff + 1) ** self.N_sites

    def phonon_site(self, i: int) -> int:
        return self.N_sites + i


def _zero(space: HilbertSpec) -> Operator:
    return Operator(space, sp.csr_matrix((space.total_dimension,) * 2, dtype=complex))


@dataclass(frozen=True, eq=False)
class HolsteinTerms:
    """Hamiltonian split into pieces that are scaled independently during a ramp."""

    space: HilbertSpec
    hopping: Operator  # -sum (S+S- + h.c.), multiplies t
    phonon: Operator  # sum a^dag a, multiplies omega
    quartic: Operator  # -sum (a + a^dag)^4, multiplies the anharmonic coefficient
    coupling: Operator  # -sum S^z (a + a^dag), multiplies g
    field_z: Operator  # -sum S^z
    field_x: Operator  # -sum S^x
    site_z: tuple  # -S^z_i, one per site

    def assemble(self, spec: HolsteinSpec, t: float | None = None, g: float | None = None, local=None) -> Operator:
        t = spec.hopping if t is None else t
        g = spec.coupling if g is None else g
        local = spec.local_Bz if local is None else local
        H = t * self.hopping + spec.phonon_freq * self.phonon + g * self.coupling
        if spec.anharmonic:
            H = H + spec.anharmonic * self.quartic
        if spec.chemical_Bz:
            H = H + spec.chemical_Bz * self.field_z
        if spec.leakage_Bx:
            H = H + spec.leakage_Bx * self.field_x
        if local is not None:
            for h, op in zip(local, self.site_z):
                if h:
                    H = H + h * op
        return H


def _check_budget(spec: HolsteinSpec):
    if spec.dimension > SPARSE_LIMIT:
        raise ResourceError(f"Hilbert space dimension {spec.dimension} exceeds the sparse budget {SPARSE_LIMIT}")


def holstein_terms(spec: HolsteinSpec) -> HolsteinTerms:
    _check_budget(spec)
    space = spec.space
    N = spec.N_sites
    hop = _zero(space)
    for i, j in bonds(N, spec.boundary):
        flip = embed(space, {i: _SPLUS, j: _SMINUS})
        hop = hop - (flip + flip.dag())
    phonon = _zero(space)
    quartic = _zero(space)
    coupling = _zero(space)
    x4 = position_power(spec.phonon_cutoff, 4)
    sz = np.diag([0.5, -0.5]).astype(complex)
    a = sp.diags(np.sqrt(np.arange(1, spec.phonon_cutoff + 1)), 1)
    x = (a + a.T).astype(complex)
    for i in range(N):
        p = spec.phonon_site(i)
        phonon = phonon + site_operator(space, p, "NumOp")
        quartic = quartic - embed(space, {p: x4})
        coupling = coupling - embed(space, {i: sz, p: x})
    site_z = tuple(-site_operator(space, i, "Sz") for i in range(N))
    field_z = sum(site_z, _zero(space))
    field_x = _zero(space) - sum((site_operator(space, i, "Sx") for i in range(N)), _zero(space))
    return HolsteinTerms(space, hop, phonon, quartic, coupling, field_z, field_x, site_z)


def holstein_hamiltonian(spec: HolsteinSpec) -> Operator:
    """Holstein Hamiltonian in the qubit (spin) x phonon representation.

    With periodic boundary the closing bond is the plain spin-ring bond, which
    differs from a periodic fermion chain by a parity-dependent sign.
    """
    return holstein_terms(spec).assemble(spec).as_hermitian()


def holstein_hamiltonian_fermionic(spec: HolsteinSpec) -> Operator:
    """Same model assembled from Jordan-Wigner fermion operators (open chain).

    Independent construction used to cross-check :func:`holstein_hamiltonian`.
    """
    if spec.boundary is not Boundary.OPEN:
        raise ContractViolation("fermionic construction is defined for the open chain only")
    _check_budget(spec)
    space = spec.space
    N = spec.N_sites
    c = [jw_fermion(space, n) for n in range(N)]
    half = 0.5 * identity(space)
    H = _zero(space)
    for n in range(N - 1):
        hop = c[n].dag() @ c[n + 1]
        H = H - spec.hopping * (hop + hop.dag())
    for i in range(N):
        a = site_operator(space, spec.phonon_site(i), "A")
        ad = a.dag()
        H = H + spec.phonon_freq * (ad @ a) - spec.coupling * ((c[i].dag() @ c[i] - half) @ (a + ad))
        if spec.anharmonic:
            # exact truncated x^4, not the product of truncated x's
            H = H - spec.anharmonic * embed(space, {spec.phonon_site(i): position_power(spec.phonon_cutoff, 4)})
    return H


def fermion_number(spec: HolsteinSpec) -> Operator:
    return conserved_operator(spec.space, Conserved.FERMION_NUMBER)


def half_filling_sector(spec: HolsteinSpec) -> SectorProjector:
    return SectorProjector.build(spec.space, Conserved.FERMION_NUMBER, spec.filling)


def ground_state(H: Operator, sector: SectorProjector, k: int = 1) -> tuple[np.ndarray, list[StateVector]]:
    """Lowest ``k`` eigenpairs of ``H`` inside ``sector``."""
    if sector.space != H.space:
        raise ContractViolation("sector and Hamiltonian live on different spaces")
    leak = sector.leakage(H)
    if leak > 1e-12:
        raise ContractViolation(f"Hamiltonian does not conserve {sector.conserved_quantity.value} (leakage {leak:.3e})")
    block = sector.restrict(H)
    dim = block.shape[0]
    if not 1 <= k <= dim:
        raise ContractViolation(f"requested {k} states from a sector of dimension {dim}")
    if np.max(np.abs(block.imag.data), initial=0.0) == 0:
        block = block.real
    if dim <= DENSE_LIMIT:
        vals, vecs = sla.eigh(block.toarray(), subset_by_index=[0, k - 1])
    else:
        try:
            vals, vecs = spla.eigsh(block.tocsc(), k=k, which="SA", tol=1e-12, maxiter=20 * dim)
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"Lanczos did not converge for sector dimension {dim}: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    states = []
    for j in range(k):
        v = vecs[:, j] / np.linalg.norm(vecs[:, j])
        res = np.linalg.norm(block @ v - vals[j] * v)
        if res > RESIDUAL_TOL:
            raise SolverError(f"eigenpair {j} residual {res:.3e} exceeds {RESIDUAL_TOL}")
        states.append(StateVector(H.space, sector.embed(v)))
    return np.asarray(vals, dtype=float), states


def density_profile(state: StateVector) -> np.ndarray:
    """<n_i> = <S^z_i> + 1/2 for every qubit site."""
    space = state.space
    probs = (np.abs(state.amplitudes) ** 2).reshape(space.dims)
    out = []
    for i in space.spin_indices():
        axes = tuple(a for a in range(len(space.dims)) if a != i)
        out.append(probs.sum(axis=axes)[0])
    return np.array(out)


def _staggered_charge(space: HilbertSpec) -> np.ndarray:
    digits = space.basis_digits()
    spins = space.spin_indices()
    occ = (digits[:, spins] == 0).astype(float) - 0.5
    signs = (-1.0) ** np.arange(len(spins))
    return occ @ signs


def cdw_structure_factor(state: StateVector) -> float:
    """S_pi = (4/N^2) sum_ij (-1)^(i-j) <(n_i - 1/2)(n_j - 1/2)>.

    The correlator is diagonal in the occupation basis, so this equals the
    weighted mean of the squared staggered charge.
    """
    space = state.space
    n = len(space.spin_indices())
    m = _staggered_charge(space)
    return float(4 / n**2 * np.sum(np.abs(state.amplitudes) ** 2 * m**2))


# adiabatic preparation ----------------------------------------------------


def linear_path(s: float) -> tuple[float, float]:
    return s, s


@dataclass(frozen=True)
class RampSchedule:
    """Parametric ramp from t = g = 0 to the target point of a HolsteinSpec.

    ``path(s)`` returns the fractions (t/t_target, g/g_target) at progress
    ``s`` and must map 0 to (0, 0) and 1 to (1, 1).  ``staggered_field`` is
    the strength of the per-qubit preparation field (+h on even, -h on odd
    sites); it is switched off linearly, reaching zero at s = 1.
    """

    total_time: float
    steps: int
    path: Callable[[float], tuple[float, float]] = linear_path
    staggered_field: float = 0.0

    def __post_init__(self):
        if self.total_time < 0:
            raise ConfigurationError("total_time must be >= 0")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigurationError("steps must be an integer >= 1")
        start, end = self.path(0.0), self.path(1.0)
        if not (np.allclose(start, 0) and np.allclose(end, 1)):
            raise ConfigurationError("ramp path must start at (0, 0) and end at (1, 1)")


@dataclass
class RampResult:
    state: StateVector
    fidelity: float
    number_drift: float
    warnings: list = field(default_factory=list)


def staggered_product_state(spec: HolsteinSpec) -> StateVector:
    """|1010...> (site 0 occupied) with every phonon in its vacuum."""
    if spec.N_sites % 2 or spec.filling != spec.N_sites // 2:
        raise ConfigurationError("staggered initialization needs an even chain at half filling")
    digits = [i % 2 for i in range(spec.N_sites)] + [0] * spec.N_sites
    return StateVector.basis(spec.space, digits)


def staggered_fields(N: int, h: float) -> tuple[float, ...]:
    return tuple(h if i % 2 == 0 else -h for i in range(N))


def adiabatic_ramp(spec: HolsteinSpec, schedule: RampSchedule) -> RampResult:
    """Prepare the target ground state by slowly switching on t and g.

    Evolution is piecewise constant with the Hamiltonian sampled at the
    midpoint of each step, in the full (unprojected) space so that fermion
    number leakage from a nonzero ``leakage_Bx`` is visible.  Fidelity is
    measured against the half-filling ground state at the target point with
    the preparation and leakage fields removed.  ``number_drift`` is the
    largest of |<N> - filling| and the population outside the filling sector
    seen at any step; the latter catches leakage that leaves <N> unchanged.
    """
    terms = holstein_terms(spec)
    space = spec.space
    psi = staggered_product_state(spec).amplitudes
    number = fermion_number(spec).matrix
    in_sector = np.zeros(space.total_dimension, dtype=bool)
    in_sector[half_filling_sector(spec).basis_index_list] = True
    top_masks = [space.basis_digits()[:, spec.phonon_site(i)] == spec.phonon_cutoff for i in range(spec.N_sites)]
    notes: list[str] = []
    drift = 0.0
    if schedule.total_time > 0:
        dt = schedule.total_time / schedule.steps
        for k in range(schedule.steps):
            s = (k + 0.5) / schedule.steps
            ft, fg = schedule.path(s)
            local = staggered_fields(spec.N_sites, schedule.staggered_field * (1 - s)) if schedule.staggered_field else None
            H = terms.assemble(spec, t=ft * spec.hopping, g=fg * spec.coupling, local=local)
            psi = propagate(H, psi, dt)
            probs = np.abs(psi) ** 2
            outside = 1.0 - float(probs[in_sector].sum())
            drift = max(drift, abs(np.vdot(psi, number @ psi).real - spec.filling), outside)
            top = max(float(probs[m].sum()) for m in top_masks)
            if top > RAMP_CUTOFF_BOUND and not notes:
                msg = f"top phonon level population {top:.2e} exceeds {RAMP_CUTOFF_BOUND:.0e} at s={s:.3f}"
                warnings.warn(msg, CutoffWarning, stacklevel=2)
                notes.append(msg)
    psi = psi / np.linalg.norm(psi)
    final = replace(spec, local_Bz=None, leakage_Bx=0.0)
    _, (gs,) = ground_state(terms.assemble(final).as_hermitian(), half_filling_sector(final), 1)
    fidelity = float(abs(np.vdot(gs.amplitudes, psi)) ** 2)
    return RampResult(StateVector(space, psi), fidelity, float(drift), notes)


# phase diagram --------------------------------------------------------------


@dataclass
class PhasePoint:
    t_over_omega: float
    g_over_omega: float
    ground_energy: float = math.nan
    excitation_gap: float = math.nan
    cdw_order: float = math.nan
    density_profile: tuple = ()
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "t_over_omega": self.t_over_omega,
            "g_over_omega": self.g_over_omega,
            "ground_energy": self.ground_energy,
            "excitation_gap": self.excitation_gap,
            "cdw_order": self.cdw_order,
            "density_profile": list(self.density_profile),
            "error": self.error,
        }


def solve_point(spec: HolsteinSpec) -> PhasePoint:
    """Ground energy, sector gap, S_pi and density of one parameter point."""
    point = PhasePoint(spec.hopping / spec.phonon_freq, spec.coupling / spec.phonon_freq)
    try:
        H = holstein_hamiltonian(spec)
        energies, states = ground_state(H, half_filling_sector(spec), 2)
    except JJSimError as exc:
        point.error = f"{type(exc).__name__}: {exc}"
        return point
    point.ground_energy = float(energies[0])
    point.excitation_gap = float(energies[1] - energies[0])
    point.cdw_order = cdw_structure_factor(states[0])
    point.density_profile = tuple(float(x) for x in density_profile(states[0]))
    return point


def phase_scan(spec_template: HolsteinSpec, g_over_omega_grid, t_over_omega_grid, workers: int = 1) -> list[PhasePoint]:
    """Solve every (t/omega, g/omega) cell; rows ordered t-major, then g."""
    omega = spec_template.phonon_freq
    cells = [
        replace(spec_template, hopping=float(t) * omega, coupling=float(g) * omega)
        for t in t_over_omega_grid
        for g in g_over_omega_grid
    ]
    if any(not (math.isfinite(c.hopping) and math.isfinite(c.coupling)) for c in cells):
        raise ConfigurationError("scan grids must be finite")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(solve_point, cells))
    return [solve_point(c) for c in cells]


def cutoff_convergence(spec: HolsteinSpec, cutoffs) -> list[tuple[int, float]]:
    """Sector ground energy as a function of the phonon cutoff."""
    out = []
    for n in cutoffs:
        s = replace(spec, phonon_cutoff=int(n))
        energies, _ = ground_state(holstein_hamiltonian(s), half_filling_sector(s), 1)
        out.append((int(n), float(energies[0])))
    return out
