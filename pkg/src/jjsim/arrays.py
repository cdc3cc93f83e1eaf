"""Normal modes of Josephson junction networks.

Each island ``i`` is grounded through a vertical junction (phase ``theta_i``)
and coupled to other islands through junctions whose Josephson energy is
``K**2`` times larger.  Matrices are expressed in model units: stiffness in
units of E_J, mass in units of C (Phi_0 / 2 pi)^2.  An eigenvalue ``lam`` of
the pencil then corresponds to a frequency ``sqrt(lam)`` in units of the
*unbiased* plasma frequency; :func:`array_modes` rescales to the biased
plasma frequency omega_p (model units) or to rad/s.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import HBAR, PHI0, JunctionParams, equilibrium_phase, plasma_frequency
from .errors import (
    ConfigurationError,
    ContractViolation,
    DomainError,
    InstabilityError,
    NoEquilibriumError,
    UnsupportedError,
)

DEGENERACY_RTOL = 1e-8
NEWTON_MAX_ITER = 200
EQUILIBRIUM_TOL = 1e-12


class Topology(str, enum.Enum):
    CHAIN = "chain"
    COMPLETE = "complete"


def coupling_edges(topology: Topology, n: int) -> list[tuple[int, int]]:
    if Topology(topology) is Topology.CHAIN:
        return [(i, i + 1) for i in range(n - 1)]
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True)
class ArraySpec:
    topology: Topology
    N: int
    junction: JunctionParams
    vertical_ej_multipliers: tuple[float, ...] | None = None
    horizontal_ej_multipliers: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"N must be an integer >= 1, got {self.N}")
        n_edges = len(coupling_edges(self.topology, self.N))
        for name, expected in (("vertical_ej_multipliers", self.N), ("horizontal_ej_multipliers", n_edges)):
            values = getattr(self, name)
            if values is None:
                continue
            values = tuple(float(v) for v in values)
            if len(values) != expected:
                raise ConfigurationError(f"{name} needs {expected} entries for {self.topology.value} N={self.N}, got {len(values)}")
            if any(not v > 0 for v in values):
                raise ConfigurationError(f"{name} must all be > 0")
            object.__setattr__(self, name, values)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return coupling_edges(self.topology, self.N)

    @property
    def vertical(self) -> np.ndarray:
        if self.vertical_ej_multipliers is None:
            return np.ones(self.N)
        return np.array(self.vertical_ej_multipliers)

    @property
    def horizontal(self) -> np.ndarray:
        if self.horizontal_ej_multipliers is None:
            return np.ones(len(self.edges))
        return np.array(self.horizontal_ej_multipliers)

    @property
    def is_clean(self) -> bool:
        return bool(np.all(self.vertical == 1.0) and np.all(self.horizontal == 1.0))


def with_uniform_disorder(spec: ArraySpec, spread: float, rng: np.random.Generator) -> ArraySpec:
    """Copy of ``spec`` with vertical multipliers drawn uniformly from 1 +/- spread."""
    draws = rng.uniform(1 - spread, 1 + spread, size=spec.N)
    return ArraySpec(spec.topology, spec.N, spec.junction, tuple(draws), spec.horizontal_ej_multipliers)


@dataclass(frozen=True)
class ModeSpectrum:
    """Ascending normal-mode frequencies; ``eigenvectors[:, s]`` is mode ``s``."""

    frequencies: np.ndarray
    eigenvectors: np.ndarray
    mass_diagonal: np.ndarray
    unit_system: str = "model"

    @property
    def center_of_mass(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


@dataclass(frozen=True)
class ComQualityReport:
    gap: float
    com_overlap: float
    n_max_for_margin: int | None
    unit_system: str = "model"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "gap": self.gap,
            "com_overlap": self.com_overlap,
            "n_max_for_margin": self.n_max_for_margin,
            "unit_system": self.unit_system,
        }
        out.update(self.extra)
        return out


def node_currents(spec: ArraySpec, theta: np.ndarray) -> np.ndarray:
    """Net current (units of I_c) into each node; zero at equilibrium."""
    jp = spec.junction
    theta = np.asarray(theta, dtype=float)
    res = jp.bias_ratio - spec.vertical * np.sin(theta)
    k2 = jp.K**2
    for (i, j), h in zip(spec.edges, spec.horizontal):
        s = k2 * h * math.sin(theta[i] - theta[j])
        res[i] -= s
        res[j] += s
    return res


def build_system_matrices(spec: ArraySpec, equilibrium) -> tuple[np.ndarray, np.ndarray]:
    """Second-order expansion of the array potential about ``equilibrium``.

    Returns ``(stiffness, mass)`` in units of E_J and C (Phi_0/2 pi)^2.
    """
    theta = np.asarray(equilibrium, dtype=float)
    if theta.shape != (spec.N,):
        raise ConfigurationError(f"equilibrium has shape {theta.shape}, expected ({spec.N},)")
    k2 = spec.junction.K**2
    V = np.diag(spec.vertical * np.cos(theta))
    for (i, j), h in zip(spec.edges, spec.horizontal):
        c = k2 * h * math.cos(theta[i] - theta[j])
        V[i, i] += c
        V[j, j] += c
        V[i, j] -= c
        V[j, i] -= c
    return V, np.eye(spec.N)


def solve_equilibrium(spec: ArraySpec) -> np.ndarray:
    """Phases that balance the bias current at every node (damped Newton)."""
    theta0 = equilibrium_phase(spec.junction.bias_ratio)
    theta = np.full(spec.N, theta0)
    res = node_currents(spec, theta)
    norm = np.max(np.abs(res))
    for _ in range(NEWTON_MAX_ITER):
        if norm < EQUILIBRIUM_TOL * 1e-2:
            break
        V, _ = build_system_matrices(spec, theta)
        try:
            step = np.linalg.solve(V, res)
        except np.linalg.LinAlgError as exc:
            raise NoEquilibriumError(f"singular Hessian during Newton iteration: {exc}") from exc
        alpha = 1.0
        while alpha > 1e-6:
            trial = theta + alpha * step
            trial_res = node_currents(spec, trial)
            trial_norm = np.max(np.abs(trial_res))
            if trial_norm < norm or trial_norm < EQUILIBRIUM_TOL * 1e-2:
                break
            alpha /= 2
        else:
            break
        theta, res, norm = trial, trial_res, trial_norm
    if not norm < EQUILIBRIUM_TOL:
        raise NoEquilibriumError(
            f"Newton iteration did not converge (max node residual {norm:.3e}); "
            "bias may be too close to critical for this disorder"
        )
    return theta


def _sign_fix(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    for s in range(vecs.shape[1]):
        col = vecs[:, s]
        mags = np.abs(col)
        idx = int(np.argmax(mags >= mags.max() * (1 - 1e-9)))
        if col[idx] < 0:
            vecs[:, s] = -col
    return vecs


def normal_modes(stiffness, mass, frequency_unit: float = 1.0, unit_system: str = "model") -> ModeSpectrum:
    """Solve nu^2 M b = V b.

    ``frequency_unit`` divides the raw frequencies sqrt(eigenvalue); pass
    ``sqrt(cos theta0)`` to express them in units of the biased plasma
    frequency.  Eigenvectors are mass-orthonormal and sign-fixed so that
    their largest entry is positive.
    """
    V = np.asarray(stiffness, dtype=float)
    M = np.asarray(mass, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or M.shape != V.shape:
        raise ContractViolation(f"stiffness {V.shape} and mass {M.shape} must be equal square matrices")
    scale = max(np.max(np.abs(V)), 1.0)
    if np.max(np.abs(V - V.T)) > 1e-12 * scale:
        raise ContractViolation("stiffness matrix is not symmetric")
    m = np.diag(M)
    if np.any(np.abs(M - np.diag(m)) > 0) or np.any(m <= 0):
        raise ContractViolation("mass matrix must be positive diagonal")
    inv_sqrt = 1 / np.sqrt(m)
    A = V * inv_sqrt[:, None] * inv_sqrt[None, :]
    lam, U = np.linalg.eigh(0.5 * (A + A.T))
    tol = 1e-12 * scale
    if lam[0] < -tol:
        raise InstabilityError(
            f"mode 0 is unstable (eigenvalue {lam[0]:.6g}); equilibrium is not a minimum",
            mode_index=0,
            eigenvalue=float(lam[0]),
        )
    freqs = np.sqrt(np.clip(lam, 0, None)) / frequency_unit
    vecs = _sign_fix(U * inv_sqrt[:, None])
    return ModeSpectrum(freqs, vecs, m, unit_system)


def array_modes(spec: ArraySpec, unit_system: str = "model") -> ModeSpectrum:
    """Equilibrium, expansion and eigensolve in one call.

    ``unit_system`` is ``"model"`` (frequencies / omega_p) or ``"si"`` (rad/s).
    """
    theta = solve_equilibrium(spec)
    V, M = build_system_matrices(spec, theta)
    unit = math.sqrt(math.cos(equilibrium_phase(spec.junction.bias_ratio)))
    spectrum = normal_modes(V, M, frequency_unit=unit)
    if unit_system == "si":
        wp = plasma_frequency(spec.junction)
        return ModeSpectrum(spectrum.frequencies * wp, spectrum.eigenvectors, spectrum.mass_diagonal, "si")
    if unit_system != "model":
        raise ConfigurationError(f"unknown unit_system {unit_system!r}")
    return spectrum


def analytic_spectrum(spec: ArraySpec, unit_system: str = "model") -> np.ndarray:
    """Closed-form frequencies of a clean chain or complete network."""
    if not spec.is_clean:
        raise UnsupportedError("closed-form spectrum needs a clean array; use normal_modes for disorder")
    jp = spec.junction
    cos0 = math.cos(equilibrium_phase(jp.bias_ratio))
    n = spec.N
    if spec.topology is Topology.CHAIN:
        s = np.arange(n)
        freqs = np.sqrt(1 + (4 * jp.K**2 / cos0) * np.sin(s * np.pi / (2 * n)) ** 2)
    else:
        freqs = np.ones(n)
        freqs[1:] = math.sqrt(1 + n * jp.K**2 / cos0)
    if unit_system == "si":
        return freqs * plasma_frequency(jp)
    return freqs


def asymptotic_gap(spec: ArraySpec) -> float:
    """Large-N chain gap between the two lowest modes, in units of omega_p."""
    jp = spec.junction
    cos0 = math.cos(equilibrium_phase(jp.bias_ratio))
    return math.pi**2 * jp.K**2 / (2 * spec.N**2 * cos0)


def max_chain_length(K: float, bias_ratio: float, g: float, margin: float) -> int:
    """Largest N for which the asymptotic chain gap is at least margin * g (g in omega_p units)."""
    cos0 = math.cos(equilibrium_phase(bias_ratio))
    bound = math.sqrt(math.pi**2 * K**2 / (2 * cos0 * margin * g))
    n = math.floor(bound)
    # guard against floor landing one off from rounding
    while math.pi**2 * K**2 / (2 * (n + 1) ** 2 * cos0) >= margin * g:
        n += 1
    while n > 0 and math.pi**2 * K**2 / (2 * n**2 * cos0) < margin * g:
        n -= 1
    return n


def com_quality(spec: ArraySpec, g: float, margin: float = 10.0, spectrum: ModeSpectrum | None = None) -> ComQualityReport:
    """How cleanly the lowest mode acts as a single resonator.

    ``g`` is the qubit coupling in units of omega_p.  ``n_max_for_margin`` is
    ``None`` for complete networks, whose gap grows with N.
    """
    if not g > 0:
        raise DomainError("g must be > 0")
    if not margin >= 1:
        raise DomainError("margin must be >= 1")
    if spectrum is None:
        spectrum = array_modes(spec)
    freqs = spectrum.frequencies
    gap = float(freqs[1] - freqs[0]) if len(freqs) > 1 else math.inf
    b0 = spectrum.center_of_mass
    m = spectrum.mass_diagonal
    uniform = np.ones(spec.N)
    overlap = float((b0 @ (m * uniform)) ** 2 / (uniform @ (m * uniform)) / (b0 @ (m * b0)))
    overlap = min(max(overlap, 0.0), 1.0)
    n_max = None
    if spec.topology is Topology.CHAIN:
        n_max = max_chain_length(spec.junction.K, spec.junction.bias_ratio, g, margin)
    return ComQualityReport(gap, overlap, n_max)


def zero_point_amplitudes(spectrum: ModeSpectrum, junction: JunctionParams) -> np.ndarray:
    """Matrix of coefficients of (a_s + a_s^dag) in the phase operator of site i."""
    freqs = np.asarray(spectrum.frequencies, dtype=float)
    if spectrum.unit_system == "model":
        freqs = freqs * plasma_frequency(junction)
    if np.any(freqs <= 0):
        raise DomainError("zero-frequency mode has a divergent zero-point amplitude")
    amp = (2 * math.pi / PHI0) * np.sqrt(HBAR / (2 * junction.capacitance * freqs))
    return spectrum.eigenvectors * amp[None, :]
