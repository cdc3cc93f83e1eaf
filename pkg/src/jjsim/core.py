"""Physical constants, device records and SI -> model-unit conversions.

This is the only module that works in SI units.  Everything downstream uses
hbar = 1 and measures energies in units of a reference frequency (usually the
plasma frequency of the junctions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants as _sc

from .errors import ConfigurationError, DomainError, PreconditionError

# Validity bound for the small-LI_c expansion of the shunted SQUID.
SHUNT_EXPANSION_LIMIT = 0.1


@dataclass(frozen=True)
class PhysicalConstants:
    flux_quantum: float = _sc.physical_constants["mag. flux quantum"][0]
    reduced_planck: float = _sc.hbar


CONSTANTS = PhysicalConstants()
PHI0 = CONSTANTS.flux_quantum
HBAR = CONSTANTS.reduced_planck


@dataclass(frozen=True)
class JunctionParams:
    """Vertical (grounding) junction of an array.

    ``K`` is the factor whose square multiplies the critical current of the
    coupling (horizontal) junctions.
    """

    critical_current: float
    capacitance: float
    bias_ratio: float = 0.0
    K: float = 1.0

    def __post_init__(self):
        if not self.critical_current > 0:
            raise ConfigurationError(f"critical_current must be > 0, got {self.critical_current}")
        if not self.capacitance > 0:
            raise ConfigurationError(f"capacitance must be > 0, got {self.capacitance}")
        if not 0 <= self.bias_ratio < 1:
            raise DomainError(f"bias_ratio must lie in [0, 1), got {self.bias_ratio}")
        if not self.K >= 1:
            raise ConfigurationError(f"K must be >= 1, got {self.K}")

    @property
    def josephson_energy(self) -> float:
        return self.critical_current * PHI0 / (2 * math.pi)


@dataclass(frozen=True)
class QedCouplingParams:
    mutual_inductance: float
    qubit_squid_critical_current: float
    array_size: int

    def __post_init__(self):
        if not self.mutual_inductance > 0:
            raise ConfigurationError("mutual_inductance must be > 0")
        if not self.qubit_squid_critical_current > 0:
            raise ConfigurationError("qubit_squid_critical_current must be > 0")
        if int(self.array_size) != self.array_size or self.array_size < 1:
            raise ConfigurationError("array_size must be an integer >= 1")


@dataclass(frozen=True)
class ShuntedSquidParams:
    inductance: float
    squid_critical_current: float

    def __post_init__(self):
        if not self.inductance > 0:
            raise ConfigurationError("inductance must be > 0")
        if self.squid_critical_current < 0:
            raise ConfigurationError("squid_critical_current must be >= 0")

    @property
    def screening(self) -> float:
        """2 pi L I_c / Phi_0."""
        return 2 * math.pi * self.inductance * self.squid_critical_current / PHI0

    @property
    def is_valid(self) -> bool:
        return self.screening < SHUNT_EXPANSION_LIMIT


@dataclass(frozen=True)
class ShuntedSquidResult:
    effective_inductance: float
    quartic_coefficient: float  # J / Wb^4, multiplies Phi^4 with a minus sign


def equilibrium_phase(bias_ratio: float) -> float:
    """Equilibrium phase arcsin(i_b) of a current-biased junction."""
    if not 0 <= bias_ratio < 1:
        raise DomainError(f"bias ratio {bias_ratio} outside [0, 1): junction is switched or unphysical")
    return math.asin(bias_ratio)


def plasma_frequency(p: JunctionParams) -> float:
    """Small-oscillation angular frequency (rad/s) of the biased junction."""
    return math.sqrt(2 * math.pi * p.critical_current / (PHI0 * p.capacitance)) * (
        1 - p.bias_ratio**2
    ) ** 0.25


def qed_coupling_g(j: JunctionParams, q: QedCouplingParams) -> float:
    """Charge-qubit / center-of-mass-mode coupling g/hbar in rad/s.

    The closed form is evaluated as printed, in SI, then divided by hbar.
    """
    wp = plasma_frequency(j)
    cos0 = math.cos(equilibrium_phase(j.bias_ratio))
    zero_point = (2 * math.pi / PHI0) * math.sqrt(HBAR / (2 * j.capacitance * wp * q.array_size))
    energy = (q.mutual_inductance / 2) * (j.critical_current * cos0) * q.qubit_squid_critical_current * zero_point
    return energy / HBAR


def effective_inductance(s: ShuntedSquidParams) -> ShuntedSquidResult:
    """Effective inductance L' and Phi^4 coefficient of an inductor-shunted dc-SQUID."""
    if not s.is_valid:
        raise PreconditionError(
            f"2*pi*L*I_c/Phi0 = {s.screening:.4g} >= {SHUNT_EXPANSION_LIMIT}; quartic expansion invalid"
        )
    lam = (s.squid_critical_current / 24) * (2 * math.pi / PHI0) ** 3
    return ShuntedSquidResult(s.inductance * (1 - s.screening), lam)


def anharmonic_phonon_model(s: ShuntedSquidParams, junction_capacitance: float) -> tuple[float, float]:
    """Map an inductor-shunted SQUID to model units.

    Returns ``(omega, lambda_scaled_over_omega)``: the harmonic angular
    frequency 1/sqrt(L'C_J) in rad/s and the dimensionless coefficient of
    -(a + a^dag)^4 measured in units of hbar*omega.
    """
    if not junction_capacitance > 0:
        raise ConfigurationError("junction_capacitance must be > 0")
    res = effective_inductance(s)
    omega = 1 / math.sqrt(res.effective_inductance * junction_capacitance)
    impedance = math.sqrt(res.effective_inductance / junction_capacitance)
    flux_zp = math.sqrt(HBAR * impedance / 2)
    return omega, res.quartic_coefficient * flux_zp**4 / (HBAR * omega)


def hopping_from_exchange(J: float) -> float:
    """Holstein hopping realized by an S^x S^x qubit coupling J."""
    return J / 4
