"""Polarization-qubit algebra for the teleportation protocol.

Covers the four-way Bell decomposition of qubit 1 against the shared
pair, the Pauli corrections, and the energy-time fringe seen when the
Bell measurement heralds the singlet and qubit 3 passes a phase plate
plus a 45 degree analyzer. Global phases are never compared directly;
states are matched through their overlap.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from telesim.errors import DomainError

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class PolarizationQubit:
    """``alpha |H> + beta |V>``."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > _NORM_TOL:
            raise DomainError(f"qubit norm {norm} != 1")

    @classmethod
    def from_vector(cls, vec) -> PolarizationQubit:
        vec = np.asarray(vec, dtype=complex)
        vec = vec / np.linalg.norm(vec)
        return cls(complex(vec[0]), complex(vec[1]))

    @classmethod
    def from_angle(cls, theta: float) -> PolarizationQubit:
        """``sin(theta) |H> + cos(theta) |V>``, the rotated scan input."""
        return cls(math.sin(theta), math.cos(theta))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def fidelity(self, other: PolarizationQubit) -> float:
        """``|<self|other>|**2``; blind to global phase."""
        return abs(np.vdot(self.vector, other.vector)) ** 2


@dataclass(frozen=True)
class EntangledPhase:
    """Relative phase of the pair state ``(|HH> + e^{i phi} |VV>) / sqrt(2)``."""

    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise DomainError("phi must be finite")

    @property
    def reduced(self) -> float:
        return self.phi % (2 * math.pi)

    def state(self) -> np.ndarray:
        """Two-qubit amplitudes in the basis HH, HV, VH, VV."""
        return np.array([1, 0, 0, cmath.exp(1j * self.phi)], dtype=complex) / math.sqrt(2)


class BellOutcome(enum.Enum):
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"

    def state(self) -> np.ndarray:
        """Bell vector in the basis HH, HV, VH, VV."""
        s = 1 / math.sqrt(2)
        return {
            BellOutcome.PHI_PLUS: np.array([s, 0, 0, s]),
            BellOutcome.PHI_MINUS: np.array([s, 0, 0, -s]),
            BellOutcome.PSI_PLUS: np.array([0, s, s, 0]),
            BellOutcome.PSI_MINUS: np.array([0, s, -s, 0]),
        }[self].astype(complex)


class CorrectionUnitary(enum.Enum):
    IDENTITY = "Identity"
    SIGMA_Z = "SigmaZ"
    SIGMA_X = "SigmaX"
    SIGMA_Y = "SigmaY"

    @property
    def matrix(self) -> np.ndarray:
        return _PAULI[self]

    def apply(self, qubit: PolarizationQubit) -> PolarizationQubit:
        return PolarizationQubit.from_vector(self.matrix @ qubit.vector)


_PAULI = {
    CorrectionUnitary.IDENTITY: np.eye(2, dtype=complex),
    CorrectionUnitary.SIGMA_Z: np.array([[1, 0], [0, -1]], dtype=complex),
    CorrectionUnitary.SIGMA_X: np.array([[0, 1], [1, 0]], dtype=complex),
    CorrectionUnitary.SIGMA_Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
}

_CORRECTIONS = {
    BellOutcome.PHI_PLUS: CorrectionUnitary.IDENTITY,
    BellOutcome.PHI_MINUS: CorrectionUnitary.SIGMA_Z,
    BellOutcome.PSI_PLUS: CorrectionUnitary.SIGMA_X,
    BellOutcome.PSI_MINUS: CorrectionUnitary.SIGMA_Y,
}


def bell_decompose(qubit: PolarizationQubit) -> dict[BellOutcome, PolarizationQubit]:
    """Conditional state of qubit 3 for each Bell outcome on qubits 1 and 2.

    Every branch occurs with probability 1/4, independent of the input.
    """
    a, b = qubit.alpha, qubit.beta
    return {
        BellOutcome.PHI_PLUS: PolarizationQubit(a, b),
        BellOutcome.PHI_MINUS: PolarizationQubit(a, -b),
        BellOutcome.PSI_PLUS: PolarizationQubit(b, a),
        BellOutcome.PSI_MINUS: PolarizationQubit(-b, a),
    }


def correction_for(outcome: BellOutcome) -> CorrectionUnitary:
    return _CORRECTIONS[outcome]


def psi_minus_reduced_state(phi1: float, phi: float) -> PolarizationQubit:
    """Qubit-3 state after a singlet herald, for qubit phase ``phi1`` and pair phase ``phi``."""
    half = (phi1 - phi) / 2
    return PolarizationQubit(
        cmath.exp(-1j * half) / math.sqrt(2), -cmath.exp(1j * half) / math.sqrt(2)
    )


def analyzer_probability(state: PolarizationQubit, phi3: float) -> float:
    """Probability that the V port fires after the phase plate and 45 degree rotation.

    The map is ``H -> e^{-i phi3/2} (H + V)/sqrt(2)``,
    ``V -> e^{i phi3/2} (V - H)/sqrt(2)``.
    """
    v_amp = (
        state.alpha * cmath.exp(-0.5j * phi3) + state.beta * cmath.exp(0.5j * phi3)
    ) / math.sqrt(2)
    return abs(v_amp) ** 2


def threefold_fringe(phi1: float, phi: float, phi3: float) -> float:
    """Normalized threefold probability ``sin((phi1 - phi + phi3)/2)**2``."""
    return math.sin((phi1 - phi + phi3) / 2) ** 2


def polarization_scan_rate(theta: float, analyzed: str = "H") -> float:
    """Ideal relative threefold rate of the singlet branch versus input rotation.

    Qubit 1 is ``sin(theta) H + cos(theta) V``; qubit 3 is projected on
    ``analyzed`` ("H" or "V") without applying the correction.
    """
    branch = bell_decompose(PolarizationQubit.from_angle(theta))[BellOutcome.PSI_MINUS]
    if analyzed == "H":
        return abs(branch.alpha) ** 2
    if analyzed == "V":
        return abs(branch.beta) ** 2
    raise DomainError(f"analyzed must be 'H' or 'V', got {analyzed!r}")
