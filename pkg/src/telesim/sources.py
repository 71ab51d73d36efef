"""Photon sources: SPDC pair statistics, faint-laser qubit statistics, and
the photon/noise budget of the frequency-converted qubit generator.

Both sources are truncated at two excitations with the usual low-gain
approximations: thermal-like second-order pair emission ``p2 = p1**2`` and
Poissonian ``l2 = l1**2 / 2``. The zero-excitation weight absorbs the
remainder so each law sums to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from telesim.errors import DomainError
from telesim.fockcore import DEFAULT_TRUNCATION, PhotonNumberDistribution

WINDOW_NS = 15.0

# Above this the two-excitation truncation is off by more than ~1 %.
MAX_EXCITATION_PROB = 0.3

PEAK_PUMP_MW = 450.0
FIT_PUMP_MW = 350.0
FIT_EFFICIENCY = 0.90
RAMAN_COEFF = 4.94e-10  # noise photons / ns / mW**2, gives ~1e-4 /ns at 450 mW


def _check_excitation(name: str, value: float) -> None:
    if not 0.0 <= value < MAX_EXCITATION_PROB:
        raise DomainError(
            f"{name}={value} outside the validated range [0, {MAX_EXCITATION_PROB})"
        )


@dataclass(frozen=True)
class SpdcSpec:
    """Pair source: ``p1`` is the single-pair probability per coherence time."""

    p1: float
    coherence_window: float = WINDOW_NS

    def __post_init__(self):
        _check_excitation("p1", self.p1)
        if self.coherence_window <= 0:
            raise DomainError("coherence_window must be positive")

    @property
    def p0(self) -> float:
        return 1.0 - self.p1 - self.p1**2

    @property
    def p2(self) -> float:
        return self.p1**2


@dataclass(frozen=True)
class LaserSpec:
    """Attenuated laser: ``l1`` is the single-photon probability per pulse."""

    l1: float
    pulse_window: float = WINDOW_NS

    def __post_init__(self):
        _check_excitation("l1", self.l1)
        if self.pulse_window <= 0:
            raise DomainError("pulse_window must be positive")

    @property
    def l0(self) -> float:
        return 1.0 - self.l1 - self.l1**2 / 2

    @property
    def l2(self) -> float:
        return self.l1**2 / 2


def spdc_distribution(spec: SpdcSpec) -> PhotonNumberDistribution:
    """Pair-number law ``{0: p0, 1: p1, 2: p2}`` (counts pairs, not photons)."""
    return PhotonNumberDistribution(
        {0: spec.p0, 1: spec.p1, 2: spec.p2}, DEFAULT_TRUNCATION
    )


def laser_distribution(spec: LaserSpec) -> PhotonNumberDistribution:
    return PhotonNumberDistribution(
        {0: spec.l0, 1: spec.l1, 2: spec.l2}, DEFAULT_TRUNCATION
    )


@dataclass(frozen=True)
class DfgSpec:
    """Difference-frequency converter driven by a strong pump.

    Conversion follows ``sin(kappa * sqrt(P))**2``. Use :meth:`calibrated`
    to pick ``kappa`` from either the 450 mW peak or the (350 mW, 90 %)
    operating point.
    """

    kappa: float = math.pi / (2.0 * math.sqrt(PEAK_PUMP_MW))
    p_opt: float = PEAK_PUMP_MW
    raman_coeff: float = RAMAN_COEFF

    def __post_init__(self):
        for name in ("kappa", "p_opt", "raman_coeff"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    @classmethod
    def calibrated(cls, mode: str = "peak450", **kwargs) -> DfgSpec:
        if mode == "peak450":
            kappa = math.pi / (2.0 * math.sqrt(PEAK_PUMP_MW))
        elif mode == "fit350":
            kappa = math.asin(math.sqrt(FIT_EFFICIENCY)) / math.sqrt(FIT_PUMP_MW)
        else:
            raise DomainError(f"unknown kappa calibration {mode!r}")
        return cls(kappa=kappa, **kwargs)


def dfg_efficiency(pump_mw: float, spec: DfgSpec | None = None) -> float:
    """Internal conversion efficiency at pump power ``pump_mw``."""
    spec = spec or DfgSpec()
    if pump_mw < 0:
        raise DomainError(f"negative pump power {pump_mw}")
    return math.sin(spec.kappa * math.sqrt(pump_mw)) ** 2


def raman_noise_rate(pump_mw: float, spec: DfgSpec | None = None) -> float:
    """Raman noise photons per ns in the signal band (quadratic in pump)."""
    spec = spec or DfgSpec()
    if pump_mw < 0:
        raise DomainError(f"negative pump power {pump_mw}")
    return spec.raman_coeff * pump_mw**2


def transmission_from_db(loss_db: float) -> float:
    return 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class Stage:
    label: str
    transmission: float

    def __post_init__(self):
        if not 0.0 <= self.transmission <= 1.0:
            raise DomainError(
                f"stage {self.label!r}: transmission {self.transmission} outside [0, 1]"
            )


@dataclass(frozen=True)
class BudgetChain:
    """Ordered loss stages acting on a mean photon number per window."""

    stages: Sequence[Stage] = field(default_factory=tuple)
    input_rate: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.input_rate < 0:
            raise DomainError("input_rate must be non-negative")


def evaluate_budget(chain: BudgetChain) -> list[tuple[str, float]]:
    """Mean photons per window after each stage, in chain order."""
    if not chain.stages:
        raise DomainError("budget chain has no stages")
    rate = chain.input_rate
    out = []
    for stage in chain.stages:
        rate *= stage.transmission
        out.append((stage.label, rate))
    return out


def qubit_source_chain(
    conversion: float = FIT_EFFICIENCY,
    input_rate: float = 0.8,
    filtered_rate: float = 0.2,
    modulator: float = 0.5,
) -> BudgetChain:
    """Laser -> DFG -> Raman filters -> intensity modulator.

    The filter stage is one lumped transmission, back-solved so that the
    nominal 0.8 photons per window reach ``filtered_rate`` after a 90 %
    conversion. ``modulator`` is the 3 dB modulator taken as exactly 1/2.
    """
    filtering = filtered_rate / (input_rate * FIT_EFFICIENCY)
    return BudgetChain(
        stages=(
            Stage("conversion", conversion),
            Stage("filtering", filtering),
            Stage("modulator", modulator),
        ),
        input_rate=input_rate,
    )


def noise_to_signal(signal_rate: float, noise_rate: float, dark_rate: float) -> float:
    """Ratio of (Raman + detector dark) rate to signal rate, all per ns."""
    if signal_rate <= 0:
        raise DomainError("signal_rate must be positive")
    if noise_rate < 0 or dark_rate < 0:
        raise DomainError("rates must be non-negative")
    return (noise_rate + dark_rate) / signal_rate
