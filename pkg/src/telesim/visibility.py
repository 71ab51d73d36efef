"""Analytic threefold-coincidence pipeline and visibility metrics.

Pipeline, per coincidence window:

1. SPDC emits 0, 1 or 2 pairs (``p0, p1, p2``); the laser emits 0, 1 or 2
   photons (``l0, l1, l2``) directly in front of the Bell-state splitter.
2. The 2k pair photons split binomially at the first splitter into the
   BSM arm (path 2) and the herald arm (path 3).
3. The herald detector fires with ``1 - (1 - t3 eta)**N``; path 2 is
   thinned by ``t2``. This yields joint probabilities ``h_j`` of a herald
   click with ``j`` photons arriving at the BSM splitter.
4. ``sqrt(h_j) sqrt(l_m)`` weights each Fock input ``|j, m>``; outputs are
   propagated for distinguishable and indistinguishable photons and both
   BSM detectors must fire (``1 - (1 - eta)**N`` each).
5. ``C_max`` is the distinguishable rate, ``C_min`` the indistinguishable
   one mixed with ``C_max`` according to the temporal overlap.

Source terms with different input occupations are mutually incoherent, so
step 4 squares amplitudes per input term before summing. Rates are joint
probabilities per window (herald and both BSM clicks).

Dark counts enter as a per-window click probability ``dark_rate *
window_ns`` on each detector. The "raw" rates include them; the "net"
rates subtract the dark-induced threefold rate reconstructed from
blocked-detector rates by inclusion-exclusion, as done in the lab.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

from telesim.errors import DomainError, UndefinedVisibilityError
from telesim.fockcore import (
    DEFAULT_TRUNCATION,
    PhotonNumberDistribution,
    apply_loss,
    click_probability,
    interfere_distinguishable,
    interference_amplitudes,
    split_balanced,
)
from telesim.sources import LaserSpec, SpdcSpec, laser_distribution, spdc_distribution

log = logging.getLogger(__name__)

DARK_TOL = 1e-15


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameter set of the relay.

    Detectors 1 and 2 sit behind the BSM splitter, detector 3 heralds.
    ``dark1..dark3`` are dark-count probabilities per ns.
    """

    p1: float = 0.02
    l1: float = 0.02
    t2: float = 0.1
    t3: float = 0.1
    eta: float = 0.2
    overlap: float = 0.91
    window_ns: float = 15.0
    dark1: float = 1e-6
    dark2: float = 1e-6
    dark3: float = 1e-6

    def __post_init__(self):
        SpdcSpec(self.p1)
        LaserSpec(self.l1)
        for name in ("t2", "t3", "eta", "overlap"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name}={value} outside [0, 1]")
        if not self.window_ns > 0:
            raise DomainError(f"window_ns={self.window_ns} must be positive")
        for name in ("dark1", "dark2", "dark3"):
            value = getattr(self, name)
            if value < 0:
                raise DomainError(f"{name}={value} is negative")
            if value * self.window_ns > 1.0:
                raise DomainError(f"{name}={value} gives a window probability above 1")

    @property
    def dark_probs(self) -> tuple[float, float, float]:
        """Per-window dark-count probabilities of detectors 1, 2, 3."""
        w = self.window_ns
        return (self.dark1 * w, self.dark2 * w, self.dark3 * w)

    def without_dark(self) -> ExperimentConfig:
        return replace(self, dark1=0.0, dark2=0.0, dark3=0.0)


@dataclass(frozen=True)
class DarkCountSet:
    """Threefold rates measured with detectors blocked (subscripts = blocked)."""

    dc1: float = 0.0
    dc2: float = 0.0
    dc3: float = 0.0
    dc12: float = 0.0
    dc13: float = 0.0
    dc23: float = 0.0
    tolerance: float = field(default=DARK_TOL, compare=False)

    def __post_init__(self):
        for name in ("dc1", "dc2", "dc3", "dc12", "dc13", "dc23"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} is negative")
        for pair, (i, j) in {"dc12": (1, 2), "dc13": (1, 3), "dc23": (2, 3)}.items():
            bound = min(getattr(self, f"dc{i}"), getattr(self, f"dc{j}"))
            if getattr(self, pair) > bound + self.tolerance:
                raise DomainError(f"{pair} exceeds min(dc{i}, dc{j})")


@dataclass(frozen=True)
class HeraldStats:
    """Joint probabilities of a herald click and j photons in front of the BSM.

    ``h[j]`` for j = 0..len(h)-1. Without dark counts only j <= 3 occurs.
    """

    h: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(float(x) for x in self.h))
        if any(not 0.0 <= x <= 1.0 for x in self.h):
            raise DomainError("herald probabilities must lie in [0, 1]")
        if self.total > 1.0 + 1e-12:
            raise DomainError("herald probabilities sum above 1")

    def __getitem__(self, j: int) -> float:
        return self.h[j] if 0 <= j < len(self.h) else 0.0

    h0 = property(lambda self: self[0])
    h1 = property(lambda self: self[1])
    h2 = property(lambda self: self[2])
    h3 = property(lambda self: self[3])

    @property
    def total(self) -> float:
        return math.fsum(self.h)


class Rates(NamedTuple):
    """Threefold rates per window for the two interference regimes."""

    c_dis: float
    c_indis: float


@dataclass(frozen=True)
class VisibilityResult:
    c_max: float
    c_min: float
    v_two_photon: float
    v_ent: float
    fidelity: float
    variant: str = "raw"
    clamped: bool = False

    @classmethod
    def from_rates(cls, c_max: float, c_min: float, variant: str = "raw",
                   clamped: bool = False) -> VisibilityResult:
        v2 = visibility_two_photon(c_max, c_min)
        v_ent, fidelity = visibility_ent(c_max, c_min)
        return cls(c_max, c_min, v2, v_ent, fidelity, variant, clamped)


@dataclass(frozen=True)
class _Detector:
    eta: float
    dark: float = 0.0  # per window

    def click(self, n: int) -> float:
        return 1.0 - (1.0 - self.dark) * (1.0 - click_probability(n, 1.0, self.eta))


def _herald_table(config: ExperimentConfig, herald: _Detector) -> HeraldStats:
    pairs = spdc_distribution(SpdcSpec(config.p1))
    joint: dict[tuple[int, int], float] = {}
    for k, pk in pairs.items():
        for (n2, n3), w in split_balanced(2 * k).items():
            # t3 acts on the herald photons; detector efficiency inside _Detector
            fire = 1.0 - (1.0 - herald.dark) * (1.0 - click_probability(n3, config.t3, herald.eta))
            joint[(n2, n3)] = joint.get((n2, n3), 0.0) + pk * w * fire
    arm = apply_loss(PhotonNumberDistribution(joint, DEFAULT_TRUNCATION), config.t2, mode=0)
    path2 = arm.marginal(0)
    top = max(path2) if len(path2) else 0
    return HeraldStats(tuple(path2[j] for j in range(top + 1)))


def herald_distribution(config: ExperimentConfig, include_dark: bool = False) -> HeraldStats:
    """Joint herald-click / path-2 photon-number probabilities ``h_j``."""
    dark = config.dark_probs[2] if include_dark else 0.0
    return _herald_table(config, _Detector(config.eta, dark))


def _bsm(h: HeraldStats, laser: PhotonNumberDistribution,
         left: _Detector, right: _Detector) -> Rates:
    dis_terms, indis_terms = [], []
    for j, hj in enumerate(h.h):
        for m, lm in laser.items():
            amp_in = math.sqrt(hj) * math.sqrt(lm)
            if amp_in == 0.0:
                continue
            dis = [amp_in**2 * p * left.click(a) * right.click(b)
                   for (a, b), p in interfere_distinguishable(j, m).items()]
            dis_terms.extend(dis)
            if j == 0 or m == 0:
                # no partner photon: both regimes coincide, keep them bit-identical
                indis_terms.extend(dis)
                continue
            for (a, b), amp in interference_amplitudes(j, m).items():
                indis_terms.append(abs(amp_in * amp) ** 2 * left.click(a) * right.click(b))
    return Rates(math.fsum(dis_terms), math.fsum(indis_terms))


def bsm_rates(h: HeraldStats, laser: PhotonNumberDistribution, eta: float,
              dark: tuple[float, float] = (0.0, 0.0)) -> Rates:
    """Threefold rates (herald AND both BSM detectors) for both regimes.

    ``dark`` holds per-window dark-count probabilities of the two BSM
    detectors; leave at zero for the photon-only rates.
    """
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta={eta} outside [0, 1]")
    return _bsm(h, laser, _Detector(eta, dark[0]), _Detector(eta, dark[1]))


def threefold_rates(config: ExperimentConfig, include_dark: bool = False) -> Rates:
    """Analytic ``(c_dis, c_indis)`` for ``config``, optionally with dark counts."""
    d1, d2, d3 = config.dark_probs if include_dark else (0.0, 0.0, 0.0)
    laser = laser_distribution(LaserSpec(config.l1))
    h = _herald_table(config, _Detector(config.eta, d3))
    return _bsm(h, laser, _Detector(config.eta, d1), _Detector(config.eta, d2))


def _blocked_rates(config: ExperimentConfig, blocked: Iterable[int]) -> Rates:
    blocked = set(blocked)
    dets = [
        _Detector(0.0 if i in blocked else config.eta, d)
        for i, d in zip((1, 2, 3), config.dark_probs)
    ]
    laser = laser_distribution(LaserSpec(config.l1))
    return _bsm(_herald_table(config, dets[2]), laser, dets[0], dets[1])


def apply_overlap(c_dis: float, c_indis: float, overlap: float) -> float:
    """Effective minimum rate when only a fraction ``overlap`` of events interferes."""
    if not 0.0 <= overlap <= 1.0:
        raise DomainError(f"overlap={overlap} outside [0, 1]")
    return overlap * c_indis + (1.0 - overlap) * c_dis


def dark_count_set(config: ExperimentConfig) -> DarkCountSet:
    """Blocked-detector threefold rates per window, as measured in the lab.

    Each rate is taken at the middle of the fringe, i.e. the mean of the
    ``C_max`` and overlap-mixed ``C_min`` settings, since the measurement is
    done once at nominal source settings.
    """
    def mid(blocked):
        r = _blocked_rates(config, blocked)
        return 0.5 * (r.c_dis + apply_overlap(r.c_dis, r.c_indis, config.overlap))

    return DarkCountSet(
        dc1=mid({1}), dc2=mid({2}), dc3=mid({3}),
        dc12=mid({1, 2}), dc13=mid({1, 3}), dc23=mid({2, 3}),
        tolerance=1e-18,
    )


def total_dark_rate(dc: DarkCountSet) -> float:
    """Inclusion-exclusion total of dark-induced threefold coincidences."""
    return dc.dc1 + dc.dc2 + dc.dc3 - dc.dc12 - dc.dc13 - dc.dc23


def visibility_two_photon(c_max: float, c_min: float) -> float:
    if c_max <= 0:
        raise UndefinedVisibilityError("two-photon visibility undefined for c_max <= 0")
    if c_min < 0:
        raise DomainError("c_min must be non-negative")
    return (c_max - c_min) / c_max


def visibility_ent(c_max: float, c_min: float) -> tuple[float, float]:
    """Fringe visibility and the teleportation fidelity ``(1 + V) / 2``."""
    if c_max < 0 or c_min < 0:
        raise DomainError("rates must be non-negative")
    if c_max + c_min <= 0:
        raise UndefinedVisibilityError("entanglement visibility undefined for zero rates")
    v = (c_max - c_min) / (c_max + c_min)
    return v, (1.0 + v) / 2.0


def net_correct(raw: VisibilityResult, dc_rate: float,
                herald_rate: float = 1.0) -> VisibilityResult:
    """Subtract dark-count coincidences from both extremal rates.

    ``dc_rate / herald_rate`` must be in the units of ``raw``'s rates; with
    the default ``herald_rate`` both are taken to share units already.
    """
    if dc_rate < 0:
        raise DomainError("dc_rate must be non-negative")
    if herald_rate <= 0:
        raise DomainError("herald_rate must be positive")
    dark = dc_rate / herald_rate
    c_max = raw.c_max - dark
    c_min = raw.c_min - dark
    clamped = False
    if c_min < 0:
        log.warning("dark subtraction drove c_min to %.3g; clamped to 0", c_min)
        c_min, clamped = 0.0, True
    return VisibilityResult.from_rates(c_max, c_min, "net", clamped)


@dataclass(frozen=True)
class PipelineResult:
    config: ExperimentConfig
    herald: HeraldStats
    rates: Rates  # with dark counts
    dark: DarkCountSet
    raw: VisibilityResult
    net: VisibilityResult


def evaluate(config: ExperimentConfig) -> PipelineResult:
    """Run the full pipeline: raw rates with darks, then dark-count correction."""
    rates = threefold_rates(config, include_dark=True)
    c_min = apply_overlap(rates.c_dis, rates.c_indis, config.overlap)
    raw = VisibilityResult.from_rates(rates.c_dis, c_min, "raw")
    dc = dark_count_set(config)
    net = net_correct(raw, total_dark_rate(dc))
    return PipelineResult(
        config=config,
        herald=herald_distribution(config, include_dark=True),
        rates=rates,
        dark=dc,
        raw=raw,
        net=net,
    )


@dataclass(frozen=True)
class SweepRow:
    p1: float
    l1: float
    raw: VisibilityResult | None = None
    net: VisibilityResult | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def sweep(base: ExperimentConfig, p1_values: Sequence[float],
          l1_values: Sequence[float]) -> list[SweepRow]:
    """Evaluate the pipeline on the ``p1 x l1`` grid, p1 varying slowest.

    Failing points become rows with ``error`` set; the sweep never aborts.
    """
    if not len(p1_values) or not len(l1_values):
        raise DomainError("sweep grid is empty")
    rows = []
    for p1 in p1_values:
        for l1 in l1_values:
            try:
                result = evaluate(replace(base, p1=float(p1), l1=float(l1)))
            except (DomainError, UndefinedVisibilityError) as exc:
                rows.append(SweepRow(float(p1), float(l1), error=f"{type(exc).__name__}: {exc}"))
            else:
                rows.append(SweepRow(float(p1), float(l1), result.raw, result.net))
    return rows
