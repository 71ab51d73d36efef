"""Exact photon-number algebra for two-mode linear optics.

Occupations are either a single photon count ``n`` (one mode) or a pair
``(n_left, n_right)`` (two modes). The balanced beamsplitter is fixed to

    a+ -> (c+ + d+) / sqrt(2),    b+ -> (c+ - d+) / sqrt(2)

with ``a``/``b`` the input ports and ``c``/``d`` the left/right outputs.
Output laws are computed in exact rational arithmetic and only then
rounded to floats, so analytically forced zeros (the Hong-Ou-Mandel
null) come out as exact zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType
from typing import Iterator, Mapping, Union

from telesim.errors import DomainError, TruncationError

DEFAULT_TRUNCATION = 6

Occupation = Union[int, tuple[int, int]]

_PROB_TOL = 1e-12


def _photons(occ: Occupation) -> int:
    return occ if isinstance(occ, int) else occ[0] + occ[1]


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Probability mass over photon numbers in one or two modes.

    The mass may be sub-normalized (e.g. joint with a herald event);
    ``is_normalized`` tells the two cases apart. Missing occupations have
    probability zero.
    """

    entries: Mapping[Occupation, float]
    truncation: int = DEFAULT_TRUNCATION

    def __post_init__(self):
        if self.truncation < 0:
            raise DomainError(f"truncation must be >= 0, got {self.truncation}")
        if not self.entries:
            raise DomainError("distribution has no entries")
        clean = {}
        kinds = set()
        for occ, p in self.entries.items():
            if isinstance(occ, tuple):
                occ = (int(occ[0]), int(occ[1]))
                if min(occ) < 0:
                    raise DomainError(f"negative occupation {occ}")
                kinds.add(2)
            else:
                occ = int(occ)
                if occ < 0:
                    raise DomainError(f"negative occupation {occ}")
                kinds.add(1)
            if _photons(occ) > self.truncation:
                raise TruncationError(
                    f"occupation {occ} exceeds truncation {self.truncation}"
                )
            p = float(p)
            if not -_PROB_TOL <= p <= 1.0 + _PROB_TOL:
                raise DomainError(f"probability {p} for {occ} outside [0, 1]")
            clean[occ] = clean.get(occ, 0.0) + min(max(p, 0.0), 1.0)
        if len(kinds) != 1:
            raise DomainError("mixed one-mode and two-mode occupations")
        total = math.fsum(clean.values())
        if total > 1.0 + _PROB_TOL:
            raise DomainError(f"probabilities sum to {total} > 1")
        object.__setattr__(self, "entries", MappingProxyType(clean))

    @property
    def modes(self) -> int:
        return 2 if isinstance(next(iter(self.entries)), tuple) else 1

    @property
    def total(self) -> float:
        return math.fsum(self.entries.values())

    @property
    def is_normalized(self) -> bool:
        return abs(self.total - 1.0) <= _PROB_TOL

    def __getitem__(self, occ: Occupation) -> float:
        return self.entries.get(occ, 0.0)

    def __iter__(self) -> Iterator[Occupation]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def marginal(self, mode: int) -> PhotonNumberDistribution:
        """Photon-number law of one output mode of a two-mode distribution."""
        if self.modes != 2:
            raise DomainError("marginal() needs a two-mode distribution")
        out: dict[int, float] = {}
        for occ, p in self.entries.items():
            out[occ[mode]] = out.get(occ[mode], 0.0) + p
        return PhotonNumberDistribution(out, self.truncation)


@dataclass(frozen=True)
class TwoModeAmplitudes:
    """Complex amplitudes over two-mode occupations ``(n_left, n_right)``."""

    entries: Mapping[tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        norm = math.fsum(abs(a) ** 2 for a in self.entries.values())
        if abs(norm - 1.0) > _PROB_TOL:
            raise DomainError(f"squared amplitudes sum to {norm}, not 1")
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __getitem__(self, occ: tuple[int, int]) -> complex:
        return self.entries.get(occ, 0.0)

    def items(self):
        return self.entries.items()

    def probabilities(self, truncation: int = DEFAULT_TRUNCATION) -> PhotonNumberDistribution:
        return PhotonNumberDistribution(
            {occ: abs(a) ** 2 for occ, a in self.entries.items()}, truncation
        )


@dataclass(frozen=True)
class DetectorSpec:
    """Non photon-number-resolving detector.

    ``dark_rate`` is the dark-count probability per nanosecond.
    """

    efficiency: float
    dark_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise DomainError(f"efficiency {self.efficiency} outside [0, 1]")
        if self.dark_rate < 0.0:
            raise DomainError(f"dark_rate {self.dark_rate} is negative")


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name}={value} outside [0, 1]")


def _check_photons(total: int, truncation: int) -> None:
    if total < 0:
        raise DomainError(f"negative photon number {total}")
    if total > truncation:
        raise TruncationError(f"{total} photons exceed truncation {truncation}")


def split_balanced(n: int, truncation: int = DEFAULT_TRUNCATION) -> PhotonNumberDistribution:
    """Route ``n`` photons independently through a 50/50 splitter."""
    _check_photons(n, truncation)
    return PhotonNumberDistribution(
        {(k, n - k): math.comb(n, k) / 2.0**n for k in range(n + 1)}, truncation
    )


def _thin(n: int, t: float) -> Iterator[tuple[int, float]]:
    for k in range(n + 1):
        yield k, math.comb(n, k) * t**k * (1.0 - t) ** (n - k)


def apply_loss(
    dist: PhotonNumberDistribution, t: float, mode: int | None = None
) -> PhotonNumberDistribution:
    """Binomial thinning of every occupation by transmission ``t``.

    For two-mode input, ``mode`` selects the lossy mode (0 or 1); ``None``
    applies the same transmission to both.
    """
    _check_unit("t", t)
    out: dict[Occupation, float] = {}
    if dist.modes == 1:
        for n, p in dist.items():
            for k, w in _thin(n, t):
                out[k] = out.get(k, 0.0) + p * w
        return PhotonNumberDistribution(out, dist.truncation)

    if mode not in (None, 0, 1):
        raise DomainError(f"mode must be 0, 1 or None, got {mode}")
    t_left = t if mode in (None, 0) else 1.0
    t_right = t if mode in (None, 1) else 1.0
    for (nl, nr), p in dist.items():
        for kl, wl in _thin(nl, t_left):
            for kr, wr in _thin(nr, t_right):
                out[(kl, kr)] = out.get((kl, kr), 0.0) + p * wl * wr
    return PhotonNumberDistribution(out, dist.truncation)


def click_probability(N: int, t: float, eta: float) -> float:
    """Probability that a threshold detector fires on ``N`` incident photons."""
    if N < 0:
        raise DomainError(f"negative photon number {N}")
    _check_unit("t", t)
    _check_unit("eta", eta)
    return 1.0 - (1.0 - t * eta) ** N


@lru_cache(maxsize=None)
def _bosonic_law(n: int, m: int) -> tuple[tuple[tuple[int, int], Fraction, int], ...]:
    """Exact output law for ``n`` and ``m`` photons in ports a and b.

    Returns ``((a, b), probability, sign)`` triples; ``sign`` is the sign
    of the real output amplitude.
    """
    total = n + m
    denom = math.factorial(n) * math.factorial(m) * 2**total
    out = []
    for left in range(total + 1):
        right = total - left
        # coefficient of c^left d^right in (c + d)^n (c - d)^m
        s = 0
        for k in range(max(0, left - m), min(n, left) + 1):
            s += math.comb(n, k) * math.comb(m, left - k) * (-1) ** (m - left + k)
        prob = Fraction(math.factorial(left) * math.factorial(right) * s * s, denom)
        out.append(((left, right), prob, (s > 0) - (s < 0)))
    return tuple(out)


def interference_amplitudes(
    n: int, m: int, truncation: int = DEFAULT_TRUNCATION
) -> TwoModeAmplitudes:
    """Output amplitudes of the balanced splitter for Fock input ``|n, m>``."""
    _check_photons(n, truncation)
    _check_photons(m, truncation)
    _check_photons(n + m, truncation)
    return TwoModeAmplitudes(
        {occ: sign * math.sqrt(prob) for occ, prob, sign in _bosonic_law(n, m)}
    )


def interfere_indistinguishable(
    n: int, m: int, truncation: int = DEFAULT_TRUNCATION
) -> PhotonNumberDistribution:
    """Output photon statistics for indistinguishable bosons ``|n, m>``."""
    _check_photons(n, truncation)
    _check_photons(m, truncation)
    _check_photons(n + m, truncation)
    return PhotonNumberDistribution(
        {occ: float(prob) for occ, prob, _ in _bosonic_law(n, m)}, truncation
    )


def interfere_distinguishable(
    n: int, m: int, truncation: int = DEFAULT_TRUNCATION
) -> PhotonNumberDistribution:
    """Output statistics when every photon picks an output port by a fair coin."""
    _check_photons(n, truncation)
    _check_photons(m, truncation)
    _check_photons(n + m, truncation)
    total = n + m
    return PhotonNumberDistribution(
        {(k, total - k): math.comb(total, k) / 2.0**total for k in range(total + 1)},
        truncation,
    )


def dual_click_probability(
    dist: PhotonNumberDistribution, det_left: DetectorSpec, det_right: DetectorSpec
) -> float:
    """Probability that both output detectors fire.

    Transmission is assumed already folded into ``dist``; dark counts are
    deliberately ignored here and booked at the coincidence-rate level.
    """
    if dist.modes != 2:
        raise DomainError("dual_click_probability needs a two-mode distribution")
    eta_l, eta_r = det_left.efficiency, det_right.efficiency
    return math.fsum(
        p * (1.0 - (1.0 - eta_l) ** nl) * (1.0 - (1.0 - eta_r) ** nr)
        for (nl, nr), p in dist.items()
    )
