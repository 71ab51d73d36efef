"""Monte Carlo oracle: photon-by-photon sampling of the relay.

Every trial draws the pair number and laser photon number, flips a fair
coin for each pair photon at the first splitter, thins photons through
each lossy path and detector, routes photons at the BSM splitter (fair
coins when distinguishable, the exact bosonic output law when
indistinguishable), and adds Bernoulli dark counts per detector and window.

Threefold rates at realistic settings are ~1e-8 per window, far below
what 1e7 analog trials can resolve. With ``tilt`` set, every loss and
detection Bernoulli whose success probability is below ``tilt`` is drawn
at ``tilt`` instead (dark counts at a much smaller target), and the source numbers are drawn uniformly over their
support; each trial carries the likelihood ratio as a weight. The
estimator stays unbiased and its standard error is the sample standard
deviation of the weighted indicator over sqrt(trials). With ``tilt=None``
all weights are 1 and the error reduces to ``sqrt(p (1 - p) / trials)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from telesim.errors import DomainError, OracleMismatch
from telesim.fockcore import interfere_indistinguishable
from telesim.sources import LaserSpec, SpdcSpec, laser_distribution, spdc_distribution
from telesim.visibility import ExperimentConfig, Rates

ALGORITHM = "numpy-PCG64/SeedSequence.spawn"
CHUNK_SIZE = 500_000
REGIMES = ("distinguishable", "indistinguishable")

_MAX_BSM_IN = (4, 2)  # path-2 photons, laser photons

# dark counts are boosted far less than photon events: three detectors
# each carry a (1 - d) / (1 - q) weight on every trial
DARK_TILT = 0.02


@dataclass(frozen=True)
class TrialOutcome:
    herald_click: bool
    spd1_click: bool
    spd2_click: bool
    regime: str

    @property
    def threefold(self) -> bool:
        return self.herald_click and self.spd1_click and self.spd2_click


@dataclass(frozen=True)
class OracleEstimate:
    c_dis_hat: float
    c_indis_hat: float
    std_err_dis: float
    std_err_indis: float
    trials: int
    seed: int
    tilt: float | None = None
    algorithm: str = ALGORITHM

    def as_rates(self) -> Rates:
        return Rates(self.c_dis_hat, self.c_indis_hat)


def _indis_cdf() -> np.ndarray:
    nj, nm = _MAX_BSM_IN
    cdf = np.ones((nj + 1, nm + 1, nj + nm + 1))
    for j in range(nj + 1):
        for m in range(nm + 1):
            law = interfere_indistinguishable(j, m)
            probs = [law[(a, j + m - a)] for a in range(j + m + 1)]
            cdf[j, m, : j + m + 1] = np.cumsum(probs)
    return cdf


_CDF = _indis_cdf()


def _target(p: float, tilt: float | None) -> float:
    if tilt is None or p <= 0.0 or p >= tilt:
        return p
    return tilt


def _binomial(rng, n, p: float, tilt: float | None, w: np.ndarray) -> np.ndarray:
    """Count of successes among ``n`` Bernoulli(p); reweights ``w`` in place if tilted."""
    q = _target(p, tilt)
    k = rng.binomial(n, q)
    if q != p:
        w *= (p / q) ** k * ((1.0 - p) / (1.0 - q)) ** (n - k)
    return k


def _dark(rng, d: float, size: int, tilt: float | None, w: np.ndarray) -> np.ndarray:
    dark_tilt = None if tilt is None else min(tilt, DARK_TILT)
    return _binomial(rng, np.ones(size, dtype=np.int64), d, dark_tilt, w) > 0


def _categorical(rng, probs: np.ndarray, size: int, tilt: float | None,
                 w: np.ndarray) -> np.ndarray:
    if tilt is None:
        return rng.choice(len(probs), size=size, p=probs)
    support = probs > 0
    q = support / support.sum()
    k = rng.choice(len(probs), size=size, p=q)
    w *= probs[k] / q[k]
    return k


def _simulate_chunk(config: ExperimentConfig, n: int, rng: np.random.Generator,
                    tilt: float | None) -> dict[str, np.ndarray]:
    eta = config.eta
    d1, d2, d3 = config.dark_probs
    pairs = spdc_distribution(SpdcSpec(config.p1))
    laser = laser_distribution(LaserSpec(config.l1))
    pair_probs = np.array([pairs[k] for k in range(3)])
    laser_probs = np.array([laser[m] for m in range(3)])

    w = np.ones(n)
    k = _categorical(rng, pair_probs, n, tilt, w)
    n2 = rng.binomial(2 * k, 0.5)
    n3 = 2 * k - n2

    arrived3 = _binomial(rng, n3, config.t3, tilt, w)
    detected3 = _binomial(rng, arrived3, eta, tilt, w)
    herald = (detected3 > 0) | _dark(rng, d3, n, tilt, w)

    j = _binomial(rng, n2, config.t2, tilt, w)
    out = {"herald": herald, "j": j, "w_herald": w.copy()}
    m = _categorical(rng, laser_probs, n, tilt, w)
    total = j + m

    for regime in REGIMES:
        wr = w.copy()
        if regime == "distinguishable":
            left = rng.binomial(total, 0.5)
        else:
            u = rng.random(n)
            left = np.minimum((_CDF[j, m] < u[:, None]).sum(axis=1), total)
        right = total - left
        click1 = (_binomial(rng, left, eta, tilt, wr) > 0) | _dark(rng, d1, n, tilt, wr)
        click2 = (_binomial(rng, right, eta, tilt, wr) > 0) | _dark(rng, d2, n, tilt, wr)
        out[regime] = (click1, click2, wr)
    return out


def _chunk_sums(args) -> tuple[float, float, float, float]:
    config, n, seed_seq, tilt = args
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    sim = _simulate_chunk(config, n, rng, tilt)
    sums = []
    for regime in REGIMES:
        click1, click2, wr = sim[regime]
        x = np.where(sim["herald"] & click1 & click2, wr, 0.0)
        sums.extend((math.fsum(x), math.fsum(x * x)))
    return tuple(sums)


def _chunks(trials: int, seed: int, chunk_size: int):
    n_chunks = -(-trials // chunk_size)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    for i, child in enumerate(children):
        yield min(chunk_size, trials - i * chunk_size), child


def run_oracle(config: ExperimentConfig, trials: int, seed: int, *,
               tilt: float | None = None, workers: int = 1,
               chunk_size: int = CHUNK_SIZE) -> OracleEstimate:
    """Estimate threefold rates for both regimes by sampling.

    Output depends only on ``(config, trials, seed, tilt, chunk_size)``;
    ``workers`` changes wall time, never the estimate.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if tilt is not None and not 0.0 < tilt < 1.0:
        raise DomainError("tilt must lie in (0, 1)")
    jobs = [(config, n, child, tilt) for n, child in _chunks(trials, seed, chunk_size)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_sums, jobs))
    else:
        parts = [_chunk_sums(job) for job in jobs]

    stats = []
    for col in (0, 2):
        mean = math.fsum(p[col] for p in parts) / trials
        second = math.fsum(p[col + 1] for p in parts) / trials
        stats.append((mean, math.sqrt(max(second - mean * mean, 0.0) / trials)))
    (c_dis, se_dis), (c_indis, se_indis) = stats
    return OracleEstimate(c_dis, c_indis, se_dis, se_indis, trials, seed, tilt)


def _herald_sums(args) -> list[tuple[float, float]]:
    config, n, seed_seq, tilt = args
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    sim = _simulate_chunk(config, n, rng, tilt)
    sums = []
    for j in range(_MAX_BSM_IN[0] + 1):
        x = np.where(sim["herald"] & (sim["j"] == j), sim["w_herald"], 0.0)
        sums.append((math.fsum(x), math.fsum(x * x)))
    return sums


def run_herald_oracle(config: ExperimentConfig, trials: int, seed: int, *,
                      tilt: float | None = None,
                      chunk_size: int = CHUNK_SIZE) -> list[tuple[float, float]]:
    """Sampled ``(h_j, std_err)`` for j = 0..4, same process as :func:`run_oracle`."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    parts = [_herald_sums((config, n, child, tilt))
             for n, child in _chunks(trials, seed, chunk_size)]
    out = []
    for j in range(_MAX_BSM_IN[0] + 1):
        mean = math.fsum(p[j][0] for p in parts) / trials
        second = math.fsum(p[j][1] for p in parts) / trials
        out.append((mean, math.sqrt(max(second - mean * mean, 0.0) / trials)))
    return out


def sample_trials(config: ExperimentConfig, trials: int, seed: int,
                  regime: str = "indistinguishable") -> list[TrialOutcome]:
    """Unweighted per-trial click records, for inspection and small tests."""
    if regime not in REGIMES:
        raise DomainError(f"unknown regime {regime!r}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    sim = _simulate_chunk(config, trials, rng, None)
    click1, click2, _ = sim[regime]
    return [
        TrialOutcome(bool(h), bool(a), bool(b), regime)
        for h, a, b in zip(sim["herald"], click1, click2)
    ]


@dataclass(frozen=True)
class RegimeCheck:
    regime: str
    analytic: float
    estimate: float
    std_err: float
    z: float
    passed: bool


@dataclass(frozen=True)
class ComparisonReport:
    checks: tuple[RegimeCheck, ...]
    sigma: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def raise_for_failure(self) -> None:
        for c in self.checks:
            if not c.passed:
                raise OracleMismatch(
                    c.regime, c.z,
                    f"{c.regime}: analytic {c.analytic:.6g} vs estimate "
                    f"{c.estimate:.6g} +- {c.std_err:.3g} (z = {c.z:.3g}, limit {self.sigma})",
                )


def _z(analytic: float, estimate: float, std_err: float) -> float:
    diff = estimate - analytic
    if std_err > 0:
        return diff / std_err
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def compare(analytic: Rates | Iterable[float], estimate: OracleEstimate,
            sigma: float = 3.0) -> ComparisonReport:
    """Check both regimes agree within ``sigma`` standard errors."""
    c_dis, c_indis = analytic
    checks = []
    for regime, a, e, se in (
        ("distinguishable", c_dis, estimate.c_dis_hat, estimate.std_err_dis),
        ("indistinguishable", c_indis, estimate.c_indis_hat, estimate.std_err_indis),
    ):
        z = _z(a, e, se)
        checks.append(RegimeCheck(regime, a, e, se, z, abs(z) <= sigma))
    return ComparisonReport(tuple(checks), sigma)
