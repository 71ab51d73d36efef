import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from telesim.errors import DomainError, UndefinedVisibilityError
from telesim.fockcore import PhotonNumberDistribution
from telesim.oracle import compare, run_herald_oracle, run_oracle
from telesim.sources import LaserSpec, laser_distribution
from telesim.visibility import (
    DarkCountSet,
    ExperimentConfig,
    HeraldStats,
    VisibilityResult,
    apply_overlap,
    bsm_rates,
    dark_count_set,
    evaluate,
    herald_distribution,
    net_correct,
    sweep,
    threefold_rates,
    total_dark_rate,
    visibility_ent,
    visibility_two_photon,
)

NOMINAL = ExperimentConfig(p1=0.02, l1=0.02, t2=0.1, t3=0.1, eta=0.2)
NO_DARK = NOMINAL.without_dark()

small = st.floats(0.0, 0.29)
unit = st.floats(0.0, 1.0)


class TestConfig:
    @pytest.mark.parametrize("field, value", [("eta", 1.5), ("t2", -0.1), ("overlap", 2.0),
                                              ("window_ns", 0.0), ("dark1", -1.0), ("p1", 0.4)])
    def test_domain(self, field, value):
        with pytest.raises(DomainError):
            replace(ExperimentConfig(), **{field: value})

    def test_dark_probs(self):
        assert ExperimentConfig().dark_probs == pytest.approx((1.5e-5,) * 3)


class TestHerald:
    def test_source_off(self):
        h = herald_distribution(replace(NO_DARK, p1=0.0))
        assert all(x == 0.0 for x in h.h)

    def test_herald_arm_blocked(self):
        h = herald_distribution(replace(NO_DARK, t3=0.0))
        assert all(x == 0.0 for x in h.h)

    def test_hand_derived_values(self):
        h = herald_distribution(NO_DARK)
        # single pair split 1/1, herald tη, path-2 photon survives t2
        single = 0.02 * 0.5 * 0.02 * 0.1
        # double pair: splits (1,3), (2,2), (3,1) leaving one photon in path 2
        double = 0.02**2 * (
            0.25 * (1 - 0.98**3) * 0.1
            + 0.375 * (1 - 0.98**2) * 2 * 0.1 * 0.9
            + 0.25 * 0.02 * 3 * 0.1 * 0.81
        )
        assert h.h1 == pytest.approx(single + double, rel=1e-12)
        assert h[4] == 0.0  # four path-2 photons leave the herald arm empty

    def test_total_is_herald_probability(self):
        h = herald_distribution(NO_DARK)
        t_eta = 0.02
        direct = (0.02 * (0.5 * t_eta + 0.25 * (1 - (1 - t_eta) ** 2))
                  + 0.02**2 * sum(math.comb(4, n3) / 16 * (1 - (1 - t_eta) ** n3) for n3 in range(5)))
        assert h.total == pytest.approx(direct, rel=1e-12)
        assert h.total <= 1.0

    def test_matches_monte_carlo(self):
        analytic = herald_distribution(NOMINAL, include_dark=True)
        sampled = run_herald_oracle(NOMINAL, 10_000_000, seed=2024, tilt=0.5)
        for j, (mean, se) in enumerate(sampled[:4]):
            assert abs(mean - analytic[j]) <= 3 * se, (j, mean, analytic[j], se)


class TestBsmRates:
    def test_hom_single_photons(self):
        rates = bsm_rates(HeraldStats((0.0, 1.0)), PhotonNumberDistribution({1: 1.0}), 1.0)
        assert rates.c_dis == pytest.approx(0.5, abs=1e-15)
        assert rates.c_indis == 0.0

    def test_laser_vacuum_means_no_interference(self):
        h = herald_distribution(NO_DARK)
        rates = bsm_rates(h, PhotonNumberDistribution({0: 1.0}), 0.2)
        assert rates.c_dis == pytest.approx(rates.c_indis, rel=1e-12)
        assert rates.c_dis > 0

    def test_pipeline_composition(self):
        laser = laser_distribution(LaserSpec(NOMINAL.l1))
        assert bsm_rates(herald_distribution(NO_DARK), laser, 0.2) == threefold_rates(NO_DARK)

    def test_nominal_point_matches_monte_carlo(self):
        analytic = threefold_rates(NO_DARK)
        est = run_oracle(NO_DARK, 10_000_000, seed=99, tilt=0.5)
        report = compare(analytic, est, sigma=3.0)
        assert report.passed, report


class TestOverlap:
    def test_examples(self):
        assert apply_overlap(3.0, 1.0, 1.0) == 1.0
        assert apply_overlap(3.0, 1.0, 0.0) == 3.0
        assert apply_overlap(1.0, 0.0, 0.91) == pytest.approx(0.09, abs=1e-15)

    @given(st.floats(0, 1), st.floats(0, 1), unit, unit)
    def test_monotone_decreasing(self, c_indis, extra, o1, o2):
        c_dis = c_indis + extra
        lo, hi = sorted((o1, o2))
        assert apply_overlap(c_dis, c_indis, hi) <= apply_overlap(c_dis, c_indis, lo) + 1e-15

    def test_domain(self):
        with pytest.raises(DomainError):
            apply_overlap(1.0, 0.0, 1.1)


class TestVisibility:
    def test_two_photon_examples(self):
        assert visibility_two_photon(2.0, 1.0) == 0.5
        assert visibility_two_photon(1.0, 0.0) == 1.0

    def test_ent_examples(self):
        v, f = visibility_ent(2.0, 1.0)
        assert v == pytest.approx(1 / 3) and f == pytest.approx(2 / 3)
        assert visibility_ent(1.0, 0.0) == (1.0, 1.0)

    def test_undefined(self):
        with pytest.raises(UndefinedVisibilityError):
            visibility_two_photon(0.0, 0.0)
        with pytest.raises(UndefinedVisibilityError):
            visibility_ent(0.0, 0.0)

    @given(st.floats(1e-12, 1.0), st.floats(0.0, 1.0), st.floats(1e-6, 1e6))
    def test_scale_invariant(self, c_max, frac, scale):
        c_min = c_max * frac
        r = VisibilityResult.from_rates(c_max, c_min)
        s = VisibilityResult.from_rates(c_max * scale, c_min * scale)
        assert s.v_two_photon == pytest.approx(r.v_two_photon, abs=1e-12)
        assert s.v_ent == pytest.approx(r.v_ent, abs=1e-12)

    @given(st.floats(1e-12, 1.0), st.floats(1e-6, 1.0))
    def test_ent_below_two_photon(self, c_max, frac):
        r = VisibilityResult.from_rates(c_max, c_max * frac)
        assert r.v_ent <= r.v_two_photon + 1e-15
        assert r.fidelity == pytest.approx((1 + r.v_ent) / 2)


class TestDarkCounts:
    def test_examples(self):
        assert total_dark_rate(DarkCountSet()) == 0.0
        assert total_dark_rate(DarkCountSet(3, 3, 3, 1, 1, 1)) == 6.0
        assert total_dark_rate(DarkCountSet(1.5, 2.5, 4.0)) == 8.0

    def test_pairwise_bound(self):
        with pytest.raises(DomainError):
            DarkCountSet(1.0, 1.0, 1.0, dc12=2.0)

    def test_brute_force_on_synthetic_poisson_darks(self):
        """Blocked-detector runs + inclusion-exclusion vs. direct attribution."""
        windows = 1_000_000
        dark_rates = np.array([4e-4, 6e-4, 3e-4])  # per ns
        window_ns = 25.0
        dark_p = 1 - np.exp(-dark_rates * window_ns)
        rng = np.random.default_rng(5)

        def run(blocked=()):
            source = rng.random(windows) < 0.3
            photon = [source & (rng.random(windows) < q) for q in (0.5, 0.45, 0.6)]
            dark = [rng.poisson(r * window_ns, windows) > 0 for r in dark_rates]
            fired = [d if i + 1 in blocked else (p | d)
                     for i, (p, d) in enumerate(zip(photon, dark))]
            return fired, dark

        fired, dark = run()
        # every subset S of dark-fired detectors that completes a threefold
        involved = np.zeros(windows, dtype=bool)
        for size in (1, 2, 3):
            for subset in itertools.combinations(range(3), size):
                ok = np.ones(windows, dtype=bool)
                for i in range(3):
                    ok &= dark[i] if i in subset else fired[i]
                involved |= ok
        direct = involved.mean()
        se_direct = math.sqrt(direct * (1 - direct) / windows)

        measured, var = {}, 0.0
        for blocked in ((1,), (2,), (3,), (1, 2), (1, 3), (2, 3)):
            f, _ = run(blocked)
            rate = (f[0] & f[1] & f[2]).mean()
            measured["dc" + "".join(map(str, blocked))] = rate
            var += rate * (1 - rate) / windows
        dc = total_dark_rate(DarkCountSet(**measured, tolerance=1e-3))
        assert abs(dc - direct) <= 3 * math.sqrt(var + se_direct**2)
        assert dark_p.max() < 0.02

    @pytest.mark.parametrize("dark", [3e-8, 3e-6, 1e-4])
    def test_synthesized_set_against_exact_dark_excess(self, dark):
        # Blocked-detector inclusion-exclusion counts every threefold with at
        # least one dark click, bar the triple-dark term. The exact excess over
        # the dark-free rate leaves out photon threefolds that also got a dark.
        cfg = replace(NOMINAL, dark1=dark, dark2=dark, dark3=dark)

        def mid(r):
            return 0.5 * (r.c_dis + apply_overlap(r.c_dis, r.c_indis, cfg.overlap))

        bare = mid(threefold_rates(cfg))
        excess = mid(threefold_rates(cfg, include_dark=True)) - bare
        d = cfg.dark_probs
        expected = excess + bare * (1 - math.prod(1 - x for x in d)) - math.prod(d)
        assert total_dark_rate(dark_count_set(cfg)) == pytest.approx(expected, rel=1e-9)


class TestNetCorrection:
    def test_identity(self):
        raw = VisibilityResult.from_rates(2.0, 1.0)
        net = net_correct(raw, 0.0)
        assert (net.c_max, net.c_min, net.v_two_photon) == (2.0, 1.0, 0.5)
        assert net.variant == "net"

    def test_arithmetic(self):
        net = net_correct(VisibilityResult.from_rates(2.0, 1.0), 0.5)
        assert net.v_two_photon == pytest.approx(2 / 3)

    def test_herald_normalization(self):
        net = net_correct(VisibilityResult.from_rates(2.0, 1.0), 50.0, herald_rate=100.0)
        assert net.v_two_photon == pytest.approx(2 / 3)

    def test_clamps_negative(self, caplog):
        net = net_correct(VisibilityResult.from_rates(2.0, 0.2), 0.5)
        assert net.c_min == 0.0 and net.clamped
        assert "clamped" in caplog.text

    @pytest.mark.parametrize("p1, l1, dark", list(itertools.product(
        (0.01, 0.03), (0.005, 0.05), (1e-7, 1e-6, 1e-5))))
    def test_net_exceeds_raw(self, p1, l1, dark):
        res = evaluate(replace(NOMINAL, p1=p1, l1=l1, dark1=dark, dark2=dark, dark3=dark))
        assert res.net.v_two_photon > res.raw.v_two_photon
        assert res.net.v_ent > res.raw.v_ent


class TestPipeline:
    @settings(max_examples=40, deadline=None)
    @given(small, small, unit, unit, unit, unit)
    def test_interference_only_suppresses(self, p1, l1, t2, t3, eta, overlap):
        cfg = ExperimentConfig(p1=p1, l1=l1, t2=t2, t3=t3, eta=eta, overlap=overlap)
        for dark in (False, True):
            r = threefold_rates(cfg, include_dark=dark)
            assert 0.0 <= r.c_indis <= r.c_dis + 1e-18

    def test_default_operating_point(self):
        res = evaluate(ExperimentConfig(p1=0.02, l1=0.03))
        assert res.raw.c_min <= res.raw.c_max
        assert res.net.v_two_photon == pytest.approx(
            (res.net.c_max - res.net.c_min) / res.net.c_max)

    def test_herald_dark_count_opens_four_photon_term(self):
        assert evaluate(NOMINAL).herald.h[4] > 0.0


class TestSweep:
    def test_single_point_matches_direct_call(self):
        (row,) = sweep(NOMINAL, [0.02], [0.02])
        direct = evaluate(NOMINAL)
        assert row.raw == direct.raw and row.net == direct.net

    def test_ent_visibility_falls_with_pair_rate(self):
        rows = sweep(replace(NOMINAL, l1=0.02), [0.01, 0.02, 0.03], [0.02])
        v = [r.net.v_ent for r in rows]
        assert v[0] > v[1] > v[2]

    def test_grid_order_and_flagged_rows(self):
        rows = sweep(NOMINAL, [0.01, 0.35], [0.01, 0.02])
        assert [(r.p1, r.l1) for r in rows] == [(0.01, 0.01), (0.01, 0.02), (0.35, 0.01), (0.35, 0.02)]
        assert rows[0].ok and not rows[2].ok
        assert "DomainError" in rows[2].error

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            sweep(NOMINAL, [], [0.01])

    def test_sweep_grid_spot_checks_against_monte_carlo(self):
        p1_axis = np.linspace(0.005, 0.05, 50)
        l1_axis = np.linspace(0.0025, 0.1, 50)
        rows = sweep(NOMINAL, p1_axis, l1_axis)
        assert len(rows) == 2500 and all(r.ok for r in rows)
        rng = np.random.default_rng(17)
        for idx in rng.choice(len(rows), size=5, replace=False):
            row = rows[idx]
            cfg = replace(NOMINAL, p1=row.p1, l1=row.l1)
            analytic = threefold_rates(cfg, include_dark=True)
            assert row.raw.c_max == analytic.c_dis
            est = run_oracle(cfg, 2_000_000, seed=int(idx), tilt=0.5)
            assert compare(analytic, est, sigma=3.0).passed, (row.p1, row.l1)
