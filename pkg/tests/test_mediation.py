import math

import numpy as np
import pytest
from scipy.special import expit

from causalmed.data import Binary, Column, Continuous, Dataset, VariableRoles
from causalmed.errors import BootstrapError, InputError, RankDeficiencyError, SeparationError
from causalmed.mediation import (
    EffectEstimate,
    EffectTriple,
    bootstrap_ci,
    bootstrap_statistics,
    combine,
    direct_effect,
    effect_triple,
    estimate_pair,
    total_effect,
)


def binary_col(codes):
    return Column(Binary(), np.asarray(codes, dtype=np.int16), np.zeros(len(codes), dtype=np.uint8))


def sim_dataset(rng, n, *, bq=0.8, bx=0.5, bm=0.0, m_on_q=0.8, confound=0.8, weight=False):
    """Binary q/x/m/y rows from a logistic data-generating process."""
    x = rng.integers(0, 2, n)
    q = (rng.random(n) < expit(-1.0 + confound * x)).astype(np.int16)
    m = (rng.random(n) < expit(-0.2 + m_on_q * q + 0.3 * x)).astype(np.int16)
    y = (rng.random(n) < expit(-1.2 + bq * q + bx * x + bm * m)).astype(np.int16)
    cols = {
        "q": binary_col(q),
        "y": binary_col(y),
        "x": binary_col(x),
        "m": binary_col(m),
    }
    if weight:
        w = rng.uniform(0.5, 2.0, n)
        cols["w"] = Column(Continuous(), w, np.zeros(n, dtype=np.uint8))
        return Dataset(cols, weight_column="w")
    return Dataset(cols)


ROLES = VariableRoles(exposure="q", outcome="y", baseline_support="x", mediators=("m",))


def estimate(kind, log_or, variant="primary", ci=None, n=100):
    return EffectEstimate.from_log_or(kind, log_or, ci, variant, n)


class TestCombine:
    def test_reported_table_arithmetic(self):
        indirect = combine(estimate("total", math.log(3.3)), estimate("direct", math.log(3.1)))
        assert 1.05 <= indirect.odds_ratio <= 1.08
        assert indirect.odds_ratio == pytest.approx(3.3 / 3.1, rel=1e-12)

    def test_total_equals_direct_gives_unit_or(self):
        indirect = combine(estimate("total", 0.7), estimate("direct", 0.7))
        assert indirect.odds_ratio == pytest.approx(1.0, abs=1e-15)

    def test_abstract_consistency(self):
        # direct 3.07 times indirect 1.07 lands at the reported total 3.3.
        total = math.exp(math.log(3.07) + math.log(1.07))
        assert total == pytest.approx(3.28, abs=0.01)
        indirect = combine(estimate("total", math.log(total)), estimate("direct", math.log(3.07)))
        assert indirect.odds_ratio == pytest.approx(1.07, rel=1e-12)

    def test_decomposition_identity_exact(self):
        total = estimate("total", 1.19386039351)
        direct = estimate("direct", 1.13140211479)
        indirect = combine(total, direct)
        assert indirect.log_or == total.log_or - direct.log_or
        EffectTriple(total, direct, indirect, seed=0, bootstrap_reps=0)

    def test_variant_mismatch_rejected(self):
        with pytest.raises(InputError, match="variant mismatch"):
            combine(estimate("total", 1.0, "primary"), estimate("direct", 0.9, "simple"))

    def test_sample_mismatch_rejected(self):
        with pytest.raises(InputError, match="different samples"):
            combine(estimate("total", 1.0, n=100), estimate("direct", 0.9, n=99))

    def test_kind_check(self):
        with pytest.raises(InputError):
            combine(estimate("direct", 1.0), estimate("direct", 0.9))


class TestEffects:
    def test_constant_exposure_is_rank_deficient(self):
        rng = np.random.default_rng(1)
        ds = sim_dataset(rng, 200)
        ds = ds.replace_columns({"q": binary_col(np.ones(200, dtype=np.int16))})
        with pytest.raises(RankDeficiencyError):
            total_effect(ds, ROLES, "simple")

    def test_direct_close_to_total_when_mediator_has_no_effect(self):
        rng = np.random.default_rng(7)
        ds = sim_dataset(rng, 60_000, bm=0.0)
        pair = estimate_pair(ds, ROLES, "simple")
        se = math.hypot(
            pair.total_fit.se("q", "sandwich"), pair.direct_fit.se("q", "sandwich")
        )
        assert abs(pair.total_log_or - pair.direct_log_or) < 3 * se

    def test_primary_equals_simple_on_additive_saturated_design(self):
        # Cell odds chosen so the exposure-covariate interaction is exactly
        # zero: the primary and simple exposure coefficients coincide.
        rows = [
            (0, 0, 0, 45.0),
            (0, 0, 1, 15.0),
            (0, 1, 0, 40.0),
            (0, 1, 1, 20.0),
            (1, 0, 0, 30.0),
            (1, 0, 1, 30.0),
            (1, 1, 0, 24.0),
            (1, 1, 1, 36.0),
        ]
        q, x, y, w = (np.array(col) for col in zip(*rows))
        ds = Dataset(
            {
                "q": binary_col(q),
                "x": binary_col(x),
                "y": binary_col(y),
                "w": Column(Continuous(), w, np.zeros(len(w), dtype=np.uint8)),
            },
            weight_column="w",
        )
        roles = VariableRoles(exposure="q", outcome="y", baseline_support="x")
        primary = total_effect(ds, roles, "primary")
        simple = total_effect(ds, roles, "simple")
        assert abs(primary.log_or - simple.log_or) < 1e-6
        assert primary.log_or == pytest.approx(math.log(3.0), abs=1e-6)

    def test_indirect_near_zero_when_mediator_independent_of_exposure(self):
        # Mediator driven by the covariate only; its outcome effect is
        # nonzero, so this also exercises the non-collapsibility gap staying
        # inside the Monte Carlo noise at n = 100k.
        rng = np.random.default_rng(12)
        ds = sim_dataset(rng, 100_000, bq=0.7, bm=0.3, m_on_q=0.0)
        interval = bootstrap_ci(ds, ROLES, "simple", 100, seed=5, target="indirect", method="delta")
        pair = estimate_pair(ds, ROLES, "simple")
        assert abs(pair.indirect_log_or) < 3 * interval.se

    def test_triple_decomposition_and_cis(self):
        rng = np.random.default_rng(3)
        ds = sim_dataset(rng, 2_000, bm=-0.4, weight=True)
        triple = effect_triple(ds, ROLES, "primary", bootstrap_reps=100, seed=9)
        assert triple.indirect.log_or == pytest.approx(
            triple.total.log_or - triple.direct.log_or, abs=1e-15
        )
        for est in triple.estimates():
            lo, hi = est.ci_or
            assert lo <= est.odds_ratio <= hi or est.kind == "indirect"
        obj = triple.to_json_obj()
        assert obj["total"]["or"] == pytest.approx(math.exp(triple.total.log_or))

    def test_mediator_required_for_direct(self):
        rng = np.random.default_rng(2)
        ds = sim_dataset(rng, 300)
        roles = VariableRoles(exposure="q", outcome="y", baseline_support="x")
        with pytest.raises(InputError, match="mediator"):
            direct_effect(ds, roles, "simple")

    def test_unknown_variant(self):
        rng = np.random.default_rng(2)
        ds = sim_dataset(rng, 300)
        with pytest.raises(InputError, match="unknown variant"):
            total_effect(ds, ROLES, "weird")


class TestBootstrap:
    def test_constant_statistic_gives_zero_width(self):
        stats, n_failed = bootstrap_statistics(50, 200, 4, lambda idx: 1.234)
        assert n_failed == 0
        lo, hi = np.percentile(np.exp(stats), [2.5, 97.5])
        assert lo == hi == pytest.approx(math.exp(1.234))

    def test_seed_determinism_bit_identical(self):
        rng = np.random.default_rng(21)
        ds = sim_dataset(rng, 400, bm=0.3)
        a = bootstrap_ci(ds, ROLES, "simple", 120, seed=77)
        b = bootstrap_ci(ds, ROLES, "simple", 120, seed=77)
        assert (a.lo, a.hi) == (b.lo, b.hi)
        c = bootstrap_ci(ds, ROLES, "simple", 120, seed=78)
        assert (a.lo, a.hi) != (c.lo, c.hi)

    def test_threads_do_not_change_results(self):
        rng = np.random.default_rng(22)
        ds = sim_dataset(rng, 400, bm=0.3)
        serial = bootstrap_ci(ds, ROLES, "simple", 120, seed=5, threads=1)
        threaded = bootstrap_ci(ds, ROLES, "simple", 120, seed=5, threads=8)
        assert (serial.lo, serial.hi, serial.se) == (threaded.lo, threaded.hi, threaded.se)

    def test_failed_replicates_counted_and_bounded(self):
        calls = {"n": 0}

        def flaky(idx):
            calls["n"] += 1
            if calls["n"] <= 8:
                raise SeparationError("boom")
            return 0.5

        stats, n_failed = bootstrap_statistics(50, 100, 1, flaky)
        assert n_failed == 8
        assert stats.size == 92

        calls["n"] = 0

        def very_flaky(idx):
            calls["n"] += 1
            if calls["n"] <= 15:
                raise SeparationError("boom")
            return 0.5

        with pytest.raises(BootstrapError, match="15 of 100"):
            bootstrap_statistics(50, 100, 1, very_flaky)

    def test_minimum_replicates(self):
        with pytest.raises(InputError, match="100"):
            bootstrap_statistics(50, 99, 1, lambda idx: 0.0)

    def test_delta_interval_centered_on_estimate(self):
        rng = np.random.default_rng(23)
        ds = sim_dataset(rng, 500, bm=0.3)
        interval = bootstrap_ci(ds, ROLES, "simple", 100, seed=3, method="delta")
        pair = estimate_pair(ds, ROLES, "simple")
        center = math.sqrt(interval.lo * interval.hi)
        assert center == pytest.approx(math.exp(pair.indirect_log_or), rel=1e-9)


class TestCoverage:
    def test_total_effect_null_coverage(self):
        # True conditional OR is 1; the 95% CI should cover it in at least
        # 93% of replicates.
        rng = np.random.default_rng(314)
        covered = 0
        reps = 500
        for _ in range(reps):
            ds = sim_dataset(rng, 600, bq=0.0, bm=0.0)
            est = total_effect(ds, ROLES, "primary")
            lo, hi = est.ci_or
            covered += lo <= 1.0 <= hi
        assert covered >= 0.93 * reps

    def test_bootstrap_indirect_null_coverage(self):
        # Mediator has no outcome effect, so the true indirect OR is 1.
        rng = np.random.default_rng(2718)
        covered = 0
        outer = 200
        for i in range(outer):
            ds = sim_dataset(rng, 300, bq=0.7, bm=0.0, m_on_q=0.8)
            interval = bootstrap_ci(ds, ROLES, "simple", 1000, seed=1000 + i)
            covered += interval.lo <= 1.0 <= interval.hi
        assert covered >= 0.93 * outer
