"""Error metrics: closed forms against series oracles, simulations, and identities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semtrack.metrics import (
    ConsecErrorSpec,
    actuation_error_cost,
    avg_consecutive_error,
    avg_importance_consec,
    avg_importance_consec_mirrored,
    consec_error_pmf,
    consec_transition_prob,
    importance_pmf,
    importance_reset_prob,
    importance_transition,
    metric_report,
    monotone_error_regions,
    reconstruction_error_rate,
    rs_actuation_cost,
    rs_beats_semantics,
    rs_reconstruction_error,
    rs_vs_semantics_thresholds,
    violation_probability,
)
from semtrack.model import (
    ChannelParams,
    CostWeights,
    DegenerateModelError,
    ParameterError,
    RsPolicy,
    SourceParams,
    stationary_rs,
    stationary_semantics_aware,
)
from semtrack.sim import SimConfig, simulate

from conftest import rand_model, truncated_series_mean, truncated_series_sum


def spec_of(p, q, ps0, ps1, pa0, pa1):
    return ConsecErrorSpec.from_params(SourceParams(p, q), ChannelParams(ps0, ps1),
                                       RsPolicy(pa0, pa1))


def rand_spec(rng, pa_lo=0.0):
    src, ch, pol = rand_model(rng, pa_lo=pa_lo)
    return ConsecErrorSpec.from_params(src, ch, pol)


class TestErrorRateAndCost:
    def test_perfect_tracking_zero(self):
        st_ = stationary_rs(SourceParams(0.4, 0.2), ChannelParams(1, 1), RsPolicy(1, 1))
        assert reconstruction_error_rate(st_) == 0.0

    def test_state1_never_sampled(self):
        st_ = stationary_rs(SourceParams(0.3, 0.2), ChannelParams(0.8, 0.5), RsPolicy(0.6, 0.0))
        assert reconstruction_error_rate(st_) == pytest.approx(0.3 / 0.5, abs=1e-12)

    def test_reference_error_rate(self):
        # published value 0.151 for p=0.2 q=0.4 ps=(0.5,0.6) at full sampling
        st_ = stationary_rs(SourceParams(0.2, 0.4), ChannelParams(0.5, 0.6), RsPolicy(1, 1))
        assert reconstruction_error_rate(st_) == pytest.approx(0.151, abs=1e-3)

    def test_two_routes_agree(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            src, ch, pol = rand_model(rng)
            st_ = stationary_rs(src, ch, pol)
            assert rs_reconstruction_error(src, ch, pol) == pytest.approx(
                reconstruction_error_rate(st_), abs=1e-12)
            cw = CostWeights(rng.uniform(0.1, 3), rng.uniform(0.1, 3))
            assert rs_actuation_cost(src, ch, pol, cw) == pytest.approx(
                actuation_error_cost(st_, cw), abs=1e-12)

    def test_cost_examples(self):
        st_ = stationary_rs(SourceParams(0.3, 0.1), ChannelParams(0.2, 0.3), RsPolicy(0.0, 0.667))
        assert actuation_error_cost(st_, CostWeights(1, 2)) == pytest.approx(0.25, abs=1e-3)
        st2 = stationary_rs(SourceParams(0.4, 0.2), ChannelParams(1, 1), RsPolicy(1, 1))
        assert actuation_error_cost(st2, CostWeights(3, 7)) == 0.0

    def test_unit_costs_collapse_to_error_rate(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            src, ch, pol = rand_model(rng)
            st_ = stationary_rs(src, ch, pol)
            assert actuation_error_cost(st_, CostWeights(1, 1)) == pytest.approx(
                reconstruction_error_rate(st_), abs=1e-15)

    def test_cost_linearity(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            src, ch, pol = rand_model(rng)
            st_ = stationary_rs(src, ch, pol)
            a, b = rng.uniform(0.1, 2, 2)
            c1 = CostWeights(a, b)
            c2 = CostWeights(b, a)
            lhs = actuation_error_cost(st_, CostWeights(a + b, a + b))
            assert lhs == pytest.approx(
                actuation_error_cost(st_, c1) + actuation_error_cost(st_, c2), rel=1e-12)


class TestConsecErrorPmf:
    def test_perfect_tracking(self):
        spec = spec_of(0.4, 0.2, 1, 1, 1, 1)
        assert consec_error_pmf(spec, 1) == 0.0
        assert consec_error_pmf(spec, 0) == 1.0

    def test_tail_mass_equals_error_mass(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            spec = rand_spec(rng, pa_lo=0.05)
            tail = truncated_series_sum(lambda i: consec_error_pmf(spec, i))
            assert tail == pytest.approx(spec.stationary.pi01 + spec.stationary.pi10, abs=1e-10)

    def test_full_normalization(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            spec = rand_spec(rng, pa_lo=0.05)
            total = consec_error_pmf(spec, 0) + truncated_series_sum(
                lambda i: consec_error_pmf(spec, i))
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_matches_simulation_histogram(self, warm_kernel):
        # counter-value frequencies over 1e7 slots, three standard errors
        spec = spec_of(0.3, 0.2, 0.2, 0.3, 1.0, 1.0)
        cfg = SimConfig(source=spec.source, channel=spec.channel, policy=spec.policy,
                        horizon=10_000_000, seed=123)
        rep = simulate(cfg)
        for i in (1, 2, 3):
            expected = consec_error_pmf(spec, i)
            observed = rep.consec_counter_hist.get(i, 0) / rep.slots
            se = np.sqrt(expected * (1 - expected) / rep.slots)
            assert abs(observed - expected) <= 3 * se

    def test_negative_length_rejected(self):
        with pytest.raises(ParameterError):
            consec_error_pmf(spec_of(0.3, 0.2, 0.5, 0.5, 0.5, 0.5), -1)


class TestConsecTransition:
    def test_zero_at_perfect_tracking(self):
        assert consec_transition_prob(spec_of(0.4, 0.2, 1, 1, 1, 1), 0) == 0.0

    def test_symmetric_parameters_constant(self):
        # fully symmetric model: growth probability is flat past the first step
        spec = spec_of(0.3, 0.3, 0.4, 0.4, 0.7, 0.7)
        expect = (1 - 0.3) * (1 - 0.7 * 0.4)
        for i in (1, 2, 5, 9):
            assert consec_transition_prob(spec, i) == pytest.approx(expect, rel=1e-12)

    def test_matches_pmf_ratio(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            spec = rand_spec(rng, pa_lo=0.05)
            for i in (0, 1, 2, 7):
                num, den = consec_error_pmf(spec, i + 1), consec_error_pmf(spec, i)
                if den > 1e-280:
                    assert consec_transition_prob(spec, i) == pytest.approx(
                        num / den, rel=1e-12)

    def test_is_probability_over_range(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            spec = rand_spec(rng, pa_lo=0.05)
            for i in range(51):
                v = consec_transition_prob(spec, i)
                assert 0.0 <= v <= 1.0

    def test_undefined_conditional(self):
        spec = spec_of(0.4, 0.2, 1, 1, 1, 1)  # pmf(1) = 0 exactly
        with pytest.raises(DegenerateModelError):
            consec_transition_prob(spec, 1)


class TestAvgConsecError:
    def test_perfect_tracking_zero(self):
        assert avg_consecutive_error(spec_of(0.4, 0.2, 1, 1, 1, 1)) == 0.0

    def test_reference_value(self):
        # narrated minimum for p=0.3 q=0.2 ps=(0.2,0.3) at full sampling
        assert avg_consecutive_error(spec_of(0.3, 0.2, 0.2, 0.3, 1, 1)) == pytest.approx(
            0.65, abs=0.02)

    def test_matches_series(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            spec = rand_spec(rng, pa_lo=0.05)
            series = truncated_series_mean(lambda i: consec_error_pmf(spec, i))
            assert avg_consecutive_error(spec) == pytest.approx(series, abs=1e-10)


class TestViolationProbability:
    def test_n0_equals_error_rate(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            spec = rand_spec(rng)
            assert violation_probability(spec, 0) == pytest.approx(
                reconstruction_error_rate(spec.stationary), abs=1e-12)

    def test_decays_to_nothing(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            src = SourceParams(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95))
            ch = ChannelParams(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0))
            pol = RsPolicy(rng.uniform(0.55, 1.0), rng.uniform(0.55, 1.0))
            spec = ConsecErrorSpec.from_params(src, ch, pol)  # both rates > 0.1
            assert violation_probability(spec, 200) <= 1e-12

    def test_matches_truncated_tail(self):
        spec = spec_of(0.3, 0.2, 0.7, 0.8, 0.2, 1.0)
        tail = truncated_series_sum(lambda i: consec_error_pmf(spec, i), start=4)
        assert violation_probability(spec, 3) == pytest.approx(tail, abs=1e-10)

    def test_nonincreasing_in_n(self):
        rng = np.random.default_rng(15)
        for _ in range(50):
            spec = rand_spec(rng, pa_lo=0.05)
            vals = [violation_probability(spec, n) for n in range(25)]
            assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))

    def test_exact_zero_at_perfect_refresh(self):
        spec = spec_of(0.4, 0.2, 1, 1, 1, 1)
        assert violation_probability(spec, 0) == 0.0


class TestImportanceMetrics:
    def test_pmf_tail_equals_pi10(self):
        rng = np.random.default_rng(16)
        for _ in range(50):
            spec = rand_spec(rng, pa_lo=0.05)
            tail = truncated_series_sum(lambda i: importance_pmf(spec, i))
            assert tail == pytest.approx(spec.stationary.pi10, abs=1e-10)

    def test_pmf_zero_when_state1_always_refreshed(self):
        spec = spec_of(0.3, 0.2, 0.5, 1.0, 0.5, 1.0)
        for i in (1, 2, 5):
            assert importance_pmf(spec, i) == 0.0

    def test_transition_zero_at_perfect_refresh(self):
        assert importance_transition(spec_of(0.3, 0.2, 0.5, 1.0, 0.5, 1.0), 0) == 0.0

    def test_transition_constant_past_first_step(self):
        spec = spec_of(0.35, 0.25, 0.6, 0.55, 0.4, 0.7)
        assert importance_transition(spec, 3) == importance_transition(spec, 7)

    def test_transition_is_pmf_ratio(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            spec = rand_spec(rng, pa_lo=0.05)
            for i in (0, 1, 4):
                num, den = importance_pmf(spec, i + 1), importance_pmf(spec, i)
                if den > 1e-280:
                    assert importance_transition(spec, i) == pytest.approx(
                        num / den, rel=1e-11, abs=1e-15)

    def test_reset_complement(self):
        spec = spec_of(0.35, 0.25, 0.6, 0.55, 0.4, 0.7)
        for i in (0, 1, 5):
            assert importance_reset_prob(spec, i) == pytest.approx(
                1.0 - importance_transition(spec, i), abs=1e-15)

    def test_mean_reference_cells(self):
        # published grid at p=0.5 q=0.9 ps=(0.4,0.7)
        assert avg_importance_consec(spec_of(0.5, 0.9, 0.4, 0.7, 0.1, 0.1)) == pytest.approx(
            0.189, abs=1e-3)
        assert avg_importance_consec(spec_of(0.5, 0.9, 0.4, 0.7, 0.1, 1.0)) == pytest.approx(
            0.010, abs=1e-3)
        assert avg_importance_consec(spec_of(0.5, 0.9, 0.4, 0.7, 1.0, 1.0)) == pytest.approx(
            0.066, abs=1e-3)
        assert reconstruction_error_rate(
            spec_of(0.5, 0.9, 0.4, 0.7, 1.0, 1.0).stationary) == pytest.approx(0.291, abs=1e-3)

    def test_mean_zero_when_state1_always_refreshed(self):
        assert avg_importance_consec(spec_of(0.3, 0.2, 0.5, 1.0, 0.5, 1.0)) == 0.0

    def test_mean_matches_series(self):
        rng = np.random.default_rng(18)
        for _ in range(50):
            spec = rand_spec(rng, pa_lo=0.05)
            series = truncated_series_mean(lambda i: importance_pmf(spec, i))
            assert avg_importance_consec(spec) == pytest.approx(series, abs=1e-10)

    def test_domain_restriction(self):
        with pytest.raises(ParameterError):
            avg_importance_consec(spec_of(0.3, 0.2, 0.5, 0.5, 0.0, 0.5))
        with pytest.raises(ParameterError):
            avg_importance_consec(spec_of(0.3, 0.2, 0.5, 0.5, 0.5, 0.0))

    def test_mirrored_counts_opposite_error(self):
        rng = np.random.default_rng(19)
        for _ in range(30):
            spec = rand_spec(rng, pa_lo=0.05)
            # series oracle on the (0,1)-mismatch runs of the original model
            p, q = spec.source.p, spec.source.q
            e0 = spec.policy.pa0 * spec.channel.ps0
            pi11 = spec.stationary.pi11
            series = truncated_series_mean(
                lambda i: q * (1 - p) ** (i - 1) * (1 - e0) ** i * pi11)
            assert avg_importance_consec_mirrored(spec) == pytest.approx(series, abs=1e-10)


class TestMeanMonotonicity:
    def test_importance_mean_monotone_in_each_rate(self):
        # decreasing in the state-1 refresh rate, increasing in the state-0 rate
        rng = np.random.default_rng(20)
        grid = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0]
        for _ in range(100):
            src = SourceParams(rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98))
            ch = ChannelParams(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0))
            pa0 = rng.uniform(0.05, 1.0)
            vals = [avg_importance_consec(ConsecErrorSpec.from_params(src, ch, RsPolicy(pa0, v)))
                    for v in grid]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
            pa1 = rng.uniform(0.05, 1.0)
            vals = [avg_importance_consec(ConsecErrorSpec.from_params(src, ch, RsPolicy(v, pa1)))
                    for v in grid]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_consecutive_mean_not_monotone_in_state0_rate(self):
        # fast source with weak channel: sampling state 0 more makes runs longer
        lo = avg_consecutive_error(spec_of(0.8, 0.1, 0.2, 0.3, 0.1, 1.0))
        hi = avg_consecutive_error(spec_of(0.8, 0.1, 0.2, 0.3, 1.0, 1.0))
        assert lo < hi


class TestPolicyDominance:
    def test_region_implies_cost_order(self):
        rng = np.random.default_rng(21)
        hits = 0
        for _ in range(1000):
            src, ch, pol = rand_model(rng)
            cw = CostWeights(rng.uniform(0.1, 3), rng.uniform(0.1, 3))
            if rs_beats_semantics(src, ch, cw, pol.pa0, pol.pa1):
                hits += 1
                rs_cost = actuation_error_cost(stationary_rs(src, ch, pol), cw)
                sem_cost = actuation_error_cost(stationary_semantics_aware(src, ch), cw)
                assert rs_cost <= sem_cost + 1e-12
        assert hits > 10  # the region is non-trivial in this sampling range

    def test_symmetric_threshold_value(self):
        # with equal costs, p = q, and a shared success probability the state-1
        # threshold collapses: numerator c*s against denominator 2*c*s
        src = SourceParams(0.3, 0.3)
        ch = ChannelParams(0.6, 0.6)
        t1, _ = rs_vs_semantics_thresholds(src, ch, CostWeights(2.0, 2.0))
        assert t1 == pytest.approx(0.5, abs=1e-12)

    def test_full_sampling_ties_semantics(self):
        # at pa = (1, 1) the two policies coincide, so the region must admit it
        src = SourceParams(0.35, 0.15)
        ch = ChannelParams(0.6, 0.45)
        cw = CostWeights(1.0, 2.0)
        assert rs_beats_semantics(src, ch, cw, 1.0, 1.0)

    def test_threshold_pole_reported(self):
        src = SourceParams(0.3, 0.2)
        ch = ChannelParams(0.5, 0.5)
        t1, t2 = rs_vs_semantics_thresholds(src, ch, CostWeights(1, 2))
        with pytest.raises(DegenerateModelError):
            t2(t1)  # denominator vanishes exactly at the threshold


class TestMonotoneRegions:
    def test_p_region_finite_difference(self):
        rng = np.random.default_rng(22)
        eps = 1e-4
        hits = 0
        for _ in range(2000):
            src, ch, pol = rand_model(rng, pa_lo=0.01)
            rep = monotone_error_regions(src, ch, pol)
            if rep.decreasing_in_p and src.p + eps < 1.0:
                hits += 1
                src2 = SourceParams(src.p + eps, src.q)
                assert rs_reconstruction_error(src2, ch, pol) < rs_reconstruction_error(src, ch, pol)
                cw = CostWeights(1.0, 2.0)
                assert rs_actuation_cost(src2, ch, pol, cw) < rs_actuation_cost(src, ch, pol, cw)
        assert hits > 50

    def test_q_region_finite_difference(self):
        rng = np.random.default_rng(24)
        eps = 1e-4
        hits = 0
        for _ in range(2000):
            src, ch, pol = rand_model(rng, pa_lo=0.01)
            rep = monotone_error_regions(src, ch, pol)
            if rep.decreasing_in_q and src.q + eps < 1.0:
                hits += 1
                src2 = SourceParams(src.p, src.q + eps)
                assert rs_reconstruction_error(src2, ch, pol) < rs_reconstruction_error(src, ch, pol)
        assert hits > 50

    def test_bounds_reported_or_infeasible(self):
        rng = np.random.default_rng(25)
        for _ in range(200):
            src, ch, pol = rand_model(rng, pa_lo=0.01)
            rep = monotone_error_regions(src, ch, pol)
            for bound, feasible in ((rep.pa1_lower_bound, rep.decreasing_in_p_feasible),
                                    (rep.pa0_lower_bound, rep.decreasing_in_q_feasible)):
                assert bound >= 0.0
                if feasible:
                    assert bound <= 1.0


class TestMetricReport:
    def test_fields_and_invariants(self):
        src, ch, pol = SourceParams(0.3, 0.2), ChannelParams(0.6, 0.7), RsPolicy(0.5, 0.8)
        cw = CostWeights(1.0, 2.0)
        rep = metric_report(src, ch, pol, cw, (0, 1, 2, 5))
        assert 0.0 <= rep.pe <= 1.0
        assert rep.cost <= max(cw.c01, cw.c10)
        assert rep.violation[0] == pytest.approx(rep.pe, abs=1e-12)
        vals = [rep.violation[n] for n in (0, 1, 2, 5)]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
        assert rep.cbar_s is not None and rep.cbar_s >= 0.0

    def test_cbar_s_none_outside_domain(self):
        rep = metric_report(SourceParams(0.3, 0.2), ChannelParams(0.6, 0.7),
                            RsPolicy(0.0, 0.8), CostWeights(1, 2))
        assert rep.cbar_s is None
