"""Tests de la simulation Monte Carlo du répéteur."""
import math

import numpy as np
import pytest

from app.exceptions import InvalidParameterError
from app.models import GateKind, RepeaterConfig, RngPolicy, Scheme, SuccessProbabilities
from app.services import gates, montecarlo, protocol, rates

FORCED = SuccessProbabilities(p_t=1.0, p_m=1.0, p_s=1.0, p_0=0.5)


class TestTrial:

    def test_reproducible(self, repeater):
        policy = RngPolicy(seed=42, trial_index=3)
        assert montecarlo.run_trial(repeater, policy) == montecarlo.run_trial(repeater, policy)

    def test_trial_index_changes_trajectory(self, repeater):
        results = {montecarlo.run_trial(repeater, RngPolicy(seed=42, trial_index=i)).slots_used for i in range(20)}
        assert len(results) > 1

    @pytest.mark.parametrize("nesting_n, slots", [(0, 1), (1, 2), (2, 2), (3, 2)])
    def test_forced_probabilities(self, nesting_n, slots):
        cfg = RepeaterConfig(nesting_n=nesting_n)
        result = montecarlo.run_trial(cfg, RngPolicy(seed=1, trial_index=0), probabilities=FORCED)
        assert result.slots_used == slots
        assert result.wall_time == pytest.approx(slots * cfg.slot_time)

    @pytest.mark.parametrize("nesting_n", [0, 1, 2, 3])
    def test_end_frame_matches_propagation(self, nesting_n):
        cfg = RepeaterConfig(nesting_n=nesting_n)
        for index in range(20):
            result = montecarlo.run_trial(cfg, RngPolicy(seed=5, trial_index=index))
            assert result.end_frame.endpoints == (0, 2 ** nesting_n)
            assert len(result.link_frames) == 2 ** nesting_n
            assert len(result.swaps) == 2 ** nesting_n - 1
            assert protocol.propagate_frame(result.link_frames, result.swaps) == result.end_frame

    def test_end_frame_matches_oracle(self):
        cfg = RepeaterConfig(nesting_n=2)
        for index in range(20):
            result = montecarlo.run_trial(cfg, RngPolicy(seed=9, trial_index=index))
            outcomes = {record.node: (record.m1.outcome, record.m2.outcome) for record in result.swaps}
            expected = protocol.statevector_oracle(
                [frame.label for frame in result.link_frames],
                [outcomes[node] for node in (1, 2, 3)],
                order=[record.node - 1 for record in result.swaps],
            )
            assert result.end_frame.label == expected

    def test_fidelity_estimate(self, repeater):
        result = montecarlo.run_trial(repeater, RngPolicy(seed=1, trial_index=0))
        params = gates.default_gate_params()
        f = {kind: gates.closed_form_fidelity(kind, params).fidelity for kind in GateKind}
        expected = f[GateKind.STATE_TRANSFER] ** 8 * (f[GateKind.CNOT] * f[GateKind.REVERSE_CNOT]) ** 7
        assert result.fidelity_estimate == pytest.approx(expected, rel=1e-12)

    def test_memory_dephasing_lowers_fidelity(self, repeater):
        policy = RngPolicy(seed=1, trial_index=0)
        noisy = repeater.model_copy(update={"memory_dephasing_rate": 1.0})
        assert montecarlo.run_trial(noisy, policy).fidelity_estimate < montecarlo.run_trial(repeater, policy).fidelity_estimate

    def test_impossible_link_rejected(self):
        with pytest.raises(InvalidParameterError):
            montecarlo.run_trial(RepeaterConfig(p_emit=0.0), RngPolicy(seed=1, trial_index=0))


class TestEstimate:

    @pytest.mark.parametrize(
        "cfg, tolerance",
        [
            (RepeaterConfig(total_length_l=100.0, nesting_n=0), 0.05),
            (RepeaterConfig(total_length_l=200.0, nesting_n=1), 0.05),
            (RepeaterConfig(total_length_l=400.0, nesting_n=2), 0.10),
        ],
    )
    def test_agrees_with_analytic_time(self, cfg, tolerance):
        estimate = montecarlo.estimate_rate(cfg, trials=10_000, seed=2019)
        assert estimate.mean_time == pytest.approx(rates.expected_time(cfg), rel=tolerance)

    def test_three_levels_match_subtree_maximum(self, repeater):
        # un sous-arbre de niveau 2 sur 300 km a les mêmes créneaux que chaque moitié du répéteur
        half = repeater.model_copy(update={"total_length_l": repeater.total_length_l / 2, "nesting_n": 2})
        subtrees = np.sort([
            montecarlo.run_trial(half, RngPolicy(seed=77, trial_index=i)).slots_used for i in range(10_000)
        ])
        # E[max] de deux tirages indépendants de la loi empirique
        weights = 2 * np.arange(1, len(subtrees) + 1) - 1
        expected_max = float(np.sum(weights * subtrees)) / len(subtrees) ** 2
        oracle = expected_max / rates.success_probabilities(repeater).p_s * repeater.slot_time

        estimate = montecarlo.estimate_rate(repeater, trials=10_000, seed=2019)
        assert estimate.mean_time == pytest.approx(oracle, rel=0.05)
        # la règle des 3/2 suppose des enfants exponentiels et surestime le temps
        assert estimate.mean_time < rates.expected_time(repeater)

    def test_multiplexed(self):
        cfg = RepeaterConfig(channels_m=100)
        estimate = montecarlo.estimate_rate(cfg, trials=10_000, seed=2019)
        assert estimate.rate == pytest.approx(rates.scheme_rate(cfg, Scheme.REPEATER_MULTIPLEXED), rel=0.05)

    def test_summary_fields(self, repeater):
        estimate = montecarlo.estimate_rate(repeater, trials=200, seed=3)
        assert estimate.trials == 200
        assert estimate.rate == pytest.approx(1 / estimate.mean_time)
        assert estimate.mean_time == pytest.approx(estimate.mean_slots * repeater.slot_time)
        assert estimate.std_err > 0
        assert 0 < estimate.mean_fidelity < 1

    def test_std_err_shrinks_with_trials(self):
        cfg = RepeaterConfig(total_length_l=200.0, nesting_n=1)
        small = montecarlo.estimate_rate(cfg, trials=1_000, seed=5)
        large = montecarlo.estimate_rate(cfg, trials=10_000, seed=5)
        assert small.std_err / large.std_err == pytest.approx(math.sqrt(10), rel=0.2)

    @pytest.mark.parametrize("nesting_n", [0, 1, 3])
    def test_never_faster_than_one_slot(self, nesting_n):
        cfg = RepeaterConfig(nesting_n=nesting_n)
        estimate = montecarlo.estimate_rate(cfg, trials=200, seed=8, probabilities=FORCED)
        assert estimate.mean_time >= cfg.l0_km * 1e3 / cfg.fiber_speed_c

    def test_workers_do_not_change_result(self, repeater):
        single = montecarlo.estimate_rate(repeater, trials=200, seed=11, workers=1)
        pooled = montecarlo.estimate_rate(repeater, trials=200, seed=11, workers=2)
        assert pooled == single

    def test_progress_reaches_total(self, repeater):
        calls = []
        montecarlo.estimate_rate(repeater, trials=250, seed=1, progress=lambda done, total: calls.append((done, total)))
        assert calls[-1] == (250, 250)
        assert [done for done, _ in calls] == sorted(done for done, _ in calls)

    def test_too_few_trials(self, repeater):
        with pytest.raises(InvalidParameterError):
            montecarlo.estimate_rate(repeater, trials=montecarlo.MIN_TRIALS - 1)


class TestDistributions:

    @pytest.mark.parametrize("p", [0.05, 0.1, 0.5])
    def test_half_factor_for_geometric_children(self, p):
        report = montecarlo.half_factor_check(trials=100_000, seed=4, child_probability=p)
        assert report.ratio == pytest.approx(2 - 1 / (2 - p), abs=0.01)

    def test_half_factor_for_subtrees(self):
        report = montecarlo.half_factor_check(RepeaterConfig(nesting_n=2), trials=20_000, seed=4)
        assert 1.0 < report.ratio < 1.5
        assert report.deviation == pytest.approx(report.ratio - 1.5)

    def test_half_factor_needs_two_levels(self):
        with pytest.raises(InvalidParameterError):
            montecarlo.half_factor_check(RepeaterConfig(nesting_n=1), trials=1000)

    def test_elementary_link_is_geometric(self):
        cfg = RepeaterConfig(total_length_l=20.0, nesting_n=0)
        fit = montecarlo.geometric_fit(cfg, trials=10_000, seed=2019)
        probs = rates.success_probabilities(cfg)
        assert fit.probability == pytest.approx(probs.p_t * probs.p_m ** 2)
        assert fit.p_value > 1e-3
        assert fit.bins > 10

    def test_geometric_fit_requires_single_link(self, repeater):
        with pytest.raises(InvalidParameterError):
            montecarlo.geometric_fit(repeater, trials=1000)

    def test_rng_streams_are_independent(self):
        a = montecarlo.make_rng(RngPolicy(seed=1, trial_index=0)).random(5)
        b = montecarlo.make_rng(RngPolicy(seed=1, trial_index=1)).random(5)
        assert not math.isclose(a[0], b[0])
