"""Tests des débits analytiques."""
import math

import pytest

from app.exceptions import InvalidParameterError
from app.models import RepeaterConfig, Scheme
from app.services import protocol, rates


class TestProbabilities:

    def test_defaults(self, repeater):
        probs = rates.success_probabilities(repeater)
        assert probs.p_t == pytest.approx(0.010849, rel=1e-3)
        assert probs.p_m == pytest.approx(0.81)
        assert probs.p_s == pytest.approx(0.6561)
        assert probs.p_0 == pytest.approx(0.0042980, rel=1e-3)

    def test_p_t_matches_heralding_model(self, repeater):
        eta_t = rates.transmission(repeater)
        herald = protocol.herald_probability(eta_t, repeater.p_emit, repeater.eta_d)
        assert rates.success_probabilities(repeater).p_t == pytest.approx(herald, rel=1e-12)

    def test_slot_time(self, repeater):
        assert repeater.l0_km == pytest.approx(75.0)
        assert repeater.slot_time == pytest.approx(3.75e-4)


class TestExpectedTime:

    def test_default_repeater(self, repeater):
        assert rates.expected_time(repeater) == pytest.approx(0.6951, rel=1e-3)
        assert rates.scheme_rate(repeater, Scheme.REPEATER) == pytest.approx(1.4387, rel=1e-3)

    def test_single_link(self):
        cfg = RepeaterConfig(total_length_l=100.0, nesting_n=0)
        probs = rates.success_probabilities(cfg)
        assert rates.expected_time(cfg) == pytest.approx(cfg.slot_time / (probs.p_t * probs.p_m ** 2))

    def test_one_level_is_exact(self):
        cfg = RepeaterConfig(total_length_l=200.0, nesting_n=1)
        probs = rates.success_probabilities(cfg)
        assert rates.expected_time(cfg) == pytest.approx(cfg.slot_time / (probs.p_0 * probs.p_s))

    def test_increases_with_distance(self, repeater):
        times = [
            rates.expected_time(repeater.model_copy(update={"total_length_l": distance}))
            for distance in range(100, 1100, 100)
        ]
        assert all(a < b for a, b in zip(times, times[1:]))

    def test_no_emission_never_succeeds(self):
        cfg = RepeaterConfig(p_emit=0.0)
        assert math.isinf(rates.expected_time(cfg))
        assert rates.scheme_rate(cfg, Scheme.REPEATER) == 0.0
        assert math.isinf(rates.rate_row(cfg, Scheme.REPEATER).expected_time_s)


class TestSchemes:

    def test_multiplexed(self):
        cfg = RepeaterConfig(channels_m=100)
        rate = rates.scheme_rate(cfg, Scheme.REPEATER_MULTIPLEXED)
        assert rate == pytest.approx(140.1, rel=2e-3)
        assert rate / rates.scheme_rate(cfg, Scheme.REPEATER) == pytest.approx(97.4, rel=2e-3)

    def test_single_channel_multiplexing_is_close_to_repeater(self, repeater):
        multiplexed = rates.scheme_rate(repeater, Scheme.REPEATER_MULTIPLEXED)
        assert multiplexed == pytest.approx(rates.scheme_rate(repeater, Scheme.REPEATER), rel=1e-3)

    def test_multiplexed_grows_with_channels_up_to_slot_rate(self, repeater):
        values = [
            rates.scheme_rate(repeater.model_copy(update={"channels_m": m}), Scheme.REPEATER_MULTIPLEXED)
            for m in (1, 10, 100, 1_000, 10_000, 100_000)
        ]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[-1] <= 1 / repeater.slot_time

    @pytest.mark.parametrize("m", [2, 10, 50, 150])
    def test_multiplexed_is_linear_for_rare_success(self, repeater, m):
        p_channel = rates.channel_success(rates.success_probabilities(repeater), repeater.nesting_n)
        assert m * p_channel < 0.1
        single = rates.scheme_rate(repeater, Scheme.REPEATER)
        multiplexed = rates.scheme_rate(repeater.model_copy(update={"channels_m": m}), Scheme.REPEATER_MULTIPLEXED)
        assert multiplexed == pytest.approx(m * single, rel=0.05)

    def test_direct(self, repeater):
        assert rates.scheme_rate(repeater, Scheme.DIRECT) == pytest.approx(0.01288, rel=2e-3)

    def test_direct_without_detector(self, repeater):
        cfg = repeater.model_copy(update={"direct_includes_detector": False})
        assert rates.scheme_rate(cfg, Scheme.DIRECT) == pytest.approx(0.01288 / 0.9, rel=2e-3)

    def test_plob_bound_at_long_distance(self, repeater):
        eta = math.exp(-repeater.total_length_l / repeater.l_att)
        assert rates.scheme_rate(repeater, Scheme.PLOB) == pytest.approx(repeater.plob_rate * eta / math.log(2), rel=1e-6)

    def test_plob_repetition_rate_override(self):
        cfg = RepeaterConfig(plob_repetition_rate=1e9)
        assert cfg.plob_rate == 1e9

    def test_repeater_beats_direct_at_600_km(self, repeater):
        assert rates.scheme_rate(repeater, Scheme.REPEATER) > rates.scheme_rate(repeater, Scheme.PLOB)

    def test_crossover(self, repeater):
        distance = rates.crossover_distance(repeater)
        assert 300.0 < distance < 600.0
        at = repeater.model_copy(update={"total_length_l": distance})
        assert rates.scheme_rate(at, Scheme.REPEATER) == pytest.approx(rates.scheme_rate(at, Scheme.DIRECT), rel=1e-6)

    def test_crossover_requires_bracket(self, repeater):
        with pytest.raises(InvalidParameterError):
            rates.crossover_distance(repeater, lo=700.0, hi=2000.0)


class TestSweep:

    def test_rows_sorted_and_deduplicated(self, repeater):
        rows = rates.sweep_rates(repeater, [300.0, 100.0, 300.0], [Scheme.PLOB, Scheme.DIRECT])
        assert [(r.distance_km, r.scheme) for r in rows] == [
            (100.0, Scheme.DIRECT),
            (100.0, Scheme.PLOB),
            (300.0, Scheme.DIRECT),
            (300.0, Scheme.PLOB),
        ]

    def test_row_probabilities_follow_distance(self, repeater):
        near, far = rates.sweep_rates(repeater, [100.0, 1000.0], [Scheme.REPEATER])
        assert near.p_t > far.p_t
        assert near.rate_hz > far.rate_hz

    def test_rate_and_time_are_inverse(self, repeater):
        for row in rates.sweep_rates(repeater, [200.0, 800.0], list(Scheme)):
            assert row.rate_hz * row.expected_time_s == pytest.approx(1.0)
