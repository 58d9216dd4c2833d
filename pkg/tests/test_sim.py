import random
from collections import Counter, defaultdict

import pytest

from acdroute.admission import AdmissionController
from acdroute.sim import (
    DurationSpec,
    ScenarioConfig,
    VendorModel,
    VendorSpec,
    billing_route,
    run_scenario,
    vendor_leg,
)

FAS = VendorModel("false_answer", 0.97, DurationSpec("exponential", mean_s=36.0),
                  failure_code=408)
PURE_FAS = VendorModel("false_answer", 1.0, DurationSpec("exponential", mean_s=36.0),
                       failure_code=408)
HONEST = VendorModel("honest", 0.9, DurationSpec("exponential", mean_s=520.2),
                     failure_code=480)


def fas_preferred_config(seed=7, rate=30.0, duration=400.0, admission=True,
                         fas_model=FAS):
    """The fraud case: the false-answer vendor holds the higher preference."""
    return ScenarioConfig(
        seed=seed,
        arrival_rate_per_min=rate,
        duration_min=duration,
        vendors=(
            VendorSpec(71, 9, fas_model),
            VendorSpec(72, 8, HONEST),
        ),
        admission_enabled=admission,
    )


def honest_preferred_config(seed=11, rate=30.0, duration=400.0):
    """The healthy case: the good route is preferred, the weak route still
    keeps its minimum measurement share."""
    return ScenarioConfig(
        seed=seed,
        arrival_rate_per_min=rate,
        duration_min=duration,
        vendors=(
            VendorSpec(55, 9, HONEST),
            VendorSpec(62, 8, FAS),
        ),
    )


class TestBillingRoute:
    PREFS = {55: 9, 62: 8}

    def test_first_attempt_goes_to_higher_preference(self):
        assert billing_route(self.PREFS, []) == 55

    def test_failover_after_rejection(self):
        assert billing_route(self.PREFS, [(55, 503)]) == 62

    def test_failover_after_vendor_failure(self):
        assert billing_route(self.PREFS, [(55, 486)]) == 62

    def test_success_ends_routing_even_for_one_second_calls(self):
        assert billing_route(self.PREFS, [(55, 200)]) is None

    def test_abandoned_after_both_fail(self):
        assert billing_route(self.PREFS, [(55, 503), (62, 480)]) is None


class TestVendorLeg:
    def test_false_answer_burst_durations(self):
        model = VendorModel("false_answer", 1.0, DurationSpec("uniform", low_s=1, high_s=7))
        rng = random.Random(3)
        for _ in range(500):
            code, duration = vendor_leg(model, rng)
            assert code == 200
            assert 1 <= duration <= 7

    def test_honest_never_answering(self):
        model = VendorModel("honest", 0.0, DurationSpec("fixed", value_s=60),
                            failure_code=486)
        rng = random.Random(4)
        for _ in range(200):
            assert vendor_leg(model, rng) == (486, 0)

    def test_empirical_answer_ratio(self):
        model = VendorModel("honest", 0.7, DurationSpec("fixed", value_s=60))
        rng = random.Random(5)
        n = 100_000
        answered = sum(1 for _ in range(n) if vendor_leg(model, rng)[0] == 200)
        assert answered / n == pytest.approx(0.7, abs=0.005)

    def test_answered_legs_last_at_least_one_second(self):
        model = VendorModel("false_answer", 1.0,
                            DurationSpec("exponential", mean_s=2.0))
        rng = random.Random(6)
        for _ in range(2000):
            code, duration = vendor_leg(model, rng)
            assert duration >= 1


class TestModelValidation:
    def test_honest_must_not_answer_everything(self):
        with pytest.raises(ValueError):
            VendorModel("honest", 1.0, DurationSpec("fixed", value_s=60))

    def test_false_answer_must_answer_almost_everything(self):
        with pytest.raises(ValueError):
            VendorModel("false_answer", 0.5, DurationSpec("fixed", value_s=5))

    def test_failure_code_must_trigger_failover(self):
        with pytest.raises(ValueError):
            VendorModel("honest", 0.9, DurationSpec("fixed", value_s=60),
                        failure_code=200)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            DurationSpec("lognormal", mean_s=10)


class TestScenarioConfig:
    def test_json_round_trip(self):
        config = fas_preferred_config()
        rebuilt = ScenarioConfig.from_dict(config.to_dict())
        assert rebuilt == config

    def test_minute_denominated_duration_params(self):
        spec = DurationSpec.from_dict({"family": "exponential", "mean_min": 8.67})
        assert spec.mean_s == pytest.approx(520.2)

    def test_unknown_fields_rejected(self):
        data = fas_preferred_config().to_dict()
        data["typo_field"] = 1
        with pytest.raises(ValueError):
            ScenarioConfig.from_dict(data)

    def test_equal_preferences_rejected(self):
        with pytest.raises(ValueError):
            ScenarioConfig(
                seed=1, arrival_rate_per_min=10, duration_min=60,
                vendors=(VendorSpec(71, 9, FAS), VendorSpec(72, 9, HONEST)),
            )


class TestClosedLoop:
    def test_fraud_route_gets_squeezed_to_its_floor_share(self):
        result = run_scenario(fas_preferred_config())
        assert len(result.interval_history) >= 6
        # steady state: every interval from the third close onward pins the
        # false-answer clone near the honest route's load share
        for interval in result.interval_history[2:]:
            assert interval.result.reject_pct_exact[0] == pytest.approx(87.23, abs=3.0)
            assert interval.result.reject_pct_exact[1] == 0.0
        share = result.answered_minutes_share(from_interval=2)
        assert share[72] >= 0.8
        routed = result.routed_share(from_interval=2)
        assert routed[72] == pytest.approx(0.8723, abs=0.03)

    def test_healthy_route_keeps_its_load_with_small_rejection(self):
        result = run_scenario(honest_preferred_config())
        assert len(result.interval_history) >= 6
        for interval in result.interval_history[2:]:
            # mirror case: the preferred good route sheds only the weak
            # route's floor-driven share
            assert interval.result.reject_pct_exact[0] == pytest.approx(12.77, abs=3.0)
            assert interval.result.reject_pct_exact[1] == 0.0
        share = result.answered_minutes_share(from_interval=2)
        assert share[55] >= 0.8

    def test_negative_control_routes_everything_to_fraud_route(self):
        result = run_scenario(
            fas_preferred_config(duration=60.0, admission=False, fas_model=PURE_FAS)
        )
        by_vendor = Counter(r.vendor for r in result.cdrs)
        assert by_vendor[72] == 0
        assert by_vendor[71] == result.total_calls
        assert all(not r.rejected_by_router for r in result.cdrs)
        # and the loop could never have engaged: no evidence for the honest
        # route, so the computed targets stay at zero
        for interval in result.interval_history:
            assert interval.result.reject_pct == (0.0, 0.0)

    def test_two_identical_honest_vendors_split_evenly(self):
        config = ScenarioConfig(
            seed=3, arrival_rate_per_min=30.0, duration_min=200.0,
            vendors=(
                VendorSpec(1, 9, HONEST),
                VendorSpec(2, 8, HONEST),
            ),
        )
        result = run_scenario(config)
        assert result.interval_history
        for interval in result.interval_history[2:]:
            # equal quality: reject target on the preferred clone near 50
            assert interval.result.reject_pct_exact[0] == pytest.approx(50.0, abs=8.0)
            assert interval.result.reject_pct_exact[1] == 0.0


class TestTraceInvariants:
    def test_one_answered_cdr_per_call_and_rejected_attempts_retry(self):
        result = run_scenario(fas_preferred_config(duration=120.0))
        by_call = defaultdict(list)
        for record in result.cdrs:
            by_call[record.call_id].append(record)
        for call_id, records in by_call.items():
            answered = [r for r in records if r.duration_s > 0]
            assert len(answered) <= 1, f"{call_id} answered twice"
            rejected = [r for r in records if r.rejected_by_router]
            assert len(rejected) <= 1, f"{call_id} rejected twice"
            if rejected:
                # a rejected attempt always has a follow-up at the other vendor
                others = [r for r in records if not r.rejected_by_router]
                assert others, f"{call_id} rejected with no retry"
                assert all(r.vendor != rejected[0].vendor for r in others)

    def test_decision_log_never_rejects_a_call_twice(self):
        result = run_scenario(fas_preferred_config(duration=120.0))
        rejected_ids = [d.call_id for d in result.decision_log if not d.accepted]
        assert len(rejected_ids) == len(set(rejected_ids))

    def test_counters_match_decision_log(self):
        result = run_scenario(fas_preferred_config(duration=120.0))
        # recount decisions per interval from the log using the close times
        boundaries = [
            (iv.opened_at, iv.closed_at, iv) for iv in result.interval_history
        ]
        start = result.config.start_time
        for opened, closed, interval in boundaries:
            lo = (opened - start).total_seconds()
            hi = (closed - start).total_seconds()
            for vendor in (71, 72):
                received = sum(
                    1 for d in result.decision_log
                    if d.vendor == vendor and d.accepted and lo <= d.time_s < hi
                )
                rejected = sum(
                    1 for d in result.decision_log
                    if d.vendor == vendor and not d.accepted and lo <= d.time_s < hi
                )
                assert interval.received[vendor] == received
                assert interval.rejected[vendor] == rejected

    def test_replaying_decision_log_reproduces_outcomes(self):
        result = run_scenario(fas_preferred_config(duration=120.0))
        fresh = AdmissionController(vendors=(71, 72), seed=result.config.seed + 1)
        refreshes = [
            ((iv.closed_at - result.config.start_time).total_seconds(), iv.result)
            for iv in result.interval_history
        ]
        next_refresh = 0
        for record in result.decision_log:
            while (next_refresh < len(refreshes)
                   and refreshes[next_refresh][0] <= record.time_s):
                fresh.refresh_targets(refreshes[next_refresh][1])
                next_refresh += 1
            decision = fresh.decide(record.call_id, record.vendor, now=record.time_s)
            assert decision.accepted == record.accepted
            assert decision.code == record.code

    def test_same_seed_identical_runs(self):
        a = run_scenario(fas_preferred_config(duration=90.0))
        b = run_scenario(fas_preferred_config(duration=90.0))
        assert a.cdrs == b.cdrs
        assert a.decision_log == b.decision_log
        assert [iv.to_dict() for iv in a.interval_history] == [
            iv.to_dict() for iv in b.interval_history
        ]

    def test_different_seed_differs(self):
        a = run_scenario(fas_preferred_config(seed=7, duration=90.0))
        b = run_scenario(fas_preferred_config(seed=8, duration=90.0))
        assert a.cdrs != b.cdrs
