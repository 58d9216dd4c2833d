"""Deterministic end-to-end traffic simulator.

Drives the whole loop at seconds resolution: a Poisson caller population hits
a static-preference billing router, each attempt passes the clone interface's
admission check, the vendor leg answers or fails, CDRs land in the store, the
aggregator ticks every period, and freshly closed intervals feed new targets
back into admission. Everything derives from one seed, so two runs of the
same scenario are identical event for event.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .admission import AdmissionController
from .aggregate import (
    MIN_INTERVAL_AGE_S,
    MIN_INTERVAL_CALLS,
    TICK_PERIOD_S,
    ClosedInterval,
    IntervalAggregator,
)
from .domain import (
    CallRecord,
    DisconnectCause,
    ResponseClass,
    classify_response,
    format_ts,
    parse_ts,
    triggers_failover,
    validate_preference,
    validate_vendor_id,
)
from .store import AcdVendorsTable, CdrStore

DEFAULT_START = datetime(2020, 1, 1, 0, 0, 0)


@dataclass(frozen=True)
class DurationSpec:
    """Distribution of a call leg's duration, parameters in seconds."""

    family: str
    mean_s: float = 0.0
    low_s: float = 0.0
    high_s: float = 0.0
    value_s: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in ("exponential", "uniform", "fixed"):
            raise ValueError(f"unknown duration family {self.family!r}")
        if self.family == "exponential" and self.mean_s <= 0:
            raise ValueError("exponential durations need a positive mean_s")
        if self.family == "uniform" and not 0 <= self.low_s <= self.high_s:
            raise ValueError("uniform durations need 0 <= low_s <= high_s")
        if self.family == "fixed" and self.value_s < 0:
            raise ValueError("fixed durations must be non-negative")

    def draw(self, rng: random.Random) -> float:
        if self.family == "exponential":
            return rng.expovariate(1.0 / self.mean_s)
        if self.family == "uniform":
            return rng.uniform(self.low_s, self.high_s)
        return self.value_s

    def to_dict(self) -> dict:
        if self.family == "exponential":
            return {"family": self.family, "mean_s": self.mean_s}
        if self.family == "uniform":
            return {"family": self.family, "low_s": self.low_s, "high_s": self.high_s}
        return {"family": self.family, "value_s": self.value_s}

    @classmethod
    def from_dict(cls, data: Mapping) -> "DurationSpec":
        family = data.get("family", "exponential")
        params = dict(data)
        params.pop("family", None)
        # minute-denominated aliases, converted on the way in
        for minute_key, second_key in (
            ("mean_min", "mean_s"),
            ("low_min", "low_s"),
            ("high_min", "high_s"),
            ("value_min", "value_s"),
        ):
            if minute_key in params:
                params[second_key] = float(params.pop(minute_key)) * 60.0
        known = {"mean_s", "low_s", "high_s", "value_s"}
        unknown = set(params) - known
        if unknown:
            raise ValueError(f"unknown duration parameters: {sorted(unknown)}")
        return cls(family=family, **{k: float(v) for k, v in params.items()})


HONEST = "honest"
FALSE_ANSWER = "false_answer"


@dataclass(frozen=True)
class VendorModel:
    """Behavior of one simulated vendor.

    An honest vendor answers a fraction of calls (its ASR) and signals real
    failures with a failover-class code. A false-answer vendor signals success
    on essentially every call and plays a fake greeting, so the deceived
    caller hangs up within seconds; its duration spec models that hold time.
    Non-answers of a false-answer vendor surface as proxy-side timeouts, never
    as a failure signal of its own.
    """

    kind: str
    answer_prob: float
    duration: DurationSpec
    failure_code: int = 480

    def __post_init__(self) -> None:
        if self.kind not in (HONEST, FALSE_ANSWER):
            raise ValueError(f"unknown vendor kind {self.kind!r}")
        if not 0.0 <= self.answer_prob <= 1.0:
            raise ValueError("answer_prob must lie in [0, 1]")
        if self.kind == HONEST and self.answer_prob >= 1.0:
            raise ValueError("an honest vendor answers strictly less than everything")
        if self.kind == FALSE_ANSWER and self.answer_prob <= 0.9:
            raise ValueError("a false-answer vendor answers (almost) everything")
        if not triggers_failover(classify_response(self.failure_code)):
            raise ValueError(f"failure code {self.failure_code} would not trigger failover")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "answer_prob": self.answer_prob,
            "duration": self.duration.to_dict(),
            "failure_code": self.failure_code,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "VendorModel":
        kind = data.get("kind")
        duration_data = data.get("duration", data.get("hold"))
        if duration_data is None:
            raise ValueError("vendor model needs a duration (or hold) distribution")
        default_failure = 408 if kind == FALSE_ANSWER else 480
        return cls(
            kind=kind,
            answer_prob=float(data.get("answer_prob", 1.0 if kind == FALSE_ANSWER else 0.7)),
            duration=DurationSpec.from_dict(duration_data),
            failure_code=int(data.get("failure_code", default_failure)),
        )


def vendor_leg(model: VendorModel, rng: random.Random) -> Tuple[int, int]:
    """Play out one attempt that reached the vendor.

    Returns (response code, duration seconds). Answered legs last at least one
    second so a zero duration always means an unanswered call.
    """
    if rng.random() < model.answer_prob:
        duration = max(1, round(model.duration.draw(rng)))
        return 200, duration
    return model.failure_code, 0


@dataclass(frozen=True)
class VendorSpec:
    vendor: int
    pref: int
    model: VendorModel

    def to_dict(self) -> dict:
        return {"vendor": self.vendor, "pref": self.pref, "model": self.model.to_dict()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "VendorSpec":
        return cls(
            vendor=int(data["vendor"]),
            pref=int(data["pref"]),
            model=VendorModel.from_dict(data["model"]),
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a scenario run depends on; one seed fixes the whole run."""

    seed: int
    arrival_rate_per_min: float
    duration_min: float
    vendors: Tuple[VendorSpec, VendorSpec]
    load_min: float = 0.1
    tick_period_min: float = TICK_PERIOD_S / 60
    min_interval_min: float = MIN_INTERVAL_AGE_S / 60
    min_calls: int = MIN_INTERVAL_CALLS
    admission_enabled: bool = True
    start_time: datetime = DEFAULT_START
    dest_prefix: str = ""

    def __post_init__(self) -> None:
        if len(self.vendors) != 2:
            raise ValueError("a scenario routes between exactly two vendors")
        ids = [spec.vendor for spec in self.vendors]
        if len(set(ids)) != 2:
            raise ValueError("vendor ids must be distinct")
        for v in ids:
            validate_vendor_id(v)
        prefs = [spec.pref for spec in self.vendors]
        for p in prefs:
            validate_preference(p)
        if prefs[0] == prefs[1]:
            raise ValueError("the two routes must have distinct billing preferences")
        if self.arrival_rate_per_min <= 0:
            raise ValueError("arrival rate must be positive")
        if self.duration_min <= 0:
            raise ValueError("scenario duration must be positive")
        if not 0.0 <= self.load_min < 0.5:
            raise ValueError(f"load_min must lie in [0, 0.5), got {self.load_min}")
        if self.tick_period_min <= 0 or self.min_interval_min <= 0 or self.min_calls < 1:
            raise ValueError("interval parameters must be positive")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "start_time": format_ts(self.start_time),
            "arrival_rate_per_min": self.arrival_rate_per_min,
            "duration_min": self.duration_min,
            "load_min": self.load_min,
            "tick_period_min": self.tick_period_min,
            "min_interval_min": self.min_interval_min,
            "min_calls": self.min_calls,
            "admission_enabled": self.admission_enabled,
            "dest_prefix": self.dest_prefix,
            "vendors": [spec.to_dict() for spec in self.vendors],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ScenarioConfig":
        known = {
            "seed",
            "start_time",
            "arrival_rate_per_min",
            "duration_min",
            "load_min",
            "tick_period_min",
            "min_interval_min",
            "min_calls",
            "admission_enabled",
            "dest_prefix",
            "vendors",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        try:
            vendors = tuple(VendorSpec.from_dict(v) for v in data["vendors"])
            return cls(
                seed=int(data["seed"]),
                arrival_rate_per_min=float(data["arrival_rate_per_min"]),
                duration_min=float(data["duration_min"]),
                vendors=vendors,
                load_min=float(data.get("load_min", 0.1)),
                tick_period_min=float(data.get("tick_period_min", TICK_PERIOD_S / 60)),
                min_interval_min=float(data.get("min_interval_min", MIN_INTERVAL_AGE_S / 60)),
                min_calls=int(data.get("min_calls", MIN_INTERVAL_CALLS)),
                admission_enabled=bool(data.get("admission_enabled", True)),
                start_time=parse_ts(data["start_time"]) if "start_time" in data else DEFAULT_START,
                dest_prefix=str(data.get("dest_prefix", "")),
            )
        except KeyError as exc:
            raise ValueError(f"scenario config is missing {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: Path) -> "ScenarioConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def billing_route(
    prefs: Mapping[int, int], attempt_history: Sequence[Tuple[int, int]]
) -> Optional[int]:
    """Static-preference routing with failover.

    ``attempt_history`` holds (vendor, response code) pairs for this call.
    Returns the next vendor to try, or None when routing is finished: either
    the call connected, or every route failed and the call is abandoned.
    """
    if attempt_history:
        last_code = attempt_history[-1][1]
        if not triggers_failover(classify_response(last_code)):
            return None
    tried = {vendor for vendor, _ in attempt_history}
    remaining = [vendor for vendor in prefs if vendor not in tried]
    if not remaining:
        return None
    return max(remaining, key=lambda vendor: prefs[vendor])


@dataclass(frozen=True)
class DecisionRecord:
    """One admission decision, as logged by the simulator."""

    seq: int
    time_s: float
    call_id: str
    vendor: int
    accepted: bool
    code: Optional[int]


@dataclass
class ScenarioResult:
    """Full trace of one scenario run."""

    config: ScenarioConfig
    cdrs: List[CallRecord]
    interval_history: List[ClosedInterval]
    decision_log: List[DecisionRecord]
    acd_table: AcdVendorsTable
    abandoned_calls: int
    total_calls: int

    def final_targets(self) -> Dict[int, float]:
        """Targets in force at the end of the run (zero before any close)."""
        vendors = [spec.vendor for spec in self.config.vendors]
        if not self.interval_history:
            return {v: 0.0 for v in vendors}
        last = self.interval_history[-1]
        return {
            vendors[0]: last.result.reject_pct_exact[0],
            vendors[1]: last.result.reject_pct_exact[1],
        }

    def traffic_share(self) -> List[Dict[int, float]]:
        """Per-interval share of answered minutes per vendor."""
        shares = []
        for interval in self.interval_history:
            total = sum(s.total_minutes for s in interval.stats)
            if total > 0:
                shares.append(
                    {s.vendor: s.total_minutes / total for s in interval.stats}
                )
            else:
                shares.append({s.vendor: 0.0 for s in interval.stats})
        return shares

    def answered_minutes_share(self, from_interval: int = 0) -> Dict[int, float]:
        """Share of answered minutes per vendor, summed over intervals
        ``from_interval`` onward."""
        totals: Dict[int, float] = {}
        for interval in self.interval_history[from_interval:]:
            for s in interval.stats:
                totals[s.vendor] = totals.get(s.vendor, 0.0) + s.total_minutes
        grand = sum(totals.values())
        if grand == 0:
            return {v: 0.0 for v in totals}
        return {v: minutes / grand for v, minutes in totals.items()}

    def routed_share(self, from_interval: int = 0) -> Dict[int, float]:
        """Share of admitted (passed-through) calls per vendor over closed
        intervals ``from_interval`` onward, from the router counters."""
        totals: Dict[int, int] = {}
        for interval in self.interval_history[from_interval:]:
            for vendor, count in interval.received.items():
                totals[vendor] = totals.get(vendor, 0) + count
        grand = sum(totals.values())
        if grand == 0:
            return {v: 0.0 for v in totals}
        return {v: count / grand for v, count in totals.items()}


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Run one scenario to completion.

    Two interleaved event streams drive the run: call arrivals (Poisson) and
    aggregator ticks on the configured period. At equal times the tick goes
    first, so a call arriving exactly on a tick boundary already sees the
    refreshed targets. Ticking stops at the scenario end; calls still in
    flight then simply never get aggregated.
    """
    traffic_rng = random.Random(config.seed)
    vendors = tuple(spec.vendor for spec in config.vendors)
    prefs_map = {spec.vendor: spec.pref for spec in config.vendors}
    models = {spec.vendor: spec.model for spec in config.vendors}

    controller = AdmissionController(vendors=vendors, seed=config.seed + 1)
    cdr_store = CdrStore()
    aggregator = IntervalAggregator(
        vendors=vendors,
        prefs=tuple(spec.pref for spec in config.vendors),
        cdr_store=cdr_store,
        opened_at=config.start_time,
        load_min=config.load_min,
        tick_period_s=int(config.tick_period_min * 60),
        min_age_s=int(config.min_interval_min * 60),
        min_calls=config.min_calls,
        dest_prefix=config.dest_prefix,
        counter_source=controller.snapshot_and_reset_counters,
    )

    duration_s = config.duration_min * 60.0
    rate_per_s = config.arrival_rate_per_min / 60.0
    arrivals: List[float] = []
    t = traffic_rng.expovariate(rate_per_s)
    while t < duration_s:
        arrivals.append(t)
        t += traffic_rng.expovariate(rate_per_s)

    decision_log: List[DecisionRecord] = []
    abandoned = 0
    seq = 0

    def handle_call(t_s: float, call_id: str) -> bool:
        """Returns True when the call was answered somewhere."""
        nonlocal seq
        connect = config.start_time + timedelta(seconds=int(t_s))
        history: List[Tuple[int, int]] = []
        while True:
            vendor = billing_route(prefs_map, history)
            if vendor is None:
                answered = bool(history) and classify_response(
                    history[-1][1]
                ) is ResponseClass.SUCCESS
                return answered
            decision = controller.decide(call_id, vendor, now=t_s)
            controller.record_decision(vendor, decision)
            decision_log.append(
                DecisionRecord(seq, t_s, call_id, vendor, decision.accepted, decision.code)
            )
            seq += 1
            if not decision.accepted:
                cdr_store.append_cdr(
                    CallRecord(
                        call_id=call_id,
                        vendor=vendor,
                        connect_time=connect,
                        disconnect_time=connect,
                        duration_s=0,
                        cause=DisconnectCause.OTHER,
                        rejected_by_router=True,
                    )
                )
                history.append((vendor, decision.code))
                continue
            code, leg_duration = vendor_leg(models[vendor], traffic_rng)
            cause = (
                DisconnectCause.NORMAL_CLEARING
                if classify_response(code) is ResponseClass.SUCCESS
                else DisconnectCause.NO_USER_RESPONDING
            )
            cdr_store.append_cdr(
                CallRecord(
                    call_id=call_id,
                    vendor=vendor,
                    connect_time=connect,
                    disconnect_time=connect + timedelta(seconds=leg_duration),
                    duration_s=leg_duration,
                    cause=cause,
                    rejected_by_router=False,
                )
            )
            history.append((vendor, code))

    tick_period_s = int(config.tick_period_min * 60)
    num_ticks = int(duration_s // tick_period_s)

    next_arrival = 0
    for tick_idx in range(1, num_ticks + 1):
        tick_s = tick_idx * tick_period_s
        # arrivals strictly before the tick; the tick wins exact ties so a
        # call arriving on the boundary already sees the refreshed targets
        while next_arrival < len(arrivals) and arrivals[next_arrival] < tick_s:
            t_s = arrivals[next_arrival]
            call_id = f"c{next_arrival + 1:06d}"
            if not handle_call(t_s, call_id):
                abandoned += 1
            next_arrival += 1
        closed = aggregator.tick(config.start_time + timedelta(seconds=tick_s))
        if closed is not None and config.admission_enabled:
            controller.refresh_targets(closed.result)
    while next_arrival < len(arrivals):
        t_s = arrivals[next_arrival]
        call_id = f"c{next_arrival + 1:06d}"
        if not handle_call(t_s, call_id):
            abandoned += 1
        next_arrival += 1

    return ScenarioResult(
        config=config,
        cdrs=cdr_store.all_records(),
        interval_history=aggregator.history,
        decision_log=decision_log,
        acd_table=aggregator.acd_table,
        abandoned_calls=abandoned,
        total_calls=len(arrivals),
    )
