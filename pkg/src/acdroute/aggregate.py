"""Dynamic measurement intervals and per-vendor call statistics.

An interval only closes on a scheduler tick, and only once it is old enough
*and* has seen enough ended calls; otherwise it stays open and is re-examined
on the next tick, which is why closed intervals always span a whole number of
tick periods. Closing an interval computes both vendors' statistics, runs the
rejection rule on the ACD pair, persists the row pair, and opens the next
interval at the exact close time so intervals partition the CDR timeline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .domain import CallRecord, format_ts, parse_ts, validate_preference, validate_vendor_id
from .rejection import QualityInput, RejectionResult, compute_rejection
from .store import AcdVendorsTable, CdrStore

logger = logging.getLogger(__name__)

TICK_PERIOD_S = 600
MIN_INTERVAL_AGE_S = 1200
MIN_INTERVAL_CALLS = 20

# received/rejected counter maps, keyed by vendor id
CounterSnapshot = Tuple[Dict[int, int], Dict[int, int]]


class TickDecision(Enum):
    KEEP_OPEN = "keep_open"
    CLOSE = "close"


def tick_decision(
    now: datetime,
    opened_at: datetime,
    calls_ended_in_interval: int,
    min_age_s: int = MIN_INTERVAL_AGE_S,
    min_calls: int = MIN_INTERVAL_CALLS,
) -> TickDecision:
    """Close only when the interval is old enough and busy enough; otherwise
    it stays open until the next tick."""
    if now < opened_at:
        raise ValueError(f"tick time {now} precedes interval start {opened_at}")
    age_s = (now - opened_at).total_seconds()
    if age_s >= min_age_s and calls_ended_in_interval >= min_calls:
        return TickDecision.CLOSE
    return TickDecision.KEEP_OPEN


@dataclass(frozen=True)
class VendorIntervalStats:
    """Duration buckets and averages for one vendor over one interval.

    Bucket bounds are seconds. ``acd_min`` is total answered minutes divided
    by the number of answered (nonzero-duration) calls, absent when the vendor
    answered nothing.
    """

    vendor: int
    bucket_zero: int
    bucket_0_5: int
    bucket_5_30: int
    bucket_over_30: int
    calls: int
    total_minutes: float
    acd_min: Optional[float]

    def to_dict(self) -> dict:
        return {
            "vendor": self.vendor,
            "bucket_zero": self.bucket_zero,
            "bucket_0_5": self.bucket_0_5,
            "bucket_5_30": self.bucket_5_30,
            "bucket_over_30": self.bucket_over_30,
            "calls": self.calls,
            "total_minutes": self.total_minutes,
            "acd_min": self.acd_min,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VendorIntervalStats":
        return cls(**data)


def vendor_stats(cdrs: Sequence[CallRecord], vendor: int) -> VendorIntervalStats:
    """Bucket one vendor's calls by duration; router-rejected attempts are
    skipped because they never reached the vendor."""
    bucket_zero = bucket_0_5 = bucket_5_30 = bucket_over_30 = 0
    total_s = 0
    answered = 0
    for record in cdrs:
        if record.vendor != vendor or record.rejected_by_router:
            continue
        d = record.duration_s
        if d == 0:
            bucket_zero += 1
        elif d <= 5:
            bucket_0_5 += 1
        elif d <= 30:
            bucket_5_30 += 1
        else:
            bucket_over_30 += 1
        total_s += d
        if d > 0:
            answered += 1
    total_minutes = total_s / 60.0
    acd_min = total_minutes / answered if answered else None
    return VendorIntervalStats(
        vendor=vendor,
        bucket_zero=bucket_zero,
        bucket_0_5=bucket_0_5,
        bucket_5_30=bucket_5_30,
        bucket_over_30=bucket_over_30,
        calls=bucket_zero + bucket_0_5 + bucket_5_30 + bucket_over_30,
        total_minutes=total_minutes,
        acd_min=acd_min,
    )


@dataclass
class IntervalState:
    """The currently open measurement window."""

    opened_at: datetime


@dataclass
class ClosedInterval:
    """Everything produced by closing one interval."""

    opened_at: datetime
    closed_at: datetime
    vendors: Tuple[int, int]
    prefs: Tuple[int, int]
    stats: Tuple[VendorIntervalStats, VendorIntervalStats]
    result: RejectionResult
    received: Dict[int, int] = field(default_factory=dict)
    rejected: Dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "opened_at": format_ts(self.opened_at),
            "closed_at": format_ts(self.closed_at),
            "vendors": list(self.vendors),
            "prefs": list(self.prefs),
            "stats": [s.to_dict() for s in self.stats],
            "result": {
                "max_idx": self.result.max_idx,
                "rank": list(self.result.rank),
                "load": list(self.result.load),
                "reject_pct": list(self.result.reject_pct),
                "reject_pct_exact": list(self.result.reject_pct_exact),
            },
            "received": {str(v): n for v, n in sorted(self.received.items())},
            "rejected": {str(v): n for v, n in sorted(self.rejected.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClosedInterval":
        result = RejectionResult(
            max_idx=data["result"]["max_idx"],
            rank=tuple(data["result"]["rank"]),
            load=tuple(data["result"]["load"]),
            reject_pct=tuple(data["result"]["reject_pct"]),
            reject_pct_exact=tuple(data["result"]["reject_pct_exact"]),
        )
        return cls(
            opened_at=parse_ts(data["opened_at"]),
            closed_at=parse_ts(data["closed_at"]),
            vendors=tuple(data["vendors"]),
            prefs=tuple(data["prefs"]),
            stats=tuple(VendorIntervalStats.from_dict(s) for s in data["stats"]),
            result=result,
            received={int(v): n for v, n in data["received"].items()},
            rejected={int(v): n for v, n in data["rejected"].items()},
        )


class IntervalAggregator:
    """Owns the open interval and turns scheduler ticks into closed intervals.

    Single-writer: one aggregator instance per routing group, ticks serialized
    with CDR ingestion by the caller. ``counter_source`` is called exactly once
    per close to snapshot-and-reset the router's received/rejected counters;
    without one the counters are derived from the CDR log's rejected flags.
    """

    def __init__(
        self,
        vendors: Tuple[int, int],
        prefs: Tuple[int, int],
        cdr_store: CdrStore,
        opened_at: datetime,
        acd_table: Optional[AcdVendorsTable] = None,
        load_min: float = 0.1,
        tick_period_s: int = TICK_PERIOD_S,
        min_age_s: int = MIN_INTERVAL_AGE_S,
        min_calls: int = MIN_INTERVAL_CALLS,
        dest_prefix: str = "",
        counter_source: Optional[Callable[[], CounterSnapshot]] = None,
    ):
        if len(set(vendors)) != 2:
            raise ValueError("a routing group holds exactly two distinct vendors")
        for v in vendors:
            validate_vendor_id(v)
        for p in prefs:
            validate_preference(p)
        if prefs[0] == prefs[1]:
            raise ValueError("the two routes must have distinct billing preferences")
        if tick_period_s <= 0:
            raise ValueError("tick period must be positive")
        self.vendors = tuple(vendors)
        self.prefs = tuple(prefs)
        self.load_min = load_min
        self.tick_period_s = tick_period_s
        self.min_age_s = min_age_s
        self.min_calls = min_calls
        self.dest_prefix = dest_prefix
        self.state = IntervalState(opened_at=opened_at)
        self.history: List[ClosedInterval] = []
        self._cdr_store = cdr_store
        self.acd_table = acd_table if acd_table is not None else AcdVendorsTable()
        self._counter_source = counter_source

    def tick(self, now: datetime) -> Optional[ClosedInterval]:
        """Evaluate the close conditions at a scheduler tick.

        Returns the closed interval, or None when it stays open (including
        when persistence failed, which keeps the interval open for a retry
        on the next tick).
        """
        opened_at = self.state.opened_at
        offset_s = (now - opened_at).total_seconds()
        if offset_s < 0:
            raise ValueError(f"tick time {now} precedes interval start {opened_at}")
        if offset_s % self.tick_period_s:
            raise ValueError(
                f"tick at {now} is not aligned to the {self.tick_period_s}s schedule"
            )
        in_range = self._cdr_store.query_cdrs(time_range=(opened_at, now))
        records = [r for r in in_range if r.vendor in self.vendors]
        ended = [r for r in records if not r.rejected_by_router]
        decision = tick_decision(
            now, opened_at, len(ended), self.min_age_s, self.min_calls
        )
        if decision is TickDecision.KEEP_OPEN:
            return None
        return self._close(now, records, ended)

    def _close(
        self,
        now: datetime,
        records: Sequence[CallRecord],
        ended: Sequence[CallRecord],
    ) -> Optional[ClosedInterval]:
        stats = tuple(vendor_stats(ended, v) for v in self.vendors)
        result = compute_rejection(
            QualityInput(
                acd_min=(stats[0].acd_min, stats[1].acd_min),
                prefs=self.prefs,
                load_min=self.load_min,
            )
        )
        try:
            self.acd_table.insert_acd_rows(
                (self.vendors[0], now, stats[0].acd_min, result.reject_pct[0], self.dest_prefix),
                (self.vendors[1], now, stats[1].acd_min, result.reject_pct[1], self.dest_prefix),
            )
        except OSError as exc:
            logger.warning("interval stays open, row persistence failed: %s", exc)
            return None

        if self._counter_source is not None:
            received, rejected = self._counter_source()
        else:
            received = {
                v: sum(1 for r in ended if r.vendor == v) for v in self.vendors
            }
            rejected = {
                v: sum(1 for r in records if r.rejected_by_router and r.vendor == v)
                for v in self.vendors
            }
        closed = ClosedInterval(
            opened_at=self.state.opened_at,
            closed_at=now,
            vendors=self.vendors,
            prefs=self.prefs,
            stats=stats,
            result=result,
            received=received,
            rejected=rejected,
        )
        self.history.append(closed)
        self.state = IntervalState(opened_at=now)
        return closed


def replay_cdrs(
    records: Sequence[CallRecord],
    vendors: Tuple[int, int],
    prefs: Tuple[int, int],
    load_min: float = 0.1,
    tick_period_s: int = TICK_PERIOD_S,
    min_age_s: int = MIN_INTERVAL_AGE_S,
    min_calls: int = MIN_INTERVAL_CALLS,
    dest_prefix: str = "",
) -> Tuple[List[ClosedInterval], AcdVendorsTable]:
    """Replay the tick schedule over a batch of historical CDRs.

    The schedule anchors at the earliest connect time and runs until no open
    interval can still close. Input order does not matter (records are
    canonicalized first) and records outside the configured vendor pair are
    ignored.
    """
    ordered = sorted(
        (r for r in records if r.vendor in vendors),
        key=lambda r: (r.disconnect_time, r.connect_time, r.call_id),
    )
    if not ordered:
        return [], AcdVendorsTable()
    start = min(r.connect_time for r in ordered)
    last_end = max(r.disconnect_time for r in ordered)

    cdr_store = CdrStore()
    for record in ordered:
        cdr_store.append_cdr(record)
    agg = IntervalAggregator(
        vendors=vendors,
        prefs=prefs,
        cdr_store=cdr_store,
        opened_at=start,
        load_min=load_min,
        tick_period_s=tick_period_s,
        min_age_s=min_age_s,
        min_calls=min_calls,
        dest_prefix=dest_prefix,
    )
    # once a tick falls this far past the last CDR, the open interval's call
    # count is frozen and the age condition has been evaluated at least once,
    # so any still-open interval can never close
    horizon = last_end + timedelta(seconds=min_age_s + tick_period_s)
    k = 1
    while True:
        now = start + timedelta(seconds=k * tick_period_s)
        if now > horizon:
            break
        agg.tick(now)
        k += 1
    return agg.history, agg.acd_table
