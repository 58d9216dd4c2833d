"""Quality-driven dynamic call routing.

Measures per-vendor average call duration (ACD) over dynamic intervals, turns
the ACD pair plus billing preferences into per-vendor rejection targets, and
applies those targets as probabilistic admission decisions on clone
interfaces, so a static-preference billing router is forced to fail over away
from low-quality or false-answer routes. A deterministic traffic simulator
closes the loop for experiments and tests.
"""

from .admission import REJECTION_CODE, AdmissionController, Decision
from .aggregate import (
    ClosedInterval,
    IntervalAggregator,
    IntervalState,
    TickDecision,
    VendorIntervalStats,
    replay_cdrs,
    tick_decision,
    vendor_stats,
)
from .domain import (
    CallRecord,
    DisconnectCause,
    ResponseClass,
    classify_response,
    triggers_failover,
)
from .rejection import (
    QualityInput,
    RejectionResult,
    compute_rejection,
    max_acd,
    round_half_up,
)
from .report import render_calc_breakdown, render_interval_table
from .sim import (
    DurationSpec,
    ScenarioConfig,
    ScenarioResult,
    VendorModel,
    VendorSpec,
    billing_route,
    run_scenario,
    vendor_leg,
)
from .store import AcdRow, AcdVendorsTable, CdrStore, read_cdr_csv, write_cdr_csv

__version__ = "0.1.0"

__all__ = [
    "AcdRow",
    "AcdVendorsTable",
    "AdmissionController",
    "CallRecord",
    "CdrStore",
    "ClosedInterval",
    "Decision",
    "DisconnectCause",
    "DurationSpec",
    "IntervalAggregator",
    "IntervalState",
    "QualityInput",
    "REJECTION_CODE",
    "RejectionResult",
    "ResponseClass",
    "ScenarioConfig",
    "ScenarioResult",
    "TickDecision",
    "VendorIntervalStats",
    "VendorModel",
    "VendorSpec",
    "billing_route",
    "classify_response",
    "compute_rejection",
    "max_acd",
    "read_cdr_csv",
    "render_calc_breakdown",
    "render_interval_table",
    "replay_cdrs",
    "round_half_up",
    "run_scenario",
    "tick_decision",
    "triggers_failover",
    "vendor_leg",
    "vendor_stats",
    "write_cdr_csv",
]
