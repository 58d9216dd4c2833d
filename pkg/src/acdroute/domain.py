"""Shared vocabulary: vendors, signaling response classes, call records, time."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum

VendorId = int

TS_FORMAT = "%Y-%m-%d %H:%M:%S"


def format_ts(ts: datetime) -> str:
    return ts.strftime(TS_FORMAT)


def parse_ts(text: str) -> datetime:
    return datetime.strptime(text, TS_FORMAT)


class ResponseClass(Enum):
    """Signaling response family, keyed by the hundreds digit of the status code."""

    PROVISIONAL = 1
    SUCCESS = 2
    REDIRECT = 3
    CLIENT_ERROR = 4
    SERVER_ERROR = 5
    GLOBAL_FAILURE = 6


_FAILOVER_CLASSES = frozenset(
    {ResponseClass.CLIENT_ERROR, ResponseClass.SERVER_ERROR, ResponseClass.GLOBAL_FAILURE}
)


def classify_response(code: int) -> ResponseClass:
    """Map a 3-digit signaling status code to its response class."""
    if not isinstance(code, int) or isinstance(code, bool):
        raise ValueError(f"response code must be an integer, got {code!r}")
    if not 100 <= code <= 699:
        raise ValueError(f"response code out of range 100-699: {code}")
    return ResponseClass(code // 100)


def triggers_failover(response_class: ResponseClass) -> bool:
    """Whether a final response of this class makes billing try the next route.

    Only the 4xx/5xx/6xx families do. A success never does, which is exactly
    the loophole a false-answer vendor exploits: signal "answered" immediately
    and no backup route is ever attempted.
    """
    return response_class in _FAILOVER_CLASSES


class DisconnectCause(Enum):
    """Why a call leg ended. Values double as the CDR CSV tokens."""

    NORMAL_CLEARING = "normal"
    NO_USER_RESPONDING = "no_answer"
    OTHER = "other"


def validate_vendor_id(vendor: int) -> int:
    if not isinstance(vendor, int) or isinstance(vendor, bool) or vendor < 0:
        raise ValueError(f"vendor id must be a non-negative integer, got {vendor!r}")
    return vendor


def validate_preference(pref: int) -> int:
    """Billing preference: static route priority between 1 and 9."""
    if not isinstance(pref, int) or isinstance(pref, bool) or not 1 <= pref <= 9:
        raise ValueError(f"preference must be an integer in 1..9, got {pref!r}")
    return pref


@dataclass(frozen=True)
class CallRecord:
    """One completed call attempt (CDR).

    Zero-duration records are unanswered legs; records with
    ``rejected_by_router`` set never reached the vendor at all.
    """

    call_id: str
    vendor: VendorId
    connect_time: datetime
    disconnect_time: datetime
    duration_s: int
    cause: DisconnectCause
    rejected_by_router: bool = False

    def __post_init__(self) -> None:
        validate_vendor_id(self.vendor)
        if self.disconnect_time < self.connect_time:
            raise ValueError(
                f"{self.call_id}: disconnect_time precedes connect_time"
            )
        if self.duration_s < 0:
            raise ValueError(f"{self.call_id}: negative duration")
        span = int((self.disconnect_time - self.connect_time).total_seconds())
        if span != self.duration_s:
            raise ValueError(
                f"{self.call_id}: duration_s={self.duration_s} does not match "
                f"timestamps ({span}s apart)"
            )
