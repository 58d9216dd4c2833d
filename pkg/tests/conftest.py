"""Shared builders for synthetic CDR streams."""

from datetime import datetime, timedelta

import pytest

from acdroute.domain import CallRecord, DisconnectCause

T0 = datetime(2020, 1, 1, 0, 0, 0)


def make_cdr(call_id, vendor, disconnect_at, duration_s, rejected=False):
    """A CDR ending at ``disconnect_at``; connect time is derived."""
    if rejected:
        cause = DisconnectCause.OTHER
    elif duration_s == 0:
        cause = DisconnectCause.NO_USER_RESPONDING
    else:
        cause = DisconnectCause.NORMAL_CLEARING
    return CallRecord(
        call_id=call_id,
        vendor=vendor,
        connect_time=disconnect_at - timedelta(seconds=duration_s),
        disconnect_time=disconnect_at,
        duration_s=duration_s,
        cause=cause,
        rejected_by_router=rejected,
    )


def spread_cdrs(vendor, durations, start=T0, window_s=1200, tag="x"):
    """CDRs with the given durations, ending evenly inside [start, start+window_s)."""
    step = window_s / (len(durations) + 1)
    return [
        make_cdr(
            f"{tag}{vendor}-{i:04d}",
            vendor,
            start + timedelta(seconds=int((i + 1) * step)),
            d,
        )
        for i, d in enumerate(durations)
    ]


@pytest.fixture
def t0():
    return T0
