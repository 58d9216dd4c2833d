"""Static monitoring documents: the interval table and the calculator breakdown.

Rendering is pure string building; the same history always produces the same
bytes. All rounding happens here, on copies of full-precision values.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from html import escape
from typing import List, Optional, Sequence

from .aggregate import ClosedInterval
from .domain import format_ts
from .rejection import QualityInput, RejectionResult, round_half_up

TABLE_FORMATS = ("html", "csv", "json")

INTERVAL_COLUMNS = [
    "date_time",
    "vendor",
    "priority",
    "calls_zero",
    "calls_0_5s",
    "calls_5_30s",
    "calls_over_30s",
    "calls",
    "total_minutes",
    "acd_min",
    "target_balance_pct",
    "received",
    "rejected",
]

_INTERVAL_HEADINGS = [
    "Date and time",
    "Vendor",
    "Priority",
    "=0s",
    "0-5s",
    "5-30s",
    ">30s",
    "Calls",
    "Total minutes",
    "ACD (min)",
    "Target balance",
    "Received",
    "Rejected",
]


@dataclass(frozen=True)
class IntervalReportRow:
    """One vendor's formatted line of the interval table."""

    date_time: str
    vendor: str
    priority: str
    calls_zero: str
    calls_0_5s: str
    calls_5_30s: str
    calls_over_30s: str
    calls: str
    total_minutes: str
    acd_min: str
    target_balance_pct: str
    received: str
    rejected: str

    def as_list(self) -> List[str]:
        return [getattr(self, column) for column in INTERVAL_COLUMNS]


def _balance_percents(interval: ClosedInterval) -> List[Optional[int]]:
    """Integer target-balance percents, guaranteed to sum to 100 when present."""
    load = interval.result.load
    if load[0] is None or load[1] is None:
        return [None, None]
    first = int(round_half_up(load[0] * 100.0, 0))
    return [first, 100 - first]


def build_interval_rows(history: Sequence[ClosedInterval]) -> List[IntervalReportRow]:
    """Two rows per closed interval, newest interval first."""
    rows: List[IntervalReportRow] = []
    ordered = sorted(history, key=lambda iv: iv.closed_at, reverse=True)
    for interval in ordered:
        balance = _balance_percents(interval)
        for idx, stats in enumerate(interval.stats):
            vendor = interval.vendors[idx]
            rows.append(
                IntervalReportRow(
                    date_time=format_ts(interval.closed_at),
                    vendor=str(vendor),
                    priority=str(interval.prefs[idx]),
                    calls_zero=str(stats.bucket_zero),
                    calls_0_5s=str(stats.bucket_0_5),
                    calls_5_30s=str(stats.bucket_5_30),
                    calls_over_30s=str(stats.bucket_over_30),
                    calls=str(stats.calls),
                    total_minutes=f"{round_half_up(stats.total_minutes, 1):.1f}",
                    acd_min=""
                    if stats.acd_min is None
                    else f"{round_half_up(stats.acd_min, 2):.2f}",
                    target_balance_pct=""
                    if balance[idx] is None
                    else str(balance[idx]),
                    received=str(interval.received.get(vendor, 0)),
                    rejected=str(interval.rejected.get(vendor, 0)),
                )
            )
    return rows


def render_interval_table(history: Sequence[ClosedInterval], format: str) -> str:
    """Render the per-interval traffic/quality table as html, csv or json."""
    if format not in TABLE_FORMATS:
        raise ValueError(f"unknown format {format!r}, want one of {TABLE_FORMATS}")
    rows = build_interval_rows(history)
    if format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(INTERVAL_COLUMNS)
        for row in rows:
            writer.writerow(row.as_list())
        return buffer.getvalue()
    if format == "json":
        payload = {
            "columns": INTERVAL_COLUMNS,
            "rows": [dict(zip(INTERVAL_COLUMNS, row.as_list())) for row in rows],
        }
        return json.dumps(payload, indent=2) + "\n"
    return _interval_html(rows, history)


_HTML_STYLE = (
    "body{font-family:sans-serif;margin:1.5em}"
    "table{border-collapse:collapse}"
    "caption{font-weight:bold;padding:.5em;text-align:left}"
    "th,td{border:1px solid #999;padding:.25em .6em;text-align:right}"
    "th{background:#eee}"
    "td:first-child,td:nth-child(2){text-align:left}"
)


def _interval_html(rows: Sequence[IntervalReportRow], history: Sequence[ClosedInterval]) -> str:
    as_of = ""
    if history:
        latest = max(iv.closed_at for iv in history)
        as_of = f" (as of {escape(format_ts(latest))})"
    lines = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'>",
        "<title>Traffic balance with quality routing</title>",
        f"<style>{_HTML_STYLE}</style>",
        "</head><body>",
        "<table>",
        f"<caption>Traffic balance with quality routing{as_of}</caption>",
        "<tr>" + "".join(f"<th>{escape(h)}</th>" for h in _INTERVAL_HEADINGS) + "</tr>",
    ]
    for row in rows:
        cells = []
        for column, value in zip(INTERVAL_COLUMNS, row.as_list()):
            if column == "target_balance_pct" and value != "":
                value = f"{value} %"
            cells.append(f"<td>{escape(value)}</td>")
        lines.append("<tr>" + "".join(cells) + "</tr>")
    lines += ["</table>", "</body></html>", ""]
    return "\n".join(lines)


CALC_FORMATS = ("txt", "html")

_CALC_LABELS = [
    "Minimum load share (0-50%)",
    "Billing preference (1-9)",
    "ACD (minutes)",
    "Rank (0-1)",
    "Target load share (%)",
    "Rejection rate (%)",
]


def _pct1(value: Optional[float]) -> str:
    if value is None:
        return "n/a"
    return f"{round_half_up(value, 1):.1f}%"


def _calc_cells(result: RejectionResult, quality: QualityInput) -> List[List[str]]:
    acd_cell = [
        "n/a" if acd is None else str(acd) for acd in quality.acd_min
    ]
    return [
        [_pct1(quality.load_min * 100.0)] * 2,
        [str(p) for p in quality.prefs],
        acd_cell,
        [_pct1(None if r is None else r * 100.0) for r in result.rank],
        [_pct1(None if l is None else l * 100.0) for l in result.load],
        [_pct1(result.reject_pct_exact[0]), _pct1(result.reject_pct_exact[1])],
    ]


def render_calc_breakdown(
    result: RejectionResult, quality: QualityInput, format: str = "txt"
) -> str:
    """Two-column breakdown of one rejection computation (route A vs route B)."""
    if format not in CALC_FORMATS:
        raise ValueError(f"unknown format {format!r}, want one of {CALC_FORMATS}")
    cells = _calc_cells(result, quality)
    if format == "txt":
        label_width = max(len(label) for label in _CALC_LABELS)
        lines = [f"{'':<{label_width}}  {'Route A':>12} {'Route B':>12}"]
        for label, (a, b) in zip(_CALC_LABELS, cells):
            lines.append(f"{label:<{label_width}}  {a:>12} {b:>12}")
        return "\n".join(lines) + "\n"
    lines = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'>",
        "<title>Rejection calculator</title>",
        f"<style>{_HTML_STYLE}</style>",
        "</head><body>",
        "<table>",
        "<caption>Rejection calculator</caption>",
        "<tr><th></th><th>Route A</th><th>Route B</th></tr>",
    ]
    for label, (a, b) in zip(_CALC_LABELS, cells):
        lines.append(
            f"<tr><td>{escape(label)}</td><td>{escape(a)}</td><td>{escape(b)}</td></tr>"
        )
    lines += ["</table>", "</body></html>", ""]
    return "\n".join(lines)
