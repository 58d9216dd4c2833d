"""Flat-file persistence: the append-only CDR log and the acd_vendors table.

Both stores keep an in-memory index and optionally mirror every append to a
newline-delimited CSV file, so the artifact needs no database. Readers are
cheap copies; writers are serialized by a lock.
"""

from __future__ import annotations

import csv
import io
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Tuple

from .domain import CallRecord, DisconnectCause, format_ts, parse_ts

CDR_CSV_HEADER = [
    "call_id",
    "vendor",
    "connect_time",
    "disconnect_time",
    "duration_s",
    "cause",
    "rejected",
]

ACD_CSV_HEADER = ["id", "vendor", "date", "acd_min", "reject_pct", "prefix"]


def _cdr_fields(record: CallRecord) -> List[str]:
    return [
        record.call_id,
        str(record.vendor),
        format_ts(record.connect_time),
        format_ts(record.disconnect_time),
        str(record.duration_s),
        record.cause.value,
        "1" if record.rejected_by_router else "0",
    ]


def _parse_cdr_fields(fields: List[str]) -> CallRecord:
    if len(fields) != len(CDR_CSV_HEADER):
        raise ValueError(f"expected {len(CDR_CSV_HEADER)} fields, got {len(fields)}")
    call_id, vendor_s, connect_s, disconnect_s, duration_s, cause_s, rejected_s = fields
    try:
        vendor = int(vendor_s)
    except ValueError:
        raise ValueError(f"bad vendor id {vendor_s!r}") from None
    try:
        connect = parse_ts(connect_s)
        disconnect = parse_ts(disconnect_s)
    except ValueError:
        raise ValueError("bad timestamp (want YYYY-MM-DD HH:MM:SS)") from None
    try:
        duration = int(duration_s)
    except ValueError:
        raise ValueError(f"bad duration {duration_s!r}") from None
    try:
        cause = DisconnectCause(cause_s)
    except ValueError:
        raise ValueError(f"unknown cause {cause_s!r}") from None
    if rejected_s not in ("0", "1"):
        raise ValueError(f"rejected flag must be 0 or 1, got {rejected_s!r}")
    return CallRecord(
        call_id=call_id,
        vendor=vendor,
        connect_time=connect,
        disconnect_time=disconnect,
        duration_s=duration,
        cause=cause,
        rejected_by_router=rejected_s == "1",
    )


def write_cdr_csv(path: Path, records: List[CallRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CDR_CSV_HEADER)
        for record in records:
            writer.writerow(_cdr_fields(record))


def read_cdr_csv(path: Path) -> Tuple[List[CallRecord], List[Tuple[int, str]]]:
    """Parse a CDR CSV file.

    Returns (records, errors) where errors are (line_number, message) pairs;
    well-formed rows are kept even when other rows are malformed.
    """
    records: List[CallRecord] = []
    errors: List[Tuple[int, str]] = []
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if lineno == 1:
                if row != CDR_CSV_HEADER:
                    errors.append((1, f"bad header, want {','.join(CDR_CSV_HEADER)}"))
                continue
            try:
                records.append(_parse_cdr_fields(row))
            except ValueError as exc:
                errors.append((lineno, str(exc)))
    return records, errors


class CdrStore:
    """Append-only CDR log with range queries over disconnect time."""

    def __init__(self, path: Optional[Path] = None):
        self._lock = threading.Lock()
        self._records: List[CallRecord] = []
        self._path = Path(path) if path is not None else None
        self._handle: Optional[io.TextIOWrapper] = None
        if self._path is not None:
            new_file = not self._path.exists() or self._path.stat().st_size == 0
            if not new_file:
                records, errors = read_cdr_csv(self._path)
                if errors:
                    lineno, message = errors[0]
                    raise ValueError(f"{self._path}: line {lineno}: {message}")
                self._records = records
            self._handle = open(self._path, "a", newline="", encoding="utf-8")
            if new_file:
                writer = csv.writer(self._handle, lineterminator="\n")
                writer.writerow(CDR_CSV_HEADER)
                self._handle.flush()

    def append_cdr(self, record: CallRecord) -> int:
        """Durably append one record; returns its monotonically increasing id."""
        with self._lock:
            self._records.append(record)
            if self._handle is not None:
                writer = csv.writer(self._handle, lineterminator="\n")
                writer.writerow(_cdr_fields(record))
                self._handle.flush()
            return len(self._records)

    def query_cdrs(
        self,
        vendor: Optional[int] = None,
        time_range: Optional[Tuple[datetime, datetime]] = None,
    ) -> List[CallRecord]:
        """Records with disconnect_time in the half-open [start, end), ordered
        by disconnect time (insertion order breaks ties)."""
        if time_range is not None:
            start, end = time_range
            if end < start:
                raise ValueError(f"inverted time range: {start} .. {end}")
        with self._lock:
            indexed = list(enumerate(self._records))
        out = []
        for idx, record in indexed:
            if vendor is not None and record.vendor != vendor:
                continue
            if time_range is not None and not (start <= record.disconnect_time < end):
                continue
            out.append((record.disconnect_time, idx, record))
        out.sort(key=lambda item: (item[0], item[1]))
        return [record for _, _, record in out]

    def all_records(self) -> List[CallRecord]:
        with self._lock:
            return list(self._records)

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


@dataclass(frozen=True)
class AcdRow:
    """One vendor's line of a closed interval, as persisted."""

    id: int
    vendor: int
    date: datetime
    acd_min: Optional[float]
    reject_pct: float
    prefix: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.reject_pct <= 100.0:
            raise ValueError(f"reject_pct out of [0, 100]: {self.reject_pct}")


def _acd_fields(row: AcdRow) -> List[str]:
    return [
        str(row.id),
        str(row.vendor),
        format_ts(row.date),
        "" if row.acd_min is None else str(row.acd_min),
        f"{row.reject_pct:.2f}",
        row.prefix,
    ]


def _parse_acd_fields(fields: List[str]) -> AcdRow:
    if len(fields) != len(ACD_CSV_HEADER):
        raise ValueError(f"expected {len(ACD_CSV_HEADER)} fields, got {len(fields)}")
    id_s, vendor_s, date_s, acd_s, reject_s, prefix = fields
    return AcdRow(
        id=int(id_s),
        vendor=int(vendor_s),
        date=parse_ts(date_s),
        acd_min=None if acd_s == "" else float(acd_s),
        reject_pct=float(reject_s),
        prefix=prefix,
    )


class AcdVendorsTable:
    """Closed-interval rows, two per interval, inserted atomically as a pair."""

    def __init__(self, path: Optional[Path] = None):
        self._lock = threading.Lock()
        self._rows: List[AcdRow] = []
        self._path = Path(path) if path is not None else None
        if self._path is not None and self._path.exists() and self._path.stat().st_size:
            self._rows = read_acd_csv(self._path)
        self._handle: Optional[io.TextIOWrapper] = None
        if self._path is not None:
            new_file = not self._path.exists() or self._path.stat().st_size == 0
            self._handle = open(self._path, "a", newline="", encoding="utf-8")
            if new_file:
                writer = csv.writer(self._handle, lineterminator="\n")
                writer.writerow(ACD_CSV_HEADER)
                self._handle.flush()

    def insert_acd_rows(
        self,
        first: Tuple[int, datetime, Optional[float], float, str],
        second: Tuple[int, datetime, Optional[float], float, str],
    ) -> Tuple[int, int]:
        """Persist both rows of one closed interval; ids are assigned here.

        Each argument is (vendor, date, acd_min, reject_pct, prefix). The pair
        becomes visible atomically: a reader never sees one row without the
        other, and latest_pair always reflects the highest-id pair.
        """
        with self._lock:
            next_id = len(self._rows) + 1
            rows = (
                AcdRow(next_id, *first),
                AcdRow(next_id + 1, *second),
            )
            if self._handle is not None:
                buffer = io.StringIO()
                writer = csv.writer(buffer, lineterminator="\n")
                writer.writerow(_acd_fields(rows[0]))
                writer.writerow(_acd_fields(rows[1]))
                # single write + flush so a crash cannot split the pair
                self._handle.write(buffer.getvalue())
                self._handle.flush()
            self._rows.extend(rows)
            return rows[0].id, rows[1].id

    def latest_pair(self) -> Optional[Tuple[AcdRow, AcdRow]]:
        with self._lock:
            if not self._rows:
                return None
            return self._rows[-2], self._rows[-1]

    def rows(self) -> List[AcdRow]:
        with self._lock:
            return list(self._rows)

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(ACD_CSV_HEADER)
        for row in self.rows():
            writer.writerow(_acd_fields(row))
        return buffer.getvalue()

    def export_csv(self, path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            handle.write(self.to_csv_text())

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def read_acd_csv(path: Path) -> List[AcdRow]:
    rows: List[AcdRow] = []
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        for lineno, fields in enumerate(reader, start=1):
            if not fields:
                continue
            if lineno == 1:
                if fields != ACD_CSV_HEADER:
                    raise ValueError(f"{path}: bad header on line 1")
                continue
            try:
                rows.append(_parse_acd_fields(fields))
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return rows
