"""Line-delimited trace file codec.

Format (UTF-8 text, one record per line, fields space-separated):

    T <pseudonym> <date:YYYY-MM-DD> 1
    F <ts> <lat:%.7f> <lon:%.7f> <accuracy:%.1f> <speed:%.2f|->
    A <ts> <STILL|ON_FOOT|BICYCLE|VEHICLE|UNKNOWN> <confidence:0-100>

Record lines are sorted by timestamp; `-` denotes an absent speed. Unknown
or extra fields are rejected, never silently dropped.
"""

from __future__ import annotations

import math
from datetime import date as Date

from .model import ActivityClass, ActivitySample, DomainError, LocationFix, TraceDay

FORMAT_VERSION = "1"


class TraceParseError(ValueError):
    """Malformed trace document; carries the offending 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def encode_trace(trace: TraceDay) -> str:
    """Serialize a TraceDay to its canonical text form."""

    lines = [f"T {trace.pseudonym} {trace.date.isoformat()} {FORMAT_VERSION}"]
    records: list[tuple[int, int, str]] = []
    for f in trace.fixes:
        speed = "-" if f.speed_mps is None else f"{f.speed_mps:.2f}"
        records.append((f.ts, 0, f"F {f.ts} {f.lat:.7f} {f.lon:.7f} {f.accuracy_m:.1f} {speed}"))
    for s in trace.samples:
        records.append((s.ts, 1, f"A {s.ts} {s.cls.value} {s.confidence}"))
    records.sort(key=lambda r: (r[0], r[1]))
    lines.extend(r[2] for r in records)
    return "\n".join(lines) + "\n"


def decode_trace(text: str) -> TraceDay:
    """Parse the canonical text form back into a TraceDay.

    Raises:
        TraceParseError: on any malformed, out-of-range, or unknown content.
    """

    lines = text.splitlines()
    if not lines:
        raise TraceParseError(1, "empty document")

    header = lines[0].split(" ")
    if len(header) != 4 or header[0] != "T":
        raise TraceParseError(1, "malformed header")
    pseudonym = header[1]
    try:
        date = Date.fromisoformat(header[2])
    except ValueError:
        raise TraceParseError(1, f"bad date: {header[2]}") from None
    if header[3] != FORMAT_VERSION:
        raise TraceParseError(1, f"unsupported version: {header[3]}")

    day_start = _epoch_s(date)
    day_end = day_start + 86400
    fixes: list[LocationFix] = []
    samples: list[ActivitySample] = []

    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            raise TraceParseError(line_no, "blank line")
        parts = line.split(" ")
        tag = parts[0]
        if tag == "F":
            if len(parts) != 6:
                raise TraceParseError(line_no, f"fix line has {len(parts) - 1} fields, want 5")
            ts = _parse_int(parts[1], "ts", line_no)
            lat = _parse_float(parts[2], "lat", line_no)
            lon = _parse_float(parts[3], "lon", line_no)
            if not -90.0 <= lat <= 90.0:
                raise TraceParseError(line_no, "lat out of range")
            if not -180.0 <= lon <= 180.0:
                raise TraceParseError(line_no, "lon out of range")
            acc = _parse_float(parts[4], "accuracy", line_no)
            speed = None if parts[5] == "-" else _parse_float(parts[5], "speed", line_no)
            try:
                fixes.append(LocationFix(ts, lat, lon, acc, speed))
            except DomainError as exc:
                raise TraceParseError(line_no, str(exc)) from None
        elif tag == "A":
            if len(parts) != 4:
                raise TraceParseError(line_no, f"sample line has {len(parts) - 1} fields, want 3")
            ts = _parse_int(parts[1], "ts", line_no)
            try:
                cls = ActivityClass(parts[2])
            except ValueError:
                raise TraceParseError(line_no, f"unknown class: {parts[2]}") from None
            conf = _parse_int(parts[3], "confidence", line_no)
            try:
                samples.append(ActivitySample(ts, cls, conf))
            except DomainError as exc:
                raise TraceParseError(line_no, str(exc)) from None
        else:
            raise TraceParseError(line_no, f"unknown record tag: {tag}")
        ts = fixes[-1].ts if tag == "F" else samples[-1].ts
        if not day_start <= ts < day_end:
            raise TraceParseError(line_no, "timestamp outside trace day")

    try:
        return TraceDay(pseudonym, date, tuple(fixes), tuple(samples))
    except DomainError as exc:
        raise TraceParseError(len(lines), str(exc)) from None


def day_start_epoch_s(date: Date) -> int:
    """Epoch seconds of 00:00 UTC on the given day."""

    return _epoch_s(date)


def _epoch_s(date: Date) -> int:
    return (date - Date(1970, 1, 1)).days * 86400


def _parse_int(token: str, name: str, line_no: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise TraceParseError(line_no, f"bad {name}: {token}") from None


def _parse_float(token: str, name: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise TraceParseError(line_no, f"bad {name}: {token}") from None
    if not math.isfinite(value):
        raise TraceParseError(line_no, f"non-finite {name}")
    return value
