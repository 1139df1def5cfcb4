"""Append-only daily store for decrypted, sanitized uploads.

Persistence is one JSON-lines segment file per calendar day plus an
envelope-id index. A record is committed by appending one full line and
flushing; scans ignore any trailing line without a newline or with
malformed JSON, so an interrupted ingest is never visible (prefix
consistency). Records are never mutated or deleted.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path
from typing import Iterator, Optional, Sequence

from .model import RefinedMode, Trip, TripSegment
from .pipeline import PipelineConfig, process_trace
from .privacy import (
    IntegrityError,
    KeyStore,
    PolicyViolation,
    UploadEnvelope,
    decrypt_envelope,
    is_valid_pseudonym,
)
from .traceio import TraceParseError, decode_trace, encode_trace
from .transit import TransitDataset
from .trips import EmissionTable
from .model import Zone


@dataclass(frozen=True)
class StoredRecord:
    envelope_id: str
    received_at: int
    pseudonym: str
    date: Date
    trace_blob: str


@dataclass(frozen=True)
class IngestResult:
    accepted: bool
    envelope_id: str = ""
    duplicate: bool = False
    reason: str = ""


def segment_to_dict(seg: TripSegment) -> dict:
    return {
        "start_ts": seg.start_ts,
        "end_ts": seg.end_ts,
        "mode": seg.mode.value,
        "distance_m": seg.distance_m,
        "carbon_g": seg.carbon_g,
        "origin_zone": seg.origin_zone,
        "dest_zone": seg.dest_zone,
        "origin": list(seg.path[0]) if seg.path else None,
        "dest": list(seg.path[-1]) if seg.path else None,
    }


def trip_to_dict(trip: Trip) -> dict:
    return {
        "trip_id": trip.trip_id,
        "pseudonym": trip.pseudonym,
        "date": trip.date.isoformat(),
        "start_ts": trip.start_ts,
        "end_ts": trip.end_ts,
        "total_distance_m": trip.total_distance_m,
        "total_carbon_g": trip.total_carbon_g,
        "segments": [segment_to_dict(s) for s in trip.segments],
    }


def _segment_from_dict(d: dict) -> TripSegment:
    path = []
    if d.get("origin"):
        path.append(tuple(d["origin"]))
    if d.get("dest"):
        path.append(tuple(d["dest"]))
    return TripSegment(
        start_ts=d["start_ts"],
        end_ts=d["end_ts"],
        mode=RefinedMode(d["mode"]),
        distance_m=d["distance_m"],
        carbon_g=d["carbon_g"],
        origin_zone=d.get("origin_zone"),
        dest_zone=d.get("dest_zone"),
        path=tuple(path),
    )


def trip_from_dict(d: dict) -> Trip:
    segments = tuple(_segment_from_dict(s) for s in d["segments"])
    return Trip(
        d["trip_id"],
        d["pseudonym"],
        Date.fromisoformat(d["date"]),
        segments,
        d["total_distance_m"],
        d["total_carbon_g"],
    )


class Store:
    """Day-partitioned append-only persistence under one data directory."""

    def __init__(self, data_dir: str | os.PathLike) -> None:
        self.root = Path(data_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._index_path = self.root / "envelopes.idx"
        self._recover()
        self._seen: set[str] = set()
        if self._index_path.exists():
            self._seen = set(self._index_path.read_text().split())

    def _recover(self) -> None:
        """Drop torn tails left by a crash mid-append (no trailing newline)."""

        for path in list(self.root.glob("day-*.log")) + [self._index_path]:
            if not path.exists():
                continue
            data = path.read_bytes()
            if data and not data.endswith(b"\n"):
                cut = data.rfind(b"\n") + 1
                with open(path, "r+b") as fh:
                    fh.truncate(cut)

    def has_envelope(self, envelope_id: str) -> bool:
        return envelope_id in self._seen

    def append(self, record: StoredRecord, trips: Sequence[Trip]) -> None:
        """Commit one record atomically; duplicates are the caller's concern."""

        payload = {
            "record": {
                "envelope_id": record.envelope_id,
                "received_at": record.received_at,
                "pseudonym": record.pseudonym,
                "date": record.date.isoformat(),
                "trace_blob": record.trace_blob,
            },
            "trips": [trip_to_dict(t) for t in trips],
        }
        line = json.dumps(payload, separators=(",", ":")) + "\n"
        day_file = self.root / f"day-{record.date.isoformat()}.log"
        with self._lock:
            with open(day_file, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            with open(self._index_path, "a", encoding="utf-8") as fh:
                fh.write(record.envelope_id + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._seen.add(record.envelope_id)

    def _iter_committed(self) -> Iterator[dict]:
        for day_file in sorted(self.root.glob("day-*.log")):
            data = day_file.read_text(encoding="utf-8")
            for line in data.split("\n"):
                if not line:
                    continue
                # A trailing partial write has no terminator in `data`; split
                # still yields it, so validate by parsing.
                try:
                    yield json.loads(line)
                except json.JSONDecodeError:
                    continue

    def scan(
        self,
        date_from: Optional[Date] = None,
        date_to: Optional[Date] = None,
        pseudonym: Optional[str] = None,
    ) -> list[tuple[StoredRecord, list[Trip]]]:
        """Committed records matching all predicates, ordered by (date, pseudonym)."""

        out = []
        for payload in self._iter_committed():
            rec = payload["record"]
            date = Date.fromisoformat(rec["date"])
            if date_from and date < date_from:
                continue
            if date_to and date > date_to:
                continue
            if pseudonym and rec["pseudonym"] != pseudonym:
                continue
            record = StoredRecord(
                rec["envelope_id"], rec["received_at"], rec["pseudonym"], date, rec["trace_blob"]
            )
            out.append((record, [trip_from_dict(t) for t in payload["trips"]]))
        out.sort(key=lambda rt: (rt[0].date, rt[0].pseudonym, rt[0].envelope_id))
        return out

    def all_trips(self) -> list[Trip]:
        return [t for _, trips in self.scan() for t in trips]


class IngestionService:
    """Decrypt, validate, run the detection pipeline, and persist."""

    def __init__(
        self,
        store: Store,
        keys: KeyStore,
        transit: TransitDataset,
        emissions: EmissionTable,
        zones: Sequence[Zone] = (),
        cfg: PipelineConfig = PipelineConfig(),
    ) -> None:
        self.store = store
        self.keys = keys
        self.transit = transit
        self.emissions = emissions
        self.zones = tuple(zones)
        self.cfg = cfg

    def ingest(self, envelope: UploadEnvelope) -> IngestResult:
        envelope_id = envelope.envelope_id.hex()
        if self.store.has_envelope(envelope_id):
            return IngestResult(True, envelope_id, duplicate=True)
        try:
            payload = decrypt_envelope(envelope, self.keys)
        except IntegrityError:
            return IngestResult(False, reason="IntegrityError")
        except KeyError:
            return IngestResult(False, reason="UnknownKey")
        try:
            trace = decode_trace(payload.decode("utf-8"))
        except (TraceParseError, UnicodeDecodeError) as exc:
            return IngestResult(False, reason=f"ParseError: {exc}")
        if not is_valid_pseudonym(trace.pseudonym):
            return IngestResult(False, reason="PolicyViolation: pseudonym shape")

        _, trips = process_trace(trace, self.transit, self.emissions, self.zones, self.cfg)
        record = StoredRecord(
            envelope_id, int(time.time()), trace.pseudonym, trace.date, encode_trace(trace)
        )
        self.store.append(record, trips)
        return IngestResult(True, envelope_id, duplicate=False)
