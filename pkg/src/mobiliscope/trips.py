"""Trip assembly: splitting on long stops, distances, carbon, usual routes."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from datetime import date as Date
from typing import Optional, Sequence

from .model import (
    DEFAULT_ACCURACY_MAX_M,
    LocationFix,
    RefinedMode,
    Trip,
    TripSegment,
    Zone,
    haversine_m,
    path_length_m,
    zone_of,
)

#: Placeholder grams CO2 per km; configuration, not ground truth.
DEFAULT_EMISSION_FACTORS = {
    RefinedMode.WALK: 0.0,
    RefinedMode.BICYCLE: 0.0,
    RefinedMode.METRO: 40.0,
    RefinedMode.BUS: 80.0,
    RefinedMode.PRIVATE_VEHICLE: 180.0,
    RefinedMode.STILL: 0.0,
    RefinedMode.UNKNOWN: 0.0,
}

DEFAULT_STILL_SPLIT_S = 300


class EmissionConfigError(ValueError):
    """A mode is missing from the emission table at load time."""


@dataclass(frozen=True)
class EmissionTable:
    grams_per_km: dict[RefinedMode, float]

    def __post_init__(self) -> None:
        for mode in RefinedMode:
            if mode not in self.grams_per_km:
                raise EmissionConfigError(f"no emission factor for {mode.value}")
        for mode in (RefinedMode.WALK, RefinedMode.BICYCLE, RefinedMode.STILL):
            if self.grams_per_km[mode] != 0.0:
                raise EmissionConfigError(f"{mode.value} factor must be 0")
        if any(v < 0 for v in self.grams_per_km.values()):
            raise EmissionConfigError("negative emission factor")

    def factor(self, mode: RefinedMode) -> float:
        return self.grams_per_km[mode]


def load_emission_table(text: str) -> EmissionTable:
    """Parse `<MODE> <g_per_km>` lines into a table; unlisted modes keep defaults."""

    factors = dict(DEFAULT_EMISSION_FACTORS)
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        mode_token, value = line.split(" ")
        factors[RefinedMode(mode_token)] = float(value)
    return EmissionTable(factors)


def load_zones(text: str) -> list[Zone]:
    """Parse `Z <zone_id> <lat:lon;...>` lines."""

    zones = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(" ")
        if parts[0] != "Z":
            raise ValueError(f"unknown zone line tag: {parts[0]}")
        pts = tuple((float(p.split(":")[0]), float(p.split(":")[1])) for p in parts[2].split(";"))
        zones.append(Zone(parts[1], pts))
    return zones


def segment_distance_m(
    segment: TripSegment,
    fixes: Sequence[LocationFix],
    accuracy_max_m: float = DEFAULT_ACCURACY_MAX_M,
) -> tuple[float, bool]:
    """Traveled distance of one segment, with a no-data warning flag.

    Sums haversine hops over the segment's usable fixes; a segment with
    fewer than two usable fixes falls back to its stored path (for metro,
    the entry/exit station pair). Returns (meters, flagged).
    """

    pts = [
        (f.lat, f.lon)
        for f in fixes
        if segment.start_ts <= f.ts < segment.end_ts and f.is_usable(accuracy_max_m)
    ]
    if len(pts) >= 2:
        return path_length_m(pts), False
    if len(segment.path) >= 2:
        return path_length_m(segment.path), False
    return 0.0, True


def carbon_g(segment: TripSegment, table: EmissionTable) -> float:
    """Grams CO2 = factor(mode) * distance in km, exact arithmetic."""

    return table.factor(segment.mode) * segment.distance_m / 1000.0


def finalize_segments(
    segments: Sequence[TripSegment],
    fixes: Sequence[LocationFix],
    table: EmissionTable,
    zones: Sequence[Zone] = (),
    accuracy_max_m: float = DEFAULT_ACCURACY_MAX_M,
) -> list[TripSegment]:
    """Fill in distance, carbon, and endpoint zones on refined segments."""

    out = []
    for seg in segments:
        dist, _ = segment_distance_m(seg, fixes, accuracy_max_m)
        seg = replace(seg, distance_m=dist)
        seg = replace(seg, carbon_g=carbon_g(seg, table))
        if zones and seg.path:
            seg = replace(
                seg,
                origin_zone=zone_of(seg.path[0], zones),
                dest_zone=zone_of(seg.path[-1], zones),
            )
        out.append(seg)
    return out


def split_trips(
    segments: Sequence[TripSegment],
    pseudonym: str,
    date: Date,
    still_split_s: int = DEFAULT_STILL_SPLIT_S,
) -> list[Trip]:
    """Cut a day's contiguous segments into trips at long Still periods.

    Still segments >= still_split close the current trip and are excluded
    from every trip; shorter Still periods stay inside. Trips with no
    moving segment are dropped.
    """

    trips: list[Trip] = []
    current: list[TripSegment] = []

    def close() -> None:
        nonlocal current
        # Trim trailing short-Still padding, then require a moving segment.
        while current and current[-1].mode is RefinedMode.STILL:
            current.pop()
        while current and current[0].mode is RefinedMode.STILL:
            current.pop(0)
        if current and any(s.mode is not RefinedMode.STILL for s in current):
            trips.append(_build_trip(current, pseudonym, date))
        current = []

    for seg in segments:
        if seg.mode is RefinedMode.STILL and seg.duration_s >= still_split_s:
            close()
        else:
            current.append(seg)
    close()
    return trips


def _build_trip(segments: Sequence[TripSegment], pseudonym: str, date: Date) -> Trip:
    total_dist = sum(s.distance_m for s in segments)
    total_carbon = sum(s.carbon_g for s in segments)
    # Derived, not containing the pseudonym: trip ids may appear in
    # analytics responses where pseudonyms are redacted.
    raw = f"{pseudonym}|{date.isoformat()}|{segments[0].start_ts}".encode()
    trip_id = hashlib.sha256(raw).hexdigest()[:16]
    return Trip(trip_id, pseudonym, date, tuple(segments), total_dist, total_carbon)


RouteSignature = tuple[Optional[str], Optional[str], tuple[str, ...]]


def trip_signature(trip: Trip) -> RouteSignature:
    """(origin zone, destination zone, ordered mode sequence)."""

    modes = tuple(s.mode.value for s in trip.segments if s.mode is not RefinedMode.STILL)
    return (trip.segments[0].origin_zone, trip.segments[-1].dest_zone, modes)


def usual_routes(trips: Sequence[Trip], min_support: int) -> list[tuple[RouteSignature, int]]:
    """Route signatures seen at least min_support times, most frequent first."""

    counts: dict[RouteSignature, int] = {}
    for t in trips:
        sig = trip_signature(t)
        counts[sig] = counts.get(sig, 0) + 1
    kept = [(sig, n) for sig, n in counts.items() if n >= min_support]
    kept.sort(key=lambda item: (-item[1], _sig_key(item[0])))
    return kept


def _sig_key(sig: RouteSignature) -> tuple:
    return (sig[0] or "", sig[1] or "", sig[2])
