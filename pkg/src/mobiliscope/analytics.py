"""Aggregate queries over stored trips for the authority dashboard.

All aggregates are pure functions of the committed store snapshot and the
filter. Responses never carry a pseudonym unless the filter explicitly
asked for that pseudonym.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date as Date
from typing import Optional, Sequence

from .model import RefinedMode, Trip, TripSegment, Zone, point_in_zone, zones_overlap
from .store import Store, trip_to_dict

MAX_PAGE_SIZE = 500


class RequestError(ValueError):
    """Client-side request problem (e.g. malformed cursor)."""


class ZoneConfigError(ValueError):
    """Overlapping zones supplied for OD analytics."""


@dataclass(frozen=True)
class AnalyticsFilter:
    date_from: Optional[Date] = None
    date_to: Optional[Date] = None
    modes: Optional[frozenset[RefinedMode]] = None
    zones: Optional[frozenset[str]] = None
    tod_from_s: Optional[int] = None  # seconds-of-day, inclusive
    tod_to_s: Optional[int] = None
    pseudonym: Optional[str] = None

    def __post_init__(self) -> None:
        if self.date_from and self.date_to and self.date_from > self.date_to:
            raise RequestError("date range inverted")
        if self.tod_from_s is not None and self.tod_to_s is not None:
            if self.tod_from_s > self.tod_to_s:
                raise RequestError("time-of-day range inverted")

    def matches_trip(self, trip: Trip) -> bool:
        if self.date_from and trip.date < self.date_from:
            return False
        if self.date_to and trip.date > self.date_to:
            return False
        if self.pseudonym and trip.pseudonym != self.pseudonym:
            return False
        if self.tod_from_s is not None and trip.start_ts % 86400 < self.tod_from_s:
            return False
        if self.tod_to_s is not None and trip.start_ts % 86400 > self.tod_to_s:
            return False
        if self.modes is not None and not any(s.mode in self.modes for s in trip.segments):
            return False
        if self.zones is not None:
            endpoint_zones = {trip.segments[0].origin_zone, trip.segments[-1].dest_zone}
            if not endpoint_zones & self.zones:
                return False
        return True

    def matches_segment(self, seg: TripSegment) -> bool:
        return self.modes is None or seg.mode in self.modes


@dataclass(frozen=True)
class ModeAggregate:
    segment_count: int
    total_distance_m: float
    share: float
    count_share: float


@dataclass(frozen=True)
class ModalSplit:
    by_mode: dict[RefinedMode, ModeAggregate]


@dataclass(frozen=True)
class ODMatrix:
    zones: tuple[str, ...]
    cells: dict[tuple[str, str], int]
    unzoned: int


def _matched_trips(store: Store, flt: AnalyticsFilter) -> list[Trip]:
    trips = [t for t in store.all_trips() if flt.matches_trip(t)]
    trips.sort(key=lambda t: (t.date, t.pseudonym, t.start_ts, t.trip_id))
    return trips


def modal_split(store: Store, flt: AnalyticsFilter = AnalyticsFilter()) -> ModalSplit:
    """Distance-weighted (and count-weighted) mode shares over matched segments."""

    counts: dict[RefinedMode, int] = {m: 0 for m in RefinedMode}
    dists: dict[RefinedMode, float] = {m: 0.0 for m in RefinedMode}
    for trip in _matched_trips(store, flt):
        for seg in trip.segments:
            if flt.matches_segment(seg):
                counts[seg.mode] += 1
                dists[seg.mode] += seg.distance_m
    total_count = sum(counts.values())
    total_dist = sum(dists.values())
    by_mode = {}
    for mode in RefinedMode:
        if total_dist > 0:
            share = dists[mode] / total_dist
        elif total_count > 0:
            share = counts[mode] / total_count
        else:
            share = 0.0
        count_share = counts[mode] / total_count if total_count else 0.0
        by_mode[mode] = ModeAggregate(counts[mode], dists[mode], share, count_share)
    return ModalSplit(by_mode)


def od_matrix(
    store: Store, zones: Sequence[Zone], flt: AnalyticsFilter = AnalyticsFilter()
) -> ODMatrix:
    """Zone-to-zone trip counts; endpoints outside all zones are reported, not dropped."""

    for i, a in enumerate(zones):
        for b in zones[i + 1 :]:
            if zones_overlap(a, b):
                raise ZoneConfigError(f"zones {a.zone_id} and {b.zone_id} overlap")

    ids = tuple(z.zone_id for z in zones)
    cells: dict[tuple[str, str], int] = {(o, d): 0 for o in ids for d in ids}
    unzoned = 0
    for trip in _matched_trips(store, flt):
        first, last = trip.segments[0], trip.segments[-1]
        origin = _zone_for_point(first.path[0] if first.path else None, zones)
        dest = _zone_for_point(last.path[-1] if last.path else None, zones)
        if origin is None or dest is None:
            unzoned += 1
        else:
            cells[(origin, dest)] += 1
    return ODMatrix(ids, cells, unzoned)


def _zone_for_point(p: Optional[tuple[float, float]], zones: Sequence[Zone]) -> Optional[str]:
    if p is None:
        return None
    for z in zones:
        if point_in_zone(p, z):
            return z.zone_id
    return None


def carbon_total(
    store: Store, flt: AnalyticsFilter = AnalyticsFilter()
) -> tuple[float, dict[RefinedMode, float]]:
    """Total grams CO2 plus an exact per-mode breakdown."""

    by_mode: dict[RefinedMode, float] = {m: 0.0 for m in RefinedMode}
    for trip in _matched_trips(store, flt):
        for seg in trip.segments:
            if flt.matches_segment(seg):
                by_mode[seg.mode] += seg.carbon_g
    return sum(by_mode.values()), by_mode


def trips_page(
    store: Store,
    flt: AnalyticsFilter = AnalyticsFilter(),
    cursor: Optional[str] = None,
    page_size: int = 100,
) -> tuple[list[dict], Optional[str]]:
    """One page of trip summaries plus the next cursor (None when exhausted).

    The cursor is an opaque record ordinal. Pseudonyms are redacted unless
    the filter explicitly requested one.
    """

    if not 1 <= page_size <= MAX_PAGE_SIZE:
        raise RequestError(f"page size must be in [1, {MAX_PAGE_SIZE}]")
    start = 0
    if cursor is not None:
        if not cursor.isdigit():
            raise RequestError(f"malformed cursor: {cursor!r}")
        start = int(cursor)

    matched = _matched_trips(store, flt)
    page = matched[start : start + page_size]
    summaries = []
    for trip in page:
        d = trip_to_dict(trip)
        if flt.pseudonym is None:
            d.pop("pseudonym")
        # Raw endpoint coordinates stay server-side; zones are enough.
        for seg in d["segments"]:
            seg.pop("origin")
            seg.pop("dest")
        summaries.append(d)
    next_cursor = str(start + page_size) if start + page_size < len(matched) else None
    return summaries, next_cursor
