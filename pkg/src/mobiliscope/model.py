"""Shared domain types and geospatial primitives.

All coordinates are degrees in double precision; meters only appear as
derived quantities. Timestamps are integer seconds UTC. Every type here is
an immutable value after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date as Date
from enum import Enum
from typing import Optional, Sequence

EARTH_RADIUS_M = 6_371_000.0

#: Fixes with an accuracy radius above this are flagged low-quality,
#: never deleted (the GPS-gap heuristic needs to see the degradation).
DEFAULT_ACCURACY_MAX_M = 100.0


class DomainError(ValueError):
    """A value violates a documented domain invariant."""


class ActivityClass(Enum):
    """Coarse motion category emitted by the activity sampler."""

    STILL = "STILL"
    ON_FOOT = "ON_FOOT"
    BICYCLE = "BICYCLE"
    VEHICLE = "VEHICLE"
    UNKNOWN = "UNKNOWN"


class RefinedMode(Enum):
    """Transport mode after transit disambiguation."""

    WALK = "WALK"
    BICYCLE = "BICYCLE"
    METRO = "METRO"
    BUS = "BUS"
    PRIVATE_VEHICLE = "PRIVATE_VEHICLE"
    STILL = "STILL"
    UNKNOWN = "UNKNOWN"


#: Identity refinement applied before any transit matching.
DEFAULT_REFINEMENT = {
    ActivityClass.STILL: RefinedMode.STILL,
    ActivityClass.ON_FOOT: RefinedMode.WALK,
    ActivityClass.BICYCLE: RefinedMode.BICYCLE,
    ActivityClass.VEHICLE: RefinedMode.PRIVATE_VEHICLE,
    ActivityClass.UNKNOWN: RefinedMode.UNKNOWN,
}


@dataclass(frozen=True, slots=True)
class LocationFix:
    """A single GPS position sample.

    Attributes:
        ts: Seconds since epoch, UTC.
        lat: Latitude in degrees, [-90, 90].
        lon: Longitude in degrees, [-180, 180].
        accuracy_m: Radius of 68% confidence, meters, >= 0.
        speed_mps: Reported speed in m/s, optional.
    """

    ts: int
    lat: float
    lon: float
    accuracy_m: float
    speed_mps: Optional[float] = None

    def __post_init__(self) -> None:
        _check_coord(self.lat, self.lon)
        if not math.isfinite(self.accuracy_m) or self.accuracy_m < 0:
            raise DomainError(f"accuracy out of range: {self.accuracy_m}")
        if self.speed_mps is not None and self.speed_mps < 0:
            raise DomainError(f"speed out of range: {self.speed_mps}")

    def is_usable(self, accuracy_max_m: float = DEFAULT_ACCURACY_MAX_M) -> bool:
        """True unless the fix is flagged low-quality."""

        return self.accuracy_m <= accuracy_max_m


@dataclass(frozen=True, slots=True)
class ActivitySample:
    """One 20-second activity recognition result."""

    ts: int
    cls: ActivityClass
    confidence: int

    def __post_init__(self) -> None:
        if not 0 <= self.confidence <= 100:
            raise DomainError(f"confidence out of range: {self.confidence}")


@dataclass(frozen=True)
class TraceDay:
    """One pseudonymous device-day of fixes and activity samples."""

    pseudonym: str
    date: Date
    fixes: tuple[LocationFix, ...]
    samples: tuple[ActivitySample, ...]

    def __post_init__(self) -> None:
        for prev, cur in zip(self.fixes, self.fixes[1:]):
            if cur.ts <= prev.ts:
                raise DomainError("fix timestamps must strictly increase")
        for prev, cur in zip(self.samples, self.samples[1:]):
            if cur.ts < prev.ts:
                raise DomainError("sample timestamps must be nondecreasing")


@dataclass(frozen=True, slots=True)
class WindowEstimate:
    """Most probable activity class over one tumbling window."""

    window_start: int
    window_end: int
    cls: ActivityClass
    support: int
    mean_confidence: float
    sample_count: int


@dataclass(frozen=True)
class TripSegment:
    """A mode-labeled leg of a journey.

    carbon_g is always emission_factor(mode) * distance in km, computed by
    the trip builder; it is stored to keep segments self-describing.
    """

    start_ts: int
    end_ts: int
    mode: RefinedMode
    distance_m: float = 0.0
    path: tuple[tuple[float, float], ...] = ()
    carbon_g: float = 0.0
    origin_zone: Optional[str] = None
    dest_zone: Optional[str] = None

    def __post_init__(self) -> None:
        if self.start_ts >= self.end_ts:
            raise DomainError("segment start must precede end")
        if self.distance_m < 0 or self.carbon_g < 0:
            raise DomainError("distance and carbon must be nonnegative")

    @property
    def duration_s(self) -> int:
        return self.end_ts - self.start_ts


class StopKind(Enum):
    METRO = "METRO"
    BUS = "BUS"


@dataclass(frozen=True)
class TransitStop:
    stop_id: str
    kind: StopKind
    lat: float
    lon: float
    route_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class RouteShape:
    """An ordered sequence of stops plus the polyline the vehicle follows."""

    route_id: str
    kind: StopKind
    stop_ids: tuple[str, ...]
    polyline: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.stop_ids) < 2:
            raise DomainError(f"route {self.route_id} needs >= 2 stops")


@dataclass(frozen=True, slots=True)
class TimetableEntry:
    route_id: str
    first_departure_s: int
    last_departure_s: int
    headway_s: int

    def __post_init__(self) -> None:
        if self.headway_s <= 0:
            raise DomainError("headway must be positive")
        if self.first_departure_s > self.last_departure_s:
            raise DomainError("timetable window inverted")


@dataclass(frozen=True)
class Zone:
    """A closed, non-self-intersecting polygon used for OD analytics."""

    zone_id: str
    polygon: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.polygon) < 4 or self.polygon[0] != self.polygon[-1]:
            raise DomainError(f"zone {self.zone_id}: polygon must be closed with >= 3 vertices")


@dataclass(frozen=True)
class Trip:
    """An ordered run of segments between two long stationary periods."""

    trip_id: str
    pseudonym: str
    date: Date
    segments: tuple[TripSegment, ...]
    total_distance_m: float
    total_carbon_g: float

    @property
    def start_ts(self) -> int:
        return self.segments[0].start_ts

    @property
    def end_ts(self) -> int:
        return self.segments[-1].end_ts


def _check_coord(lat: float, lon: float) -> None:
    if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
        raise DomainError(f"lat out of range: {lat}")
    if not (math.isfinite(lon) and -180.0 <= lon <= 180.0):
        raise DomainError(f"lon out of range: {lon}")


def haversine_m(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in meters between two (lat, lon) points."""

    _check_coord(*a)
    _check_coord(*b)
    phi1 = math.radians(a[0])
    phi2 = math.radians(b[0])
    d_phi = math.radians(b[0] - a[0])
    d_lambda = math.radians(b[1] - a[1])
    h = math.sin(d_phi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(d_lambda / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def path_length_m(path: Sequence[tuple[float, float]]) -> float:
    """Sum of haversine distances over consecutive points."""

    return sum(haversine_m(p, q) for p, q in zip(path, path[1:]))


def _on_segment(p: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if cross != 0.0:
        return False
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def point_in_zone(p: tuple[float, float], zone: Zone) -> bool:
    """Even-odd ray-casting membership test; boundary points count inside."""

    _check_coord(*p)
    poly = zone.polygon
    for a, b in zip(poly, poly[1:]):
        if _on_segment(p, a, b):
            return True
    inside = False
    x, y = p[0], p[1]
    for a, b in zip(poly, poly[1:]):
        ax, ay = a
        bx, by = b
        if (ay > y) != (by > y):
            x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
            if x < x_cross:
                inside = not inside
    return inside


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_cross(a, b, c, d) -> bool:
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


def zones_overlap(z1: Zone, z2: Zone) -> bool:
    """True if two zones share interior area (edge crossing or containment)."""

    e1 = list(zip(z1.polygon, z1.polygon[1:]))
    e2 = list(zip(z2.polygon, z2.polygon[1:]))
    for a, b in e1:
        for c, d in e2:
            if _segments_cross(a, b, c, d):
                return True
    centroid1 = _centroid(z1)
    centroid2 = _centroid(z2)
    return point_in_zone(centroid1, z2) or point_in_zone(centroid2, z1)


def _centroid(zone: Zone) -> tuple[float, float]:
    pts = zone.polygon[:-1]
    return (sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts))


def zone_of(p: tuple[float, float], zones: Sequence[Zone]) -> Optional[str]:
    """First zone containing the point, or None."""

    for z in zones:
        if point_in_zone(p, z):
            return z.zone_id
    return None
