"""Transit geofencing: metro via GPS blackouts, bus via route corridors.

Vehicle spans are refined into Metro / Bus / PrivateVehicle:

* a long fix gap that starts while moving, with both endpoints near metro
  stations and a plausible implied speed, is a metro ride;
* a span whose fixes hug a bus route's polyline at bus-like speed inside
  the route's service window is a bus ride;
* everything else stays a private vehicle.

The dataset is built once and read-only afterwards; all operations here
are pure reads.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .model import (
    DEFAULT_REFINEMENT,
    ActivityClass,
    DomainError,
    LocationFix,
    RefinedMode,
    RouteShape,
    StopKind,
    TimetableEntry,
    TraceDay,
    TransitStop,
    TripSegment,
    WindowEstimate,
    haversine_m,
)
from .traceio import day_start_epoch_s

WALK_INTERCHANGE_M = 400.0


@dataclass(frozen=True)
class MatcherConfig:
    gap_min_s: int = 180
    station_radius_m: float = 300.0
    stop_corridor_m: float = 80.0
    bus_fix_fraction: float = 0.6
    bus_speed_mps: tuple[float, float] = (2.0, 12.0)
    metro_speed_mps: tuple[float, float] = (5.0, 20.0)
    poi_radius_m: float = 150.0
    accuracy_max_m: float = 100.0
    moving_speed_mps: float = 0.5
    moving_lookback_s: int = 60

    def __post_init__(self) -> None:
        for r in (self.station_radius_m, self.stop_corridor_m, self.poi_radius_m):
            if r <= 0:
                raise ValueError("radii must be positive")
        for lo, hi in (self.bus_speed_mps, self.metro_speed_mps):
            if lo > hi:
                raise ValueError("speed range empty")


class NotReason(Enum):
    NO_STATIONS = "NoStations"
    ENTRY_TOO_FAR = "EntryTooFar"
    EXIT_TOO_FAR = "ExitTooFar"
    SPEED_OUT_OF_RANGE = "SpeedOutOfRange"
    NO_ROUTES = "NoRoutes"
    TOO_FEW_FIXES = "TooFewFixes"
    CORRIDOR_FRACTION_LOW = "CorridorFractionLow"
    OUTSIDE_TIMETABLE = "OutsideTimetable"


@dataclass(frozen=True)
class MetroMatch:
    entry_stop: TransitStop
    exit_stop: TransitStop
    implied_speed_mps: float


@dataclass(frozen=True)
class NotMatch:
    reason: NotReason


@dataclass(frozen=True)
class BusMatch:
    route_id: str
    corridor_fraction: float
    mean_speed_mps: float


@dataclass(frozen=True)
class Gap:
    """A blackout between two consecutive usable fixes."""

    last_fix: LocationFix
    first_fix_after: LocationFix

    @property
    def duration_s(self) -> int:
        return self.first_fix_after.ts - self.last_fix.ts


class TransitDataset:
    """Static stops, route shapes, and timetables, indexed for matching."""

    def __init__(
        self,
        stops: Sequence[TransitStop],
        routes: Sequence[RouteShape],
        timetable: Sequence[TimetableEntry],
    ) -> None:
        self.stops = tuple(stops)
        self.routes = tuple(routes)
        self.timetable = tuple(timetable)
        self._stop_by_id = {s.stop_id: s for s in self.stops}
        if len(self._stop_by_id) != len(self.stops):
            raise DomainError("duplicate stop_id in dataset")
        route_ids = {r.route_id for r in self.routes}
        for t in self.timetable:
            if t.route_id not in route_ids:
                raise DomainError(f"timetable references unknown route {t.route_id}")
        for r in self.routes:
            for sid in r.stop_ids:
                if sid not in self._stop_by_id:
                    raise DomainError(f"route {r.route_id} references unknown stop {sid}")
        self._timetable_by_route = {t.route_id: t for t in self.timetable}

    def stop(self, stop_id: str) -> TransitStop:
        return self._stop_by_id[stop_id]

    def timetable_for(self, route_id: str) -> Optional[TimetableEntry]:
        return self._timetable_by_route.get(route_id)

    def metro_stations(self) -> list[TransitStop]:
        return [s for s in self.stops if s.kind is StopKind.METRO]

    def bus_routes(self) -> list[RouteShape]:
        return [r for r in self.routes if r.kind is StopKind.BUS]


def load_transit_dataset(text: str) -> TransitDataset:
    """Parse the line-delimited transit file.

    Lines: `S <stop_id> <METRO|BUS> <lat> <lon>`,
    `R <route_id> <METRO|BUS> <stop_id,...>`,
    `P <route_id> <lat:lon;...>`, `H <route_id> <HH:MM> <HH:MM> <headway_s>`.
    """

    stops: dict[str, tuple[StopKind, float, float]] = {}
    route_stops: dict[str, tuple[StopKind, tuple[str, ...]]] = {}
    polylines: dict[str, tuple[tuple[float, float], ...]] = {}
    timetable: list[TimetableEntry] = []

    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(" ")
        tag = parts[0]
        try:
            if tag == "S":
                stops[parts[1]] = (StopKind(parts[2]), float(parts[3]), float(parts[4]))
            elif tag == "R":
                route_stops[parts[1]] = (StopKind(parts[2]), tuple(parts[3].split(",")))
            elif tag == "P":
                pts = tuple(
                    (float(p.split(":")[0]), float(p.split(":")[1])) for p in parts[2].split(";")
                )
                polylines[parts[1]] = pts
            elif tag == "H":
                first = _parse_hhmm(parts[2])
                last = _parse_hhmm(parts[3])
                timetable.append(TimetableEntry(parts[1], first, last, int(parts[4])))
            else:
                raise DomainError(f"unknown tag {tag}")
        except (IndexError, ValueError) as exc:
            raise DomainError(f"transit file line {line_no}: {exc}") from None

    route_membership: dict[str, list[str]] = {sid: [] for sid in stops}
    for rid, (_, sids) in route_stops.items():
        for sid in sids:
            if sid in route_membership:
                route_membership[sid].append(rid)
    built_stops = [
        TransitStop(sid, kind, lat, lon, tuple(route_membership[sid]))
        for sid, (kind, lat, lon) in stops.items()
    ]
    built_routes = [
        RouteShape(rid, kind, sids, polylines.get(rid, ()))
        for rid, (kind, sids) in route_stops.items()
    ]
    return TransitDataset(built_stops, built_routes, timetable)


def _parse_hhmm(token: str) -> int:
    hh, mm = token.split(":")
    return int(hh) * 3600 + int(mm) * 60


def nearest_stop(
    p: tuple[float, float], stops: Sequence[TransitStop]
) -> Optional[tuple[TransitStop, float]]:
    best = None
    for s in stops:
        d = haversine_m(p, (s.lat, s.lon))
        if best is None or d < best[1]:
            best = (s, d)
    return best


def point_to_polyline_m(p: tuple[float, float], polyline: Sequence[tuple[float, float]]) -> float:
    """Min distance from a point to a polyline, local equirectangular approx."""

    lat0 = math.radians(p[0])
    kx = 111_194.9266 * math.cos(lat0)  # meters per degree lon at p
    ky = 111_194.9266
    px, py = p[1] * kx, p[0] * ky
    best = math.inf
    for a, b in zip(polyline, polyline[1:]):
        ax, ay = a[1] * kx, a[0] * ky
        bx, by = b[1] * kx, b[0] * ky
        dx, dy = bx - ax, by - ay
        if dx == 0 and dy == 0:
            d = math.hypot(px - ax, py - ay)
        else:
            t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)))
            d = math.hypot(px - (ax + t * dx), py - (ay + t * dy))
        best = min(best, d)
    if len(polyline) == 1:
        best = haversine_m(p, polyline[0])
    return best


def detect_gps_gaps(trace: TraceDay, cfg: MatcherConfig) -> list[Gap]:
    """Blackouts >= gap_min between usable fixes, entered while moving.

    "While moving" is operationalized as mean speed > 0.5 m/s over the
    60 s of usable fixes trailing the last fix before the gap.
    """

    usable = [f for f in trace.fixes if f.is_usable(cfg.accuracy_max_m)]
    gaps = []
    for i in range(len(usable) - 1):
        a, b = usable[i], usable[i + 1]
        if b.ts - a.ts >= cfg.gap_min_s and _trailing_speed(usable, i, cfg) > cfg.moving_speed_mps:
            gaps.append(Gap(a, b))
    return gaps


def _trailing_speed(usable: Sequence[LocationFix], idx: int, cfg: MatcherConfig) -> float:
    last = usable[idx]
    window = [f for f in usable[: idx + 1] if f.ts >= last.ts - cfg.moving_lookback_s]
    if len(window) >= 2 and window[-1].ts > window[0].ts:
        d = haversine_m((window[0].lat, window[0].lon), (window[-1].lat, window[-1].lon))
        return d / (window[-1].ts - window[0].ts)
    if last.speed_mps is not None:
        return last.speed_mps
    return 0.0


def infer_metro(gap: Gap, data: TransitDataset, cfg: MatcherConfig):
    """Metro test: both gap endpoints near stations, plausible implied speed."""

    stations = data.metro_stations()
    if not stations:
        return NotMatch(NotReason.NO_STATIONS)
    entry = nearest_stop((gap.last_fix.lat, gap.last_fix.lon), stations)
    if entry[1] > cfg.station_radius_m:
        return NotMatch(NotReason.ENTRY_TOO_FAR)
    exit_ = nearest_stop((gap.first_fix_after.lat, gap.first_fix_after.lon), stations)
    if exit_[1] > cfg.station_radius_m:
        return NotMatch(NotReason.EXIT_TOO_FAR)
    implied = haversine_m(
        (entry[0].lat, entry[0].lon), (exit_[0].lat, exit_[0].lon)
    ) / gap.duration_s
    lo, hi = cfg.metro_speed_mps
    if not lo <= implied <= hi:
        return NotMatch(NotReason.SPEED_OUT_OF_RANGE)
    return MetroMatch(entry[0], exit_[0], implied)


def infer_bus(
    fixes: Sequence[LocationFix], data: TransitDataset, cfg: MatcherConfig
):
    """Bus test: corridor fraction, mean speed, and service-window membership.

    `fixes` are the usable fixes of one candidate Vehicle span; timestamps
    are epoch seconds and the timetable check uses seconds-of-day.
    """

    routes = data.bus_routes()
    if not routes:
        return NotMatch(NotReason.NO_ROUTES)
    if len(fixes) < 5:
        return NotMatch(NotReason.TOO_FEW_FIXES)

    best = None  # (fraction, -mean_dist, route)
    for route in routes:
        if not route.polyline:
            continue
        dists = [point_to_polyline_m((f.lat, f.lon), route.polyline) for f in fixes]
        fraction = sum(1 for d in dists if d <= cfg.stop_corridor_m) / len(dists)
        mean_dist = sum(dists) / len(dists)
        key = (fraction, -mean_dist)
        if best is None or key > best[0]:
            best = (key, route)
    if best is None:
        return NotMatch(NotReason.NO_ROUTES)
    (fraction, _), route = best
    if fraction < cfg.bus_fix_fraction:
        return NotMatch(NotReason.CORRIDOR_FRACTION_LOW)

    dist = sum(
        haversine_m((a.lat, a.lon), (b.lat, b.lon)) for a, b in zip(fixes, fixes[1:])
    )
    duration = fixes[-1].ts - fixes[0].ts
    mean_speed = dist / duration if duration > 0 else 0.0
    lo, hi = cfg.bus_speed_mps
    if not lo <= mean_speed <= hi:
        return NotMatch(NotReason.SPEED_OUT_OF_RANGE)

    entry = data.timetable_for(route.route_id)
    if entry is not None:
        start_of_day = fixes[0].ts % 86400
        if not entry.first_departure_s <= start_of_day <= entry.last_departure_s + entry.headway_s:
            return NotMatch(NotReason.OUTSIDE_TIMETABLE)
    return BusMatch(route.route_id, fraction, mean_speed)


def poi_context(
    fix: LocationFix, data: TransitDataset, cfg: MatcherConfig
) -> list[tuple[TransitStop, float]]:
    """Stops within poi_radius of the fix, nearest first."""

    out = []
    for s in data.stops:
        d = haversine_m((fix.lat, fix.lon), (s.lat, s.lon))
        if d <= cfg.poi_radius_m:
            out.append((s, d))
    out.sort(key=lambda sd: (sd[1], sd[0].stop_id))
    return out


def route_feasible(
    origin: tuple[float, float],
    dest: tuple[float, float],
    mode: RefinedMode,
    data: TransitDataset,
    cfg: MatcherConfig,
) -> bool:
    """Pure reachability on the offline transit graph.

    Nodes are stops; consecutive stops on a route are edges of that route's
    kind; stops within 400 m of each other get walking edges. Metro asks
    for metro edges only, Bus for bus edges only, anything else may use all
    edges including walking interchanges.
    """

    if not data.stops:
        return False

    adj: dict[str, list[tuple[str, StopKind | None]]] = {s.stop_id: [] for s in data.stops}
    for r in data.routes:
        for a, b in zip(r.stop_ids, r.stop_ids[1:]):
            adj[a].append((b, r.kind))
            adj[b].append((a, r.kind))
    stops = list(data.stops)
    for i, a in enumerate(stops):
        for b in stops[i + 1 :]:
            if haversine_m((a.lat, a.lon), (b.lat, b.lon)) <= WALK_INTERCHANGE_M:
                adj[a.stop_id].append((b.stop_id, None))
                adj[b.stop_id].append((a.stop_id, None))

    if mode is RefinedMode.METRO:
        allowed = lambda kind: kind is StopKind.METRO
    elif mode is RefinedMode.BUS:
        allowed = lambda kind: kind is StopKind.BUS
    else:
        allowed = lambda kind: True

    src = {s.stop_id for s in data.stops if haversine_m(origin, (s.lat, s.lon)) <= cfg.station_radius_m}
    dst = {s.stop_id for s in data.stops if haversine_m(dest, (s.lat, s.lon)) <= cfg.station_radius_m}
    if not src or not dst:
        return False

    seen = set(src)
    queue = deque(src)
    while queue:
        node = queue.popleft()
        if node in dst:
            return True
        for nxt, kind in adj[node]:
            if nxt not in seen and allowed(kind):
                seen.add(nxt)
                queue.append(nxt)
    return False


def refine_segments(
    window_estimates: Sequence[WindowEstimate],
    trace: TraceDay,
    data: TransitDataset,
    cfg: MatcherConfig,
) -> list[TripSegment]:
    """Turn the window timeline into contiguous, mode-refined segments.

    Contiguous runs of one class become provisional segments. Vehicle runs
    overlapping a metro-inferred gap become Metro (GPS-silent Unknown runs
    adjacent to them are merged in); remaining Vehicle runs are tested
    against bus routes and fall back to PrivateVehicle. Every input window
    is covered by exactly one output segment.
    """

    if not window_estimates:
        return []

    runs: list[list[object]] = []  # [start, end, ActivityClass]
    for w in window_estimates:
        if runs and runs[-1][2] is w.cls:
            runs[-1][1] = w.window_end
        else:
            runs.append([w.window_start, w.window_end, w.cls])

    gaps = detect_gps_gaps(trace, cfg)
    metro_gaps = []
    for g in gaps:
        m = infer_metro(g, data, cfg)
        if isinstance(m, MetroMatch):
            metro_gaps.append((g, m))

    usable = [f for f in trace.fixes if f.is_usable(cfg.accuracy_max_m)]

    labeled: list[list[object]] = []  # [start, end, RefinedMode, MetroMatch|BusMatch|None]
    for start, end, cls in runs:
        if cls is ActivityClass.VEHICLE:
            overlap = _overlapping_metro(start, end, metro_gaps)
            if overlap is not None:
                labeled.append([start, end, RefinedMode.METRO, overlap[1]])
                continue
            span_fixes = [f for f in usable if start <= f.ts < end]
            bus = infer_bus(span_fixes, data, cfg)
            if isinstance(bus, BusMatch):
                labeled.append([start, end, RefinedMode.BUS, bus])
            else:
                labeled.append([start, end, RefinedMode.PRIVATE_VEHICLE, None])
        else:
            labeled.append([start, end, DEFAULT_REFINEMENT[cls], None])

    # GPS-silent Unknown runs adjacent to a Metro segment belong to the ride.
    merged: list[list[object]] = []
    for seg in labeled:
        if (
            merged
            and seg[2] is RefinedMode.UNKNOWN
            and merged[-1][2] is RefinedMode.METRO
            and not any(seg[0] <= f.ts < seg[1] for f in usable)
        ):
            merged[-1][1] = seg[1]
            continue
        if (
            merged
            and merged[-1][2] is RefinedMode.UNKNOWN
            and seg[2] is RefinedMode.METRO
            and not any(merged[-1][0] <= f.ts < merged[-1][1] for f in usable)
        ):
            seg = [merged[-1][0], seg[1], seg[2], seg[3]]
            merged.pop()
        if merged and merged[-1][2] is seg[2]:
            merged[-1][1] = seg[1]
            merged[-1][3] = merged[-1][3] or seg[3]
        else:
            merged.append(list(seg))

    out = []
    for start, end, mode, match in merged:
        path = tuple((f.lat, f.lon) for f in usable if start <= f.ts < end)
        if mode is RefinedMode.METRO and isinstance(match, MetroMatch) and len(path) < 2:
            path = (
                (match.entry_stop.lat, match.entry_stop.lon),
                (match.exit_stop.lat, match.exit_stop.lon),
            )
        out.append(TripSegment(start_ts=start, end_ts=end, mode=mode, path=path))
    return out


def _overlapping_metro(start: int, end: int, metro_gaps) -> Optional[tuple]:
    for g, m in metro_gaps:
        if g.last_fix.ts < end and g.first_fix_after.ts > start:
            return (g, m)
    return None
