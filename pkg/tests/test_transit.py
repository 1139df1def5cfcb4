from collections import deque
from dataclasses import replace
from datetime import date as Date

import pytest

from mobiliscope.estimator import EstimatorConfig, windows
from mobiliscope.model import (
    ActivityClass,
    ActivitySample,
    LocationFix,
    RefinedMode,
    TraceDay,
)
from mobiliscope.simulator import builtin_scenario, generate
from mobiliscope.traceio import day_start_epoch_s
from mobiliscope.transit import (
    BusMatch,
    Gap,
    MatcherConfig,
    MetroMatch,
    NotMatch,
    NotReason,
    detect_gps_gaps,
    infer_bus,
    infer_metro,
    point_to_polyline_m,
    poi_context,
    refine_segments,
    route_feasible,
)

CFG = MatcherConfig()
DAY = Date(2026, 3, 2)
T0 = day_start_epoch_s(DAY) + 36_000


def mk_trace(fixes, samples=()):
    return TraceDay("a" * 32, DAY, tuple(fixes), tuple(samples))


def moving_fixes(start_ts, n, lat0=41.38, lon0=2.12, speed_deg=0.0002):
    return [
        LocationFix(start_ts + 20 * i, lat0, lon0 + speed_deg * i, 10.0, 1.5) for i in range(n)
    ]


class TestDetectGaps:
    def test_continuous_coverage_no_gaps(self):
        assert detect_gps_gaps(mk_trace(moving_fixes(T0, 100)), CFG) == []

    def test_gap_while_moving(self):
        before = moving_fixes(T0, 10)
        after = moving_fixes(before[-1].ts + 600, 10, lon0=2.2)
        gaps = detect_gps_gaps(mk_trace(before + after), CFG)
        assert len(gaps) == 1
        assert gaps[0].duration_s == 600

    def test_no_gap_when_stationary(self):
        before = [LocationFix(T0 + 20 * i, 41.38, 2.12, 10.0, 0.0) for i in range(10)]
        after = [LocationFix(T0 + 180 + 600 + 20 * i, 41.38, 2.12, 10.0, 0.0) for i in range(10)]
        assert detect_gps_gaps(mk_trace(before + after), CFG) == []

    def test_low_quality_fixes_not_usable(self):
        # A 150 m-accuracy fix inside the silence must not break the gap.
        before = moving_fixes(T0, 10)
        noise = [LocationFix(before[-1].ts + 300, 41.38, 2.15, 150.0, 1.5)]
        after = moving_fixes(before[-1].ts + 600, 10, lon0=2.2)
        gaps = detect_gps_gaps(mk_trace(before + noise + after), CFG)
        assert len(gaps) == 1
        assert gaps[0].duration_s == 600

    def test_fewer_than_two_usable_fixes(self):
        assert detect_gps_gaps(mk_trace([LocationFix(T0, 41.38, 2.12, 10.0, 1.0)]), CFG) == []


class TestInferMetro:
    def mk_gap(self, entry, exit_, duration):
        last = LocationFix(T0, entry[0], entry[1], 10.0, 1.5)
        first = LocationFix(T0 + duration, exit_[0], exit_[1], 10.0, 1.5)
        return Gap(last, first)

    def test_metro_detected(self, transit):
        # Near MS1, exit near MS4 (~3 km apart), plausible duration.
        gap = self.mk_gap((41.3801, 2.1201), (41.3801, 2.1559), 380)
        m = infer_metro(gap, transit, CFG)
        assert isinstance(m, MetroMatch)
        assert (m.entry_stop.stop_id, m.exit_stop.stop_id) == ("MS1", "MS4")
        assert 5.0 <= m.implied_speed_mps <= 20.0

    def test_entry_too_far(self, transit):
        gap = self.mk_gap((41.45, 2.2), (41.3801, 2.1559), 380)
        assert infer_metro(gap, transit, CFG) == NotMatch(NotReason.ENTRY_TOO_FAR)

    def test_exit_too_far(self, transit):
        gap = self.mk_gap((41.3801, 2.1201), (41.45, 2.2), 380)
        assert infer_metro(gap, transit, CFG) == NotMatch(NotReason.EXIT_TOO_FAR)

    def test_speed_out_of_range(self, transit):
        # Stations resolved but implied speed ~0.3 m/s (phone off at home).
        gap = self.mk_gap((41.3801, 2.1201), (41.3801, 2.1559), 10_000)
        assert infer_metro(gap, transit, CFG) == NotMatch(NotReason.SPEED_OUT_OF_RANGE)

    def test_no_stations(self, transit):
        from mobiliscope.transit import TransitDataset

        empty = TransitDataset([], [], [])
        gap = self.mk_gap((41.3801, 2.1201), (41.3801, 2.1559), 380)
        assert infer_metro(gap, empty, CFG) == NotMatch(NotReason.NO_STATIONS)

    def test_monotone_in_station_radius(self, transit):
        gap = self.mk_gap((41.3802, 2.1203), (41.3802, 2.1557), 380)
        small = replace(CFG, station_radius_m=50.0)
        big = replace(CFG, station_radius_m=1000.0)
        if isinstance(infer_metro(gap, transit, small), MetroMatch):
            assert isinstance(infer_metro(gap, transit, big), MetroMatch)
        assert isinstance(infer_metro(gap, transit, big), MetroMatch)


class TestInferBus:
    def bus_fixes(self, start_lon=2.1250, end_lon=2.1550, n=19, lat=41.39, start_ts=None):
        start_ts = T0 if start_ts is None else start_ts
        step = (end_lon - start_lon) / (n - 1)
        return [
            LocationFix(start_ts + 20 * i, lat, start_lon + step * i, 10.0, 7.0)
            for i in range(n)
        ]

    def test_bus_detected(self, transit):
        m = infer_bus(self.bus_fixes(), transit, CFG)
        assert isinstance(m, BusMatch)
        assert m.route_id == "B1"
        assert m.corridor_fraction >= CFG.bus_fix_fraction

    def test_corridor_fraction_low(self, transit):
        far = [
            LocationFix(T0 + 20 * i, 41.30, 2.05 + 0.0008 * i, 10.0, 7.0) for i in range(19)
        ]
        assert infer_bus(far, transit, CFG) == NotMatch(NotReason.CORRIDOR_FRACTION_LOW)

    def test_outside_timetable(self, transit):
        # Matching corridor but the segment starts at 03:00 (service 06:00+).
        night = day_start_epoch_s(DAY) + 3 * 3600
        m = infer_bus(self.bus_fixes(start_ts=night), transit, CFG)
        assert m == NotMatch(NotReason.OUTSIDE_TIMETABLE)

    def test_speed_out_of_range(self, transit):
        crawl = [
            LocationFix(T0 + 300 * i, 41.39, 2.1250 + 0.00001 * i, 10.0, 0.1) for i in range(6)
        ]
        assert infer_bus(crawl, transit, CFG) == NotMatch(NotReason.SPEED_OUT_OF_RANGE)

    def test_too_few_fixes(self, transit):
        assert infer_bus(self.bus_fixes()[:4], transit, CFG) == NotMatch(NotReason.TOO_FEW_FIXES)

    def test_no_routes(self, transit):
        from mobiliscope.transit import TransitDataset

        empty = TransitDataset([], [], [])
        assert infer_bus(self.bus_fixes(), empty, CFG) == NotMatch(NotReason.NO_ROUTES)


class TestPoiContext:
    def test_exact_station_coordinates(self, transit):
        ms1 = transit.stop("MS1")
        fix = LocationFix(T0, ms1.lat, ms1.lon, 10.0)
        out = poi_context(fix, transit, CFG)
        assert out[0][0].stop_id == "MS1"
        assert out[0][1] == 0.0

    def test_out_of_radius(self, transit):
        fix = LocationFix(T0, 41.5, 2.5, 10.0)
        assert poi_context(fix, transit, CFG) == []

    def test_sorted_by_distance(self, transit):
        # Between MS1 and MS2, closer to MS1: haversine oracle fixes the order.
        fix = LocationFix(T0, 41.38, 2.1210, 10.0)
        out = poi_context(fix, transit, replace(CFG, poi_radius_m=2000.0))
        dists = [d for _, d in out]
        assert dists == sorted(dists)
        assert out[0][0].stop_id == "MS1"


def bfs_oracle(transit, allowed_kinds, src_ids, dst_ids):
    adj = {s.stop_id: set() for s in transit.stops}
    for r in transit.routes:
        if r.kind.value in allowed_kinds:
            for a, b in zip(r.stop_ids, r.stop_ids[1:]):
                adj[a].add(b)
                adj[b].add(a)
    seen, q = set(src_ids), deque(src_ids)
    while q:
        n = q.popleft()
        if n in dst_ids:
            return True
        for m in adj[n]:
            if m not in seen:
                seen.add(m)
                q.append(m)
    return False


class TestRouteFeasible:
    def test_same_metro_line(self, transit):
        ms1, ms4 = transit.stop("MS1"), transit.stop("MS4")
        assert route_feasible((ms1.lat, ms1.lon), (ms4.lat, ms4.lon), RefinedMode.METRO, transit, CFG)

    def test_far_origin(self, transit):
        assert not route_feasible((41.9, 2.9), (41.38, 2.156), RefinedMode.METRO, transit, CFG)

    def test_interchange_between_lines(self, transit):
        # MS1 (line M1) to MS8 (line M2) via the MS2 interchange.
        ms1, ms8 = transit.stop("MS1"), transit.stop("MS8")
        got = route_feasible((ms1.lat, ms1.lon), (ms8.lat, ms8.lon), RefinedMode.METRO, transit, CFG)
        assert got == bfs_oracle(transit, {"METRO"}, {"MS1"}, {"MS8"})
        assert got

    def test_mode_restriction(self, transit):
        ms1, ms4 = transit.stop("MS1"), transit.stop("MS4")
        assert not route_feasible((ms1.lat, ms1.lon), (ms4.lat, ms4.lon), RefinedMode.BUS, transit, CFG)

    def test_empty_dataset(self):
        from mobiliscope.transit import TransitDataset

        assert not route_feasible((41.38, 2.12), (41.38, 2.15), RefinedMode.UNKNOWN, TransitDataset([], [], []), CFG)


class TestRefineSegments:
    def run_scenario(self, scenario_id, transit, seed=3):
        trace, truth = generate(builtin_scenario(scenario_id), seed, transit)
        est = windows(trace, EstimatorConfig())
        segments = refine_segments(est, trace, transit, CFG)
        return segments, truth

    def test_metro_scenario(self, transit):
        segments, truth = self.run_scenario("S-METRO", transit)
        assert [s.mode for s in segments] == [RefinedMode.WALK, RefinedMode.METRO, RefinedMode.WALK]
        assert [(s.start_ts, s.end_ts) for s in segments] == [
            (t.start_ts, t.end_ts) for t in truth
        ]

    def test_bus_scenario(self, transit):
        segments, _ = self.run_scenario("S-BUS", transit)
        assert [s.mode for s in segments] == [RefinedMode.WALK, RefinedMode.BUS, RefinedMode.WALK]

    def test_all_still(self, transit):
        segments, _ = self.run_scenario("S-STILL", transit)
        assert [s.mode for s in segments] == [RefinedMode.STILL]

    def test_coverage_tiles_window_span(self, transit, fixture_corpus):
        for e in fixture_corpus:
            est = windows(e.trace, EstimatorConfig())
            segments = refine_segments(est, e.trace, transit, CFG)
            assert segments[0].start_ts == est[0].window_start
            assert segments[-1].end_ts == est[-1].window_end
            for a, b in zip(segments, segments[1:]):
                assert a.end_ts == b.start_ts

    def test_empty_windows(self, transit):
        assert refine_segments([], mk_trace([]), transit, CFG) == []


def test_point_to_polyline_matches_haversine_at_vertex(transit):
    from mobiliscope.model import haversine_m

    b1 = next(r for r in transit.routes if r.route_id == "B1")
    p = (41.3905, 2.1250)
    d = point_to_polyline_m(p, b1.polyline)
    assert d == pytest.approx(haversine_m(p, b1.polyline[0]), rel=0.01)
