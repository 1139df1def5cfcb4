"""Seeded synthetic trace generator with known ground-truth mode labels.

Stands in for the Android client: every scenario describes a day's legs
(true mode, duration, speed, geometry over the toy transit network) and
the generator emits a trace at the native 20 s cadence. Metro legs emit no
fixes between entry and exit station, reproducing the GPS blackout the
matcher keys on; a `metrosparse:` leg emits sparse 150 m-accuracy fixes
instead to exercise the accuracy-degradation path.

Determinism: a self-contained xorshift64* PRNG (documented in the README)
with one stream per (scenario, seed) and a fixed draw order, so identical
inputs produce byte-identical traces on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date, timedelta
from importlib import resources
from typing import Optional, Sequence

from .model import (
    ActivityClass,
    ActivitySample,
    DomainError,
    LocationFix,
    RefinedMode,
    TraceDay,
    haversine_m,
    path_length_m,
)
from .traceio import day_start_epoch_s
from .transit import TransitDataset, load_transit_dataset

SAMPLE_PERIOD_S = 20
DAY_START_OFFSET_S = 36_000  # traces start at 10:00 UTC
BASE_DATE = Date(2026, 3, 2)

#: Plausibility ranges asserted on every generated leg's effective speed.
SPEED_RANGES = {
    RefinedMode.WALK: (0.5, 2.5),
    RefinedMode.BICYCLE: (2.0, 8.0),
    RefinedMode.BUS: (2.0, 12.0),
    RefinedMode.METRO: (5.0, 20.0),
    RefinedMode.PRIVATE_VEHICLE: (3.0, 40.0),
    RefinedMode.STILL: (0.0, 0.49),
}

_TO_ACTIVITY = {
    RefinedMode.WALK: ActivityClass.ON_FOOT,
    RefinedMode.BICYCLE: ActivityClass.BICYCLE,
    RefinedMode.METRO: ActivityClass.VEHICLE,
    RefinedMode.BUS: ActivityClass.VEHICLE,
    RefinedMode.PRIVATE_VEHICLE: ActivityClass.VEHICLE,
    RefinedMode.STILL: ActivityClass.STILL,
}

_MASK64 = (1 << 64) - 1


class Xorshift64Star:
    """xorshift64* with a splitmix64-seeded state; cross-language stable."""

    def __init__(self, seed: int) -> None:
        self.state = _splitmix64(seed & _MASK64) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        s = self.state
        s ^= (s >> 12)
        s = (s ^ (s << 25)) & _MASK64
        s ^= (s >> 27)
        self.state = s
        return (s * 0x2545F4914F6CDD1D) & _MASK64

    def random(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""

        return (self.next_u64() >> 11) / (1 << 53)

    def gauss(self, mu: float, sigma: float) -> float:
        """Box-Muller; always consumes exactly two uniforms."""

        u1 = self.random()
        u2 = self.random()
        while u1 == 0.0:
            u1 = self.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def bytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out.extend(self.next_u64().to_bytes(8, "big"))
        return bytes(out[:n])


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode():
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


@dataclass(frozen=True)
class Noise:
    fix_dropout: float = 0.0
    accuracy_sigma_m: float = 0.0
    sample_error_rate: float = 0.0


@dataclass(frozen=True)
class Leg:
    mode: RefinedMode
    duration_s: int
    speed_mps: float
    path_spec: str

    def __post_init__(self) -> None:
        if self.duration_s % 120 != 0:
            raise DomainError("leg durations must be multiples of the 120 s window")


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    legs: tuple[Leg, ...]
    noise: Noise = Noise()


@dataclass(frozen=True)
class TruthSpan:
    start_ts: int
    end_ts: int
    mode: RefinedMode


def parse_scenario(scenario_id: str, text: str) -> Scenario:
    """Parse `L <mode> <duration> <speed> <path>` / `N <dropout> <sigma> <err>` lines."""

    legs = []
    noise = Noise()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(" ")
        if parts[0] == "L":
            legs.append(Leg(RefinedMode(parts[1]), int(parts[2]), float(parts[3]), parts[4]))
        elif parts[0] == "N":
            noise = Noise(float(parts[1]), float(parts[2]), float(parts[3]))
        else:
            raise DomainError(f"unknown scenario line tag: {parts[0]}")
    if not legs:
        raise DomainError("scenario has no legs")
    return Scenario(scenario_id, tuple(legs), noise)


def builtin_scenario(scenario_id: str) -> Scenario:
    text = resources.files("mobiliscope.data").joinpath(f"scenarios/{scenario_id}.scn").read_text()
    return parse_scenario(scenario_id, text)


def builtin_transit_dataset() -> TransitDataset:
    text = resources.files("mobiliscope.data").joinpath("transit_bcn_toy.txt").read_text()
    return load_transit_dataset(text)


@dataclass(frozen=True)
class _ResolvedLeg:
    leg: Leg
    path: tuple[tuple[float, float], ...]
    emit_fixes: bool
    sparse_low_accuracy: bool


def _resolve_leg(leg: Leg, data: TransitDataset) -> _ResolvedLeg:
    kind, _, rest = leg.path_spec.partition(":")
    if kind == "line":
        a, b = rest.split("->")
        return _ResolvedLeg(leg, (_parse_pt(a), _parse_pt(b)), True, False)
    if kind in ("at", "atnofix"):
        return _ResolvedLeg(leg, (_parse_pt(rest),), kind == "at", False)
    if kind in ("metro", "metrosparse"):
        a, b = rest.split(":")
        try:
            sa, sb = data.stop(a), data.stop(b)
        except KeyError as exc:
            raise DomainError(f"unknown station in {leg.path_spec}") from exc
        return _ResolvedLeg(
            leg, ((sa.lat, sa.lon), (sb.lat, sb.lon)), kind == "metrosparse", kind == "metrosparse"
        )
    if kind == "route":
        rid, from_id, to_id = rest.split(":")
        route = next((r for r in data.routes if r.route_id == rid), None)
        if route is None:
            raise DomainError(f"unknown route {rid}")
        try:
            sa, sb = data.stop(from_id), data.stop(to_id)
        except KeyError as exc:
            raise DomainError(f"unknown stop in {leg.path_spec}") from exc
        ia = _nearest_vertex(route.polyline, (sa.lat, sa.lon))
        ib = _nearest_vertex(route.polyline, (sb.lat, sb.lon))
        pts = route.polyline[ia : ib + 1] if ia <= ib else tuple(reversed(route.polyline[ib : ia + 1]))
        return _ResolvedLeg(leg, pts, True, False)
    raise DomainError(f"unknown path spec: {leg.path_spec}")


def _parse_pt(token: str) -> tuple[float, float]:
    lat, lon = token.split(",")
    return (float(lat), float(lon))


def _nearest_vertex(polyline: Sequence[tuple[float, float]], p: tuple[float, float]) -> int:
    return min(range(len(polyline)), key=lambda i: haversine_m(polyline[i], p))


def _point_along(path: Sequence[tuple[float, float]], dist_m: float) -> tuple[float, float]:
    if len(path) == 1:
        return path[0]
    remaining = dist_m
    for a, b in zip(path, path[1:]):
        hop = haversine_m(a, b)
        if remaining <= hop or hop == 0.0:
            t = 0.0 if hop == 0.0 else remaining / hop
            return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        remaining -= hop
    return path[-1]


def trace_seed(base_seed: int, scenario_id: str, seed_index: int) -> int:
    return _splitmix64((base_seed & _MASK64) ^ _fnv1a64(scenario_id) ^ (seed_index * 0x9E3779B9))


def generate(
    scenario: Scenario,
    seed: int,
    data: Optional[TransitDataset] = None,
    date: Date = BASE_DATE,
    noise: Optional[Noise] = None,
) -> tuple[TraceDay, list[TruthSpan]]:
    """Produce one deterministic trace day plus its ground-truth spans."""

    data = data or builtin_transit_dataset()
    noise = noise if noise is not None else scenario.noise
    rng = Xorshift64Star(seed)
    pseudonym = rng.bytes(16).hex()

    resolved = [_resolve_leg(leg, data) for leg in scenario.legs]
    t = day_start_epoch_s(date) + DAY_START_OFFSET_S
    fixes: list[LocationFix] = []
    samples: list[ActivitySample] = []
    truth: list[TruthSpan] = []

    for r in resolved:
        leg = r.leg
        leg_start, leg_end = t, t + leg.duration_s
        pathlen = path_length_m(r.path)
        eff_speed = pathlen / leg.duration_s
        lo, hi = SPEED_RANGES[leg.mode]
        if not lo <= eff_speed <= hi:
            raise DomainError(
                f"{scenario.scenario_id}: {leg.mode.value} leg speed {eff_speed:.2f} m/s "
                f"outside [{lo}, {hi}]"
            )

        true_cls = _TO_ACTIVITY[leg.mode]
        for ts in range(leg_start, leg_end, SAMPLE_PERIOD_S):
            cls = true_cls
            if noise.sample_error_rate > 0 and rng.random() < noise.sample_error_rate:
                others = [c for c in ActivityClass if c is not true_cls]
                cls = others[int(rng.random() * len(others))]
            if cls is true_cls:
                conf = 60 + int(rng.random() * 41)
            else:
                conf = 20 + int(rng.random() * 41)
            samples.append(ActivitySample(ts, cls, conf))

        if r.emit_fixes:
            period = 60 if r.sparse_low_accuracy else SAMPLE_PERIOD_S
            for ts in range(leg_start, leg_end, period):
                if noise.fix_dropout > 0 and rng.random() < noise.fix_dropout:
                    continue
                pos = _point_along(r.path, eff_speed * (ts - leg_start))
                if r.sparse_low_accuracy:
                    acc = 150.0
                else:
                    acc = max(1.0, rng.gauss(10.0, noise.accuracy_sigma_m)) if noise.accuracy_sigma_m > 0 else 10.0
                # Quantize to the trace format's precision so encoding is lossless.
                fixes.append(
                    LocationFix(
                        ts, round(pos[0], 7), round(pos[1], 7), round(acc, 1), round(eff_speed, 2)
                    )
                )

        if truth and truth[-1].mode is leg.mode:
            truth[-1] = TruthSpan(truth[-1].start_ts, leg_end, leg.mode)
        else:
            truth.append(TruthSpan(leg_start, leg_end, leg.mode))
        t = leg_end

    return TraceDay(pseudonym, date, tuple(fixes), tuple(samples)), truth


DEFAULT_SUITE: tuple[tuple[str, int], ...] = (
    ("S-WALK", 7),
    ("S-BIKE", 7),
    ("S-CAR", 6),
    ("S-BUS", 7),
    ("S-METRO", 7),
    ("S-MIXED", 6),
    ("S-IDLE-GAP", 5),
    ("S-STILL", 5),
)


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    scenario_id: str
    seed_index: int
    trace: TraceDay
    truth: list[TruthSpan]


def corpus(
    suite: Sequence[tuple[str, int]] = DEFAULT_SUITE,
    base_seed: int = 42,
    data: Optional[TransitDataset] = None,
    noise: Optional[Noise] = None,
) -> list[CorpusEntry]:
    """Generate the full fixture corpus (50 traces with the default suite)."""

    data = data or builtin_transit_dataset()
    entries = []
    for scenario_id, n_seeds in suite:
        scenario = builtin_scenario(scenario_id)
        for i in range(n_seeds):
            date = BASE_DATE + timedelta(days=i % 5)
            seed = trace_seed(base_seed, scenario_id, i)
            trace, truth = generate(scenario, seed, data, date, noise)
            entries.append(CorpusEntry(f"{scenario_id}-{i:02d}", scenario_id, i, trace, truth))
    return entries


def manifest_text(entries: Sequence[CorpusEntry]) -> str:
    """Manifest: one `M` line per trace followed by its `G` truth spans."""

    lines = []
    for e in entries:
        lines.append(
            f"M {e.name}.trace {e.scenario_id} {e.seed_index} {e.trace.pseudonym} {e.trace.date.isoformat()}"
        )
        for span in e.truth:
            lines.append(f"G {span.start_ts} {span.end_ts} {span.mode.value}")
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> list[tuple[str, str, int, str, Date, list[TruthSpan]]]:
    """Inverse of manifest_text; returns (file, scenario, seed, pseudonym, date, spans)."""

    out = []
    for line in text.splitlines():
        parts = line.split(" ")
        if parts[0] == "M":
            out.append((parts[1], parts[2], int(parts[3]), parts[4], Date.fromisoformat(parts[5]), []))
        elif parts[0] == "G":
            out[-1][5].append(TruthSpan(int(parts[1]), int(parts[2]), RefinedMode(parts[3])))
        else:
            raise DomainError(f"unknown manifest tag: {parts[0]}")
    return out
