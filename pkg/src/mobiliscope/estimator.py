"""Windowed majority estimation over the 20-second activity sample stream.

Samples arrive nominally every 20 s; every 2 minutes the most probable
class among the last samples is emitted. Unknown samples are excluded from
the vote unless the whole window is Unknown. Ties are broken first by the
higher mean confidence of the tied classes, then by a fixed priority order
(Vehicle > Bicycle > OnFoot > Still).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import (
    DEFAULT_ACCURACY_MAX_M,
    ActivityClass,
    ActivitySample,
    TraceDay,
    WindowEstimate,
)

DEFAULT_TIE_PRIORITY = (
    ActivityClass.VEHICLE,
    ActivityClass.BICYCLE,
    ActivityClass.ON_FOOT,
    ActivityClass.STILL,
)


class NoDataError(ValueError):
    """Raised when an estimate is requested over an empty window."""


@dataclass(frozen=True)
class EstimatorConfig:
    sampling_period_s: int = 20
    window_s: int = 120
    tie_priority: tuple[ActivityClass, ...] = DEFAULT_TIE_PRIORITY
    accuracy_max_m: float = DEFAULT_ACCURACY_MAX_M

    def __post_init__(self) -> None:
        if self.window_s % self.sampling_period_s != 0:
            raise ValueError("window length must be a multiple of the sampling period")


def window_estimate(
    samples: Sequence[ActivitySample],
    cfg: EstimatorConfig,
    window_start: int,
    window_end: int,
) -> WindowEstimate:
    """Plurality class of one window's samples.

    Raises:
        NoDataError: if the sample list is empty.
    """

    if not samples:
        raise NoDataError("empty window")

    votable = [s for s in samples if s.cls is not ActivityClass.UNKNOWN]
    if not votable:
        mean_conf = sum(s.confidence for s in samples) / len(samples)
        return WindowEstimate(
            window_start, window_end, ActivityClass.UNKNOWN, len(samples), mean_conf, len(samples)
        )

    counts: dict[ActivityClass, list[ActivitySample]] = {}
    for s in votable:
        counts.setdefault(s.cls, []).append(s)
    top = max(len(v) for v in counts.values())
    tied = [c for c, v in counts.items() if len(v) == top]
    if len(tied) > 1:
        def mean_conf_of(c: ActivityClass) -> float:
            group = counts[c]
            return sum(s.confidence for s in group) / len(group)

        best = max(mean_conf_of(c) for c in tied)
        tied = [c for c in tied if mean_conf_of(c) == best]
        if len(tied) > 1:
            tied.sort(key=cfg.tie_priority.index)
    winner = tied[0]
    group = counts[winner]
    mean_conf = sum(s.confidence for s in group) / len(group)
    return WindowEstimate(window_start, window_end, winner, len(group), mean_conf, len(samples))


def empty_window(window_start: int, window_end: int) -> WindowEstimate:
    """The explicit marker emitted for a window with no samples."""

    return WindowEstimate(window_start, window_end, ActivityClass.UNKNOWN, 0, 0.0, 0)


def window_grid(trace: TraceDay, cfg: EstimatorConfig) -> list[tuple[int, int]]:
    """Tumbling window bounds aligned to the first sample timestamp."""

    if not trace.samples:
        return []
    t0 = trace.samples[0].ts
    last = trace.samples[-1].ts
    n = (last - t0) // cfg.window_s + 1
    return [(t0 + i * cfg.window_s, t0 + (i + 1) * cfg.window_s) for i in range(n)]


def windows(trace: TraceDay, cfg: EstimatorConfig) -> list[WindowEstimate]:
    """Per-window estimates over the whole trace, missing windows included.

    Every sample lands in exactly one window by floor((ts - t0) / W);
    sample-free windows are emitted explicitly as Unknown with support 0 so
    downstream GPS-gap logic sees a continuous timeline.
    """

    grid = window_grid(trace, cfg)
    if not grid:
        return []
    t0 = grid[0][0]
    buckets: dict[int, list[ActivitySample]] = {}
    for s in trace.samples:
        buckets.setdefault((s.ts - t0) // cfg.window_s, []).append(s)
    out = []
    for i, (start, end) in enumerate(grid):
        bucket = buckets.get(i)
        if bucket:
            out.append(window_estimate(bucket, cfg, start, end))
        else:
            out.append(empty_window(start, end))
    return out


@dataclass(frozen=True, slots=True)
class WindowAccuracy:
    """Mean GPS accuracy per estimation window; count 0 marks GPS silence."""

    window_start: int
    window_end: int
    mean_accuracy_m: Optional[float]
    fix_count: int
    low_quality: bool


def accuracy_profile(trace: TraceDay, cfg: EstimatorConfig) -> list[WindowAccuracy]:
    """Per-window mean fix accuracy, on the same grid as `windows`."""

    grid = window_grid(trace, cfg)
    if not grid:
        return []
    t0 = grid[0][0]
    buckets: dict[int, list[float]] = {}
    for f in trace.fixes:
        idx = (f.ts - t0) // cfg.window_s
        if 0 <= idx < len(grid):
            buckets.setdefault(idx, []).append(f.accuracy_m)
    out = []
    for i, (start, end) in enumerate(grid):
        accs = buckets.get(i, [])
        if accs:
            mean = sum(accs) / len(accs)
            low = any(a > cfg.accuracy_max_m for a in accs)
            out.append(WindowAccuracy(start, end, mean, len(accs), low))
        else:
            out.append(WindowAccuracy(start, end, None, 0, False))
    return out
