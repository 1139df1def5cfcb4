"""End-to-end detection pipeline: samples -> windows -> modes -> trips."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

from .estimator import EstimatorConfig, windows
from .model import TraceDay, Trip, TripSegment, Zone
from .transit import MatcherConfig, TransitDataset, refine_segments
from .trips import (
    DEFAULT_STILL_SPLIT_S,
    EmissionTable,
    finalize_segments,
    load_emission_table,
    load_zones,
    split_trips,
)


def default_emission_table() -> EmissionTable:
    text = resources.files("mobiliscope.data").joinpath("emissions_default.txt").read_text()
    return load_emission_table(text)


def default_zones() -> list[Zone]:
    text = resources.files("mobiliscope.data").joinpath("zones_bcn_toy.txt").read_text()
    return load_zones(text)


@dataclass(frozen=True)
class PipelineConfig:
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    still_split_s: int = DEFAULT_STILL_SPLIT_S


def process_trace(
    trace: TraceDay,
    data: TransitDataset,
    table: EmissionTable,
    zones: Sequence[Zone] = (),
    cfg: PipelineConfig = PipelineConfig(),
) -> tuple[list[TripSegment], list[Trip]]:
    """Run estimation, transit refinement, and trip assembly on one trace."""

    estimates = windows(trace, cfg.estimator)
    segments = refine_segments(estimates, trace, data, cfg.matcher)
    segments = finalize_segments(
        segments, trace.fixes, table, zones, cfg.matcher.accuracy_max_m
    )
    trips = split_trips(segments, trace.pseudonym, trace.date, cfg.still_split_s)
    return segments, trips
