"""Flat key=value configuration covering estimator, matcher, and trip keys.

Example:

    estimator.sampling_period_s = 20
    estimator.window_s = 120
    estimator.tie_priority = VEHICLE,BICYCLE,ON_FOOT,STILL
    matcher.gap_min_s = 180
    matcher.station_radius_m = 300
    trips.still_split_s = 300

Unknown keys are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import replace

from .estimator import EstimatorConfig
from .model import ActivityClass
from .pipeline import PipelineConfig
from .transit import MatcherConfig


class ConfigError(ValueError):
    pass


_MATCHER_FLOAT_KEYS = {
    "station_radius_m",
    "stop_corridor_m",
    "bus_fix_fraction",
    "poi_radius_m",
    "accuracy_max_m",
    "moving_speed_mps",
}
_MATCHER_INT_KEYS = {"gap_min_s", "moving_lookback_s"}


def parse_config(text: str) -> PipelineConfig:
    est = EstimatorConfig()
    matcher = MatcherConfig()
    still_split = PipelineConfig().still_split_s

    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key == "estimator.sampling_period_s":
                est = replace(est, sampling_period_s=int(value))
            elif key == "estimator.window_s":
                est = replace(est, window_s=int(value))
            elif key == "estimator.tie_priority":
                priority = tuple(ActivityClass(v.strip()) for v in value.split(","))
                est = replace(est, tie_priority=priority)
            elif key == "estimator.accuracy_max_m":
                est = replace(est, accuracy_max_m=float(value))
            elif key == "matcher.bus_speed_min_mps":
                matcher = replace(matcher, bus_speed_mps=(float(value), matcher.bus_speed_mps[1]))
            elif key == "matcher.bus_speed_max_mps":
                matcher = replace(matcher, bus_speed_mps=(matcher.bus_speed_mps[0], float(value)))
            elif key == "matcher.metro_speed_min_mps":
                matcher = replace(matcher, metro_speed_mps=(float(value), matcher.metro_speed_mps[1]))
            elif key == "matcher.metro_speed_max_mps":
                matcher = replace(matcher, metro_speed_mps=(matcher.metro_speed_mps[0], float(value)))
            elif key.startswith("matcher."):
                field = key.split(".", 1)[1]
                if field in _MATCHER_FLOAT_KEYS:
                    matcher = replace(matcher, **{field: float(value)})
                elif field in _MATCHER_INT_KEYS:
                    matcher = replace(matcher, **{field: int(value)})
                else:
                    raise ConfigError(f"line {line_no}: unknown key {key}")
            elif key == "trips.still_split_s":
                still_split = int(value)
            else:
                raise ConfigError(f"line {line_no}: unknown key {key}")
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {line_no}: bad value for {key}: {value}") from None

    return PipelineConfig(estimator=est, matcher=matcher, still_split_s=still_split)
