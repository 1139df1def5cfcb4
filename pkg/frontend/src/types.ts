/** Response shapes of the `/v1/analytics/*` endpoints. */

export type Mode =
  | "WALK"
  | "BICYCLE"
  | "METRO"
  | "BUS"
  | "PRIVATE_VEHICLE"
  | "STILL"
  | "UNKNOWN";

export const ALL_MODES: readonly Mode[] = [
  "WALK",
  "BICYCLE",
  "METRO",
  "BUS",
  "PRIVATE_VEHICLE",
  "STILL",
  "UNKNOWN",
];

export interface ModeAggregate {
  segment_count: number;
  total_distance_m: number;
  share: number;
  count_share: number;
}

export interface ModalSplitResponse {
  by_mode: Record<string, ModeAggregate>;
}

export interface OdResponse {
  zones: string[];
  cells: number[][];
  unzoned: number;
}

export interface CarbonResponse {
  total_g: number;
  by_mode: Record<string, number>;
}

export interface TripSegment {
  start_ts: number;
  end_ts: number;
  mode: Mode;
  distance_m: number;
  carbon_g: number;
  origin_zone: string | null;
  dest_zone: string | null;
}

export interface Trip {
  trip_id: string;
  date: string;
  start_ts: number;
  end_ts: number;
  total_distance_m: number;
  total_carbon_g: number;
  segments: TripSegment[];
}

export interface TripsResponse {
  trips: Trip[];
  next_cursor: string | null;
}
