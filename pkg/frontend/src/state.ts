/** Dashboard filter state, round-trippable through the URL query string.
 *
 * The URL is the single source of truth: every filter change is written
 * to it, and a page load (or back/forward) restores the exact view.
 */

export interface FilterState {
  from: string | null; // YYYY-MM-DD
  to: string | null;
  modes: string[]; // empty = all modes
  zones: string[]; // empty = all zones
  cursor: string | null; // trips-view page cursor
}

export const EMPTY_STATE: FilterState = {
  from: null,
  to: null,
  modes: [],
  zones: [],
  cursor: null,
};

export function stateFromSearch(search: string): FilterState {
  const params = new URLSearchParams(search);
  const list = (key: string): string[] => {
    const raw = params.get(key);
    return raw ? raw.split(",").filter((s) => s.length > 0) : [];
  };
  return {
    from: params.get("from"),
    to: params.get("to"),
    modes: list("modes"),
    zones: list("zone_filter"),
    cursor: params.get("cursor"),
  };
}

export function searchFromState(state: FilterState): string {
  const params = new URLSearchParams();
  if (state.from) params.set("from", state.from);
  if (state.to) params.set("to", state.to);
  if (state.modes.length) params.set("modes", state.modes.join(","));
  if (state.zones.length) params.set("zone_filter", state.zones.join(","));
  if (state.cursor) params.set("cursor", state.cursor);
  const s = params.toString();
  return s ? `?${s}` : "";
}

/** Query parameters to send to the API (cursor only applies to /trips). */
export function apiParams(state: FilterState, withCursor = false): URLSearchParams {
  const params = new URLSearchParams();
  if (state.from) params.set("from", state.from);
  if (state.to) params.set("to", state.to);
  if (state.modes.length) params.set("modes", state.modes.join(","));
  if (state.zones.length) params.set("zone_filter", state.zones.join(","));
  if (withCursor && state.cursor) params.set("cursor", state.cursor);
  return params;
}
