import { describe, expect, it } from "vitest";

import {
  EMPTY_STATE,
  apiParams,
  searchFromState,
  stateFromSearch,
  type FilterState,
} from "../src/state.js";

describe("URL state round-trip", () => {
  it("empty state produces an empty query string", () => {
    expect(searchFromState(EMPTY_STATE)).toBe("");
    expect(stateFromSearch("")).toEqual(EMPTY_STATE);
  });

  it("full state survives encode/decode unchanged", () => {
    const state: FilterState = {
      from: "2026-03-02",
      to: "2026-03-06",
      modes: ["METRO", "BUS"],
      zones: ["ZA", "ZC"],
      cursor: "20",
    };
    expect(stateFromSearch(searchFromState(state))).toEqual(state);
  });

  it("ignores unrelated query parameters", () => {
    const state = stateFromSearch("?utm_source=x&from=2026-03-02");
    expect(state.from).toBe("2026-03-02");
    expect(state.modes).toEqual([]);
  });

  it("drops empty list entries", () => {
    expect(stateFromSearch("?modes=").modes).toEqual([]);
  });
});

describe("API parameter mapping", () => {
  const state: FilterState = {
    from: "2026-03-02",
    to: null,
    modes: ["WALK"],
    zones: [],
    cursor: "30",
  };

  it("uses the server's parameter names", () => {
    const params = apiParams({ ...state, zones: ["ZB"] });
    expect(params.get("from")).toBe("2026-03-02");
    expect(params.get("modes")).toBe("WALK");
    expect(params.get("zone_filter")).toBe("ZB");
  });

  it("sends the cursor only to the trips endpoint", () => {
    expect(apiParams(state).has("cursor")).toBe(false);
    expect(apiParams(state, true).get("cursor")).toBe("30");
  });
});
