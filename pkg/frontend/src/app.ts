/** Dashboard controller: URL-backed filter state driving four views.
 *
 * Every filter change (1) writes the new state to the URL and (2) issues
 * exactly one query per view through the latest-wins client; a stale
 * in-flight response is aborted, never rendered.
 */

import { ApiClient, isAbort } from "./api.js";
import { apiParams, stateFromSearch, searchFromState, type FilterState } from "./state.js";
import { ALL_MODES } from "./types.js";
import { renderCarbon } from "./views/carbon.js";
import { renderModalSplit } from "./views/modalSplit.js";
import { renderOdMatrix } from "./views/od.js";
import { renderTrips } from "./views/trips.js";

interface Mounts {
  filters: HTMLElement;
  modalSplit: HTMLElement;
  od: HTMLElement;
  carbon: HTMLElement;
  trips: HTMLElement;
  status: HTMLElement;
}

export class Dashboard {
  state: FilterState;

  constructor(
    private readonly client: ApiClient,
    private readonly mounts: Mounts,
    private readonly win: Pick<Window, "history" | "location"> = window,
  ) {
    this.state = stateFromSearch(this.win.location.search);
  }

  start(): void {
    this.renderFilters();
    void this.refresh();
  }

  setState(patch: Partial<FilterState>): void {
    // Any filter change invalidates the trips cursor except an explicit page move.
    const cursor = "cursor" in patch ? (patch.cursor ?? null) : null;
    this.state = { ...this.state, ...patch, cursor };
    this.win.history.replaceState(null, "", searchFromState(this.state) || "?");
    void this.refresh();
  }

  async refresh(): Promise<void> {
    this.mounts.status.textContent = "loading…";
    const base = apiParams(this.state);
    const results = await Promise.allSettled([
      this.client.modalSplit(base),
      this.client.od(apiParams(this.state)),
      this.client.carbon(apiParams(this.state)),
      this.client.trips(apiParams(this.state, true)),
    ]);
    const [split, od, carbon, trips] = results;
    if (split.status === "fulfilled") renderModalSplit(this.mounts.modalSplit, split.value);
    if (od.status === "fulfilled") renderOdMatrix(this.mounts.od, od.value);
    if (carbon.status === "fulfilled") renderCarbon(this.mounts.carbon, carbon.value);
    if (trips.status === "fulfilled") {
      renderTrips(this.mounts.trips, trips.value, (cursor) => this.setState({ cursor }));
    }
    const failures = results.filter(
      (r): r is PromiseRejectedResult => r.status === "rejected" && !isAbort(r.reason),
    );
    this.mounts.status.textContent = failures.length
      ? `error: ${String(failures[0]?.reason)}`
      : "";
  }

  private renderFilters(): void {
    const doc = this.mounts.filters.ownerDocument;
    this.mounts.filters.replaceChildren();

    const dateInput = (name: "from" | "to") => {
      const input = doc.createElement("input");
      input.type = "date";
      input.name = name;
      input.value = this.state[name] ?? "";
      input.addEventListener("change", () => {
        this.setState({ [name]: input.value || null });
      });
      return input;
    };
    this.mounts.filters.append("From ", dateInput("from"), " To ", dateInput("to"));

    for (const mode of ALL_MODES) {
      const label = doc.createElement("label");
      const box = doc.createElement("input");
      box.type = "checkbox";
      box.value = mode;
      box.checked = this.state.modes.includes(mode);
      box.addEventListener("change", () => {
        const modes = this.state.modes.filter((m) => m !== mode);
        if (box.checked) modes.push(mode);
        this.setState({ modes });
      });
      label.append(box, mode);
      this.mounts.filters.appendChild(label);
    }
  }
}
