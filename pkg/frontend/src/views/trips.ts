import { fmtGrams, fmtMeters, fmtTime } from "../format.js";
import type { TripsResponse } from "../types.js";

/** Paged trip list; the pager callback receives the next cursor (or null
 * to return to the first page). */
export function renderTrips(
  root: HTMLElement,
  data: TripsResponse,
  onPage: (cursor: string | null) => void,
): void {
  root.replaceChildren();
  const doc = root.ownerDocument;
  const list = doc.createElement("ul");
  list.className = "trips";
  for (const trip of data.trips) {
    const li = doc.createElement("li");
    li.dataset.tripId = trip.trip_id;
    const chain = trip.segments.map((s) => s.mode).join(" → ");
    const zones = [trip.segments[0]?.origin_zone, trip.segments.at(-1)?.dest_zone]
      .map((z) => z ?? "–")
      .join(" → ");
    li.textContent =
      `${trip.date} ${fmtTime(trip.start_ts)}–${fmtTime(trip.end_ts)}  ` +
      `${chain}  (${zones})  ${fmtMeters(trip.total_distance_m)}, ` +
      `${fmtGrams(trip.total_carbon_g)} CO₂`;
    list.appendChild(li);
  }
  root.appendChild(list);

  const pager = doc.createElement("div");
  pager.className = "pager";
  const first = doc.createElement("button");
  first.textContent = "First page";
  first.addEventListener("click", () => onPage(null));
  pager.appendChild(first);
  if (data.next_cursor !== null) {
    const next = doc.createElement("button");
    next.className = "next";
    next.dataset.cursor = data.next_cursor;
    next.textContent = "Next page";
    next.addEventListener("click", () => onPage(data.next_cursor));
    pager.appendChild(next);
  }
  root.appendChild(pager);
}
