import type { OdResponse } from "../types.js";

/** Origin–destination matrix as a heat-shaded table.
 *
 * Cell (i, j) is the trip count from zones[i] to zones[j]; trips with an
 * endpoint outside every zone are shown separately, never dropped.
 */
export function renderOdMatrix(root: HTMLElement, data: OdResponse): void {
  root.replaceChildren();
  const doc = root.ownerDocument;
  const table = doc.createElement("table");
  table.className = "od-matrix";

  const head = table.createTHead().insertRow();
  head.appendChild(doc.createElement("th")); // corner
  for (const zone of data.zones) {
    const th = doc.createElement("th");
    th.textContent = zone;
    head.appendChild(th);
  }

  const max = Math.max(1, ...data.cells.flat());
  const body = table.createTBody();
  data.cells.forEach((row, i) => {
    const tr = body.insertRow();
    const th = doc.createElement("th");
    th.textContent = data.zones[i] ?? "";
    tr.appendChild(th);
    row.forEach((count, j) => {
      const td = tr.insertCell();
      td.dataset.origin = data.zones[i];
      td.dataset.dest = data.zones[j];
      td.dataset.count = String(count);
      td.textContent = String(count);
      td.style.opacity = count === 0 ? "0.25" : String(0.4 + 0.6 * (count / max));
    });
  });

  const note = doc.createElement("p");
  note.className = "unzoned";
  note.dataset.count = String(data.unzoned);
  note.textContent = `${data.unzoned} trips with an endpoint outside all zones`;
  root.append(table, note);
}
