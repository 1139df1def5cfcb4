import { fmtMeters, fmtPercent } from "../format.js";
import { ALL_MODES, type ModalSplitResponse } from "../types.js";

/** Table of per-mode shares with a proportional bar per row. */
export function renderModalSplit(root: HTMLElement, data: ModalSplitResponse): void {
  root.replaceChildren();
  const table = root.ownerDocument.createElement("table");
  table.className = "modal-split";
  const head = table.createTHead().insertRow();
  for (const label of ["Mode", "Segments", "Distance", "Share (distance)", ""]) {
    const th = root.ownerDocument.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  const body = table.createTBody();
  for (const mode of ALL_MODES) {
    const agg = data.by_mode[mode];
    if (!agg || agg.segment_count === 0) continue;
    const row = body.insertRow();
    row.dataset.mode = mode;
    row.dataset.share = String(agg.share);

    row.insertCell().textContent = mode;
    const count = row.insertCell();
    count.className = "segment-count";
    count.textContent = String(agg.segment_count);
    const dist = row.insertCell();
    dist.className = "distance";
    dist.dataset.raw = String(agg.total_distance_m);
    dist.textContent = fmtMeters(agg.total_distance_m);
    const share = row.insertCell();
    share.className = "share";
    share.textContent = fmtPercent(agg.share);

    const barCell = row.insertCell();
    const bar = root.ownerDocument.createElement("div");
    bar.className = "bar";
    bar.style.width = `${(agg.share * 100).toFixed(2)}%`;
    barCell.appendChild(bar);
  }
  root.appendChild(table);
}
