import { fmtGrams } from "../format.js";
import { ALL_MODES, type CarbonResponse } from "../types.js";

/** Total CO2 with a per-mode breakdown; zero-emission modes are elided. */
export function renderCarbon(root: HTMLElement, data: CarbonResponse): void {
  root.replaceChildren();
  const doc = root.ownerDocument;

  const total = doc.createElement("p");
  total.className = "carbon-total";
  total.dataset.raw = String(data.total_g);
  total.textContent = `Total: ${fmtGrams(data.total_g)} CO₂`;
  root.appendChild(total);

  const list = doc.createElement("ul");
  for (const mode of ALL_MODES) {
    const grams = data.by_mode[mode];
    if (!grams) continue;
    const li = doc.createElement("li");
    li.dataset.mode = mode;
    li.dataset.raw = String(grams);
    li.textContent = `${mode}: ${fmtGrams(grams)}`;
    list.appendChild(li);
  }
  root.appendChild(list);
}
