/** Display formatting. Raw response numbers are also attached to the DOM
 * via data attributes so every rendered value stays traceable to the
 * API field it came from. */

export function fmtMeters(m: number): string {
  return m >= 1000 ? `${(m / 1000).toFixed(2)} km` : `${m.toFixed(0)} m`;
}

export function fmtGrams(g: number): string {
  return g >= 1000 ? `${(g / 1000).toFixed(2)} kg` : `${g.toFixed(1)} g`;
}

export function fmtPercent(share: number): string {
  return `${(share * 100).toFixed(1)} %`;
}

export function fmtTime(epochSeconds: number): string {
  const d = new Date(epochSeconds * 1000);
  const hh = String(d.getUTCHours()).padStart(2, "0");
  const mm = String(d.getUTCMinutes()).padStart(2, "0");
  return `${hh}:${mm}`;
}
