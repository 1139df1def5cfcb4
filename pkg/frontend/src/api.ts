/** Thin fetch client for the analytics API with latest-wins semantics.
 *
 * Each logical query slot (one per view) keeps at most one request in
 * flight: starting a new query aborts the previous one, so a slow stale
 * response can never overwrite a newer result.
 */

import type {
  CarbonResponse,
  ModalSplitResponse,
  OdResponse,
  TripsResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private controllers = new Map<string, AbortController>();

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  /** GET one endpoint; aborts any in-flight request with the same slot. */
  async get<T>(slot: string, path: string, params?: URLSearchParams): Promise<T> {
    this.controllers.get(slot)?.abort();
    const controller = new AbortController();
    this.controllers.set(slot, controller);

    const query = params && params.size > 0 ? `?${params.toString()}` : "";
    const resp = await this.fetchImpl(`${this.baseUrl}${path}${query}`, {
      signal: controller.signal,
    });
    if (this.controllers.get(slot) === controller) {
      this.controllers.delete(slot);
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        detail = ((await resp.json()) as { error?: string }).error ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  modalSplit(params?: URLSearchParams): Promise<ModalSplitResponse> {
    return this.get("modal-split", "/v1/analytics/modal-split", params);
  }

  od(params?: URLSearchParams): Promise<OdResponse> {
    return this.get("od", "/v1/analytics/od", params);
  }

  carbon(params?: URLSearchParams): Promise<CarbonResponse> {
    return this.get("carbon", "/v1/analytics/carbon", params);
  }

  trips(params?: URLSearchParams): Promise<TripsResponse> {
    return this.get("trips", "/v1/analytics/trips", params);
  }
}

/** True when the error is a fetch abort from latest-wins cancellation. */
export function isAbort(err: unknown): boolean {
  return err instanceof DOMException && err.name === "AbortError";
}
