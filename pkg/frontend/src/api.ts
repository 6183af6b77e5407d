/** Typed client for the recommendation service. Same-origin by default,
 * since the built bundle is served by the service itself. */

export interface ItemRef {
  item_id: string;
  name: string;
}

export interface Recommendation extends ItemRef {
  score: number;
}

export interface RecommendResponse {
  recommendations: Recommendation[];
  unknown_items: string[];
  model: { metric: string; s: number };
}

export interface ModelInfo {
  metric: string;
  s: number;
  m: number;
  n: number;
  format_version: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

// Service errors carry {detail: {code, message}}; anything else gets a
// generic envelope so callers can treat failures uniformly.
async function toApiError(res: Response): Promise<ApiError> {
  try {
    const body = await res.json();
    if (body && body.detail && typeof body.detail.code === "string") {
      return new ApiError(res.status, body.detail.code, String(body.detail.message));
    }
  } catch {
    // non-JSON body; fall through
  }
  return new ApiError(res.status, `HTTP_${res.status}`, res.statusText || "request failed");
}

export class ServiceClient {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) throw await toApiError(res);
    return (await res.json()) as T;
  }

  searchItems(q: string, limit = 20): Promise<ItemRef[]> {
    const params = new URLSearchParams({ q, limit: String(limit) });
    return this.request(`/v1/items?${params}`);
  }

  /** Items already in the bag are excluded server-side. */
  recommend(items: string[], k: number): Promise<RecommendResponse> {
    return this.request("/v1/recommendations", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ items, k, exclude_selected: true }),
    });
  }

  modelInfo(): Promise<ModelInfo> {
    return this.request("/v1/model");
  }
}
