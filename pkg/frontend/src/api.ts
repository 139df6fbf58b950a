import type {
  ConfigDoc,
  ConfigResponse,
  EpisodeView,
  FieldError,
  GateView,
  LikelihoodSeries,
  PutConfigResponse,
  RecomputeResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
    public errors: FieldError[] = [],
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

interface RequestOptions {
  method?: string;
  query?: Record<string, string | undefined>;
  body?: unknown;
  headers?: Record<string, string>;
}

// Thin typed wrapper over fetch. Every dashboard number flows through here.
export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private token?: string,
  ) {}

  private url(path: string, query?: Record<string, string | undefined>): string {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(query ?? {})) {
      if (value !== undefined) params.set(key, value);
    }
    const qs = params.toString();
    return `${this.baseUrl}${path}${qs ? `?${qs}` : ""}`;
  }

  private async request<T>(
    path: string,
    options: RequestOptions = {},
  ): Promise<{ body: T; etag: string | null }> {
    const headers: Record<string, string> = { ...options.headers };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (options.body !== undefined) headers["Content-Type"] = "application/json";

    const response = await this.fetchFn(this.url(path, options.query), {
      method: options.method ?? "GET",
      headers,
      body: options.body === undefined ? undefined : JSON.stringify(options.body),
    });

    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof payload?.detail === "string" ? payload.detail : response.statusText;
      const errors = Array.isArray(payload?.errors) ? payload.errors : [];
      throw new ApiError(response.status, detail, errors);
    }
    return { body: payload as T, etag: response.headers.get("ETag") };
  }

  async health(): Promise<{ status: string; api_version: string }> {
    return (await this.request<{ status: string; api_version: string }>("/api/health")).body;
  }

  async getConfig(): Promise<{ body: ConfigResponse; etag: string | null }> {
    return this.request<ConfigResponse>("/api/config");
  }

  async putConfig(doc: ConfigDoc, ifMatch?: string): Promise<PutConfigResponse> {
    const headers: Record<string, string> = {};
    if (ifMatch) headers["If-Match"] = ifMatch;
    const { body } = await this.request<PutConfigResponse>("/api/config", {
      method: "PUT",
      body: doc,
      headers,
    });
    return body;
  }

  async recompute(dataset?: string): Promise<RecomputeResponse> {
    const { body } = await this.request<RecomputeResponse>("/api/recompute", {
      method: "POST",
      query: { dataset },
    });
    return body;
  }

  async gate(user: string, asOf: string, dataset?: string): Promise<GateView> {
    const { body } = await this.request<GateView>("/api/gate", {
      query: { user, as_of: asOf, dataset },
    });
    return body;
  }

  async episode(user: string, asOf: string, dataset?: string): Promise<EpisodeView> {
    const { body } = await this.request<EpisodeView>("/api/episode", {
      query: { user, as_of: asOf, dataset },
    });
    return body;
  }

  async likelihood(
    criterion: string,
    user: string,
    from: string,
    to: string,
    dataset?: string,
  ): Promise<LikelihoodSeries> {
    const { body } = await this.request<LikelihoodSeries>(
      `/api/criteria/${encodeURIComponent(criterion)}/likelihood`,
      { query: { user, from, to, dataset } },
    );
    return body;
  }
}
