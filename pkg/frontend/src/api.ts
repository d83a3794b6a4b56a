import type {
  ApiErrorBody,
  Evaluation,
  EvaluateBody,
  InstanceRow,
  InterveneBody,
  Intervention,
  Meta,
  PredictBody,
  Prediction,
  SelectBody,
  Selection,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
    readonly detail: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/**
 * Thin client for the /api/v1 endpoints. It never computes numbers of its
 * own: every value shown in the UI is parsed straight out of a service
 * response.
 */
export class ApiClient {
  constructor(
    private readonly base: string = "/api/v1",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    const text = await response.text();
    let parsed: unknown;
    try {
      parsed = JSON.parse(text);
    } catch {
      throw new ApiError("bad_response", `non-JSON response (HTTP ${response.status})`, response.status);
    }
    if (!response.ok) {
      const err = parsed as ApiErrorBody;
      throw new ApiError(err.code ?? "error", err.message ?? text, response.status, err.detail);
    }
    return parsed as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  meta(): Promise<Meta> {
    return this.request<Meta>("/meta");
  }

  instance(index: number): Promise<InstanceRow> {
    return this.request<InstanceRow>(`/instance/${index}`);
  }

  predict(body: PredictBody): Promise<Prediction> {
    return this.post<Prediction>("/predict", body);
  }

  select(body: SelectBody): Promise<Selection> {
    return this.post<Selection>("/select", body);
  }

  intervene(body: InterveneBody): Promise<Intervention> {
    return this.post<Intervention>("/intervene", body);
  }

  evaluate(body: EvaluateBody): Promise<Evaluation> {
    return this.post<Evaluation>("/evaluate", body);
  }
}
