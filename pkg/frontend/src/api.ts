import type { GenerateResponse, SweepResponse, UiModelDescriptor } from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

/** Thin fetch wrapper over the model service; injectable for tests. */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  getModels(): Promise<UiModelDescriptor[]> {
    return this.request<UiModelDescriptor[]>("/models");
  }

  generate(modelId: string, params: Record<string, number>): Promise<GenerateResponse> {
    return this.request<GenerateResponse>(
      `/models/${encodeURIComponent(modelId)}/generate`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ params }),
      },
    );
  }

  sweep(modelId: string, param: string, steps = 13): Promise<SweepResponse> {
    const query = new URLSearchParams({ param, steps: String(steps) });
    return this.request<SweepResponse>(
      `/models/${encodeURIComponent(modelId)}/sweep?${query}`,
    );
  }
}
