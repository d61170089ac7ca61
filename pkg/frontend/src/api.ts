// Thin typed client over the prediction service. Every numeric answer in the
// UI comes from these calls; nothing is computed locally.

import type {
  ApiResult,
  CounterfactualView,
  ModelInfo,
  Prediction,
} from "./types.js";

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async loadModels(): Promise<ApiResult<ModelInfo[]>> {
    try {
      const response = await fetch(this.url("/models"));
      if (!response.ok) {
        return { kind: "network_error", message: `GET /models -> ${response.status}` };
      }
      return { kind: "ok", data: (await response.json()) as ModelInfo[] };
    } catch (err) {
      return { kind: "network_error", message: String(err) };
    }
  }

  async predict(
    modelId: string,
    indicators: Record<string, number>,
  ): Promise<ApiResult<Prediction>> {
    return this.post<Prediction>("/predict", {
      model_id: modelId,
      indicators,
    });
  }

  async counterfactuals(
    modelId: string,
    indicators: Record<string, number>,
    method: string,
    frozen: string[],
  ): Promise<ApiResult<CounterfactualView[]>> {
    const result = await this.post<{ counterfactuals: CounterfactualView[] }>(
      "/counterfactuals",
      {
        model_id: modelId,
        indicators,
        method,
        frozen_features: frozen,
      },
    );
    if (result.kind === "ok") {
      return { kind: "ok", data: result.data.counterfactuals };
    }
    return result;
  }

  private async post<T>(path: string, body: unknown): Promise<ApiResult<T>> {
    let response: Response;
    try {
      response = await fetch(this.url(path), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (err) {
      return { kind: "network_error", message: String(err) };
    }
    if (response.ok) {
      return { kind: "ok", data: (await response.json()) as T };
    }
    if (response.status === 400) {
      const payload = await response.json();
      return { kind: "field_errors", errors: payload.detail?.errors ?? [] };
    }
    if (response.status === 404) {
      return { kind: "not_found", message: `unknown model` };
    }
    if (response.status === 422) {
      const payload = await response.json();
      return {
        kind: "no_counterfactual",
        reason: payload.detail?.reason ?? "no counterfactual found",
      };
    }
    return { kind: "network_error", message: `${path} -> ${response.status}` };
  }
}
