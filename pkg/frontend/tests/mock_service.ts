// In-memory stand-in for the prediction service, driving global fetch.
// The stub model predicts failure iff ROE < 0; counterfactuals raise ROE.

import type { CounterfactualView, ModelInfo } from "../src/types.js";

export const MODEL: ModelInfo = {
  id: "rf_cost_sensitive",
  kind: "random_forest",
  decision_threshold: 0.5,
  features: [
    { name: "TICRC", kind: "numeric", valid_range: [-0.01, 0.19], observed_range: [0.0, 0.18] },
    { name: "NIMY", kind: "numeric", valid_range: [-4, 26], observed_range: [0.5, 8] },
    { name: "INTEXPYQ", kind: "numeric", valid_range: [-0.5, 5.5], observed_range: [0.1, 4.2] },
    { name: "RBCIAAJ", kind: "numeric", valid_range: [-20, 200], observed_range: [3, 22] },
    { name: "ROE", kind: "numeric", valid_range: [-12000, 1000], observed_range: [-80, 30] },
  ],
};

export interface ServiceLog {
  calls: { path: string; body: unknown }[];
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function validate(indicators: Record<string, number | null>): Response | null {
  const errors: { field: string; error: string }[] = [];
  for (const feature of MODEL.features) {
    const value = indicators[feature.name];
    if (value === null || value === undefined) {
      errors.push({ field: feature.name, error: "missing value" });
      continue;
    }
    const [lo, hi] = feature.valid_range!;
    if (value < lo || value > hi) {
      errors.push({ field: feature.name, error: `value ${value} outside valid range [${lo}, ${hi}]` });
    }
  }
  return errors.length ? json(400, { detail: { errors } }) : null;
}

function counterfactualsFor(
  indicators: Record<string, number>,
  frozen: string[],
): CounterfactualView[] | null {
  if (frozen.includes("ROE")) return null; // the only lever in the stub model
  const oldRoe = indicators["ROE"];
  const cards: CounterfactualView[] = [1, 2].map((step) => {
    const newRoe = 5.0 * step;
    const values = { ...indicators, ROE: newRoe };
    return {
      method: "nice",
      values,
      deltas: Object.fromEntries(
        Object.entries(indicators).map(([name, old]) => [
          name,
          {
            // intentionally junk direction: the client must re-derive it
            direction: "unchanged" as const,
            old,
            new: values[name as keyof typeof values] as number,
          },
        ]),
      ),
      changed_features: ["ROE"],
      predicted_probability: 0.1,
      desiderata: {
        valid_flip: true,
        valid_threshold: true,
        proximity: 0.02 * step + Math.abs(oldRoe) / 1000,
        sparsity: step, // second card pretends to change more
        plausibility: 0.01 * step,
      },
    };
  });
  return cards;
}

export function installMockService(
  options: { failNetwork?: boolean } = {},
): ServiceLog {
  const log: ServiceLog = { calls: [] };
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = typeof input === "string" ? input : input.toString();
    const path = new URL(url, "http://mock").pathname;
    const body = init?.body ? JSON.parse(init.body as string) : null;
    log.calls.push({ path, body });
    if (options.failNetwork) {
      throw new TypeError("network down");
    }
    if (path === "/models") {
      return json(200, [MODEL]);
    }
    if (path === "/predict") {
      if (body.model_id !== MODEL.id) return json(404, { detail: "unknown model" });
      const invalid = validate(body.indicators);
      if (invalid) return invalid;
      const failing = (body.indicators["ROE"] as number) < 0;
      return json(200, { probability: failing ? 0.93 : 0.04, label: failing ? 1 : 0 });
    }
    if (path === "/counterfactuals") {
      if (body.model_id !== MODEL.id) return json(404, { detail: "unknown model" });
      const invalid = validate(body.indicators);
      if (invalid) return invalid;
      if ((body.indicators["ROE"] as number) >= 0) {
        return json(422, { detail: { reason: "bank is already predicted as non-failing" } });
      }
      const cards = counterfactualsFor(body.indicators, body.frozen_features ?? []);
      if (!cards) {
        return json(422, { detail: { reason: "no counterfactual under the frozen features" } });
      }
      return json(200, { method: body.method, counterfactuals: cards });
    }
    return json(500, { detail: "unknown path" });
  }) as typeof fetch;
  return log;
}

export const FAILING_BANK = {
  TICRC: 0.01,
  NIMY: 2.1,
  INTEXPYQ: 2.4,
  RBCIAAJ: 6.0,
  ROE: -22.5,
};
