import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { FAILING_BANK, MODEL, installMockService } from "./mock_service.js";

const client = () => new ApiClient("http://mock");

describe("api client result mapping", () => {
  it("returns models on 200", async () => {
    installMockService();
    const result = await client().loadModels();
    expect(result.kind).toBe("ok");
    if (result.kind === "ok") {
      expect(result.data[0].id).toBe(MODEL.id);
    }
  });

  it("maps 400 to field errors naming the fields", async () => {
    installMockService();
    const partial = { ...FAILING_BANK } as Record<string, number>;
    delete partial["ROE"];
    const result = await client().predict(MODEL.id, partial);
    expect(result.kind).toBe("field_errors");
    if (result.kind === "field_errors") {
      expect(result.errors.map((e) => e.field)).toContain("ROE");
    }
  });

  it("maps 404 to not_found", async () => {
    installMockService();
    const result = await client().predict("ghost", FAILING_BANK);
    expect(result.kind).toBe("not_found");
  });

  it("maps 422 to no_counterfactual with the server reason", async () => {
    installMockService();
    const healthy = { ...FAILING_BANK, ROE: 12.0 };
    const result = await client().counterfactuals(MODEL.id, healthy, "nice", []);
    expect(result.kind).toBe("no_counterfactual");
    if (result.kind === "no_counterfactual") {
      expect(result.reason).toContain("non-failing");
    }
  });

  it("maps fetch rejection to network_error", async () => {
    installMockService({ failNetwork: true });
    const result = await client().predict(MODEL.id, FAILING_BANK);
    expect(result.kind).toBe("network_error");
  });
});
