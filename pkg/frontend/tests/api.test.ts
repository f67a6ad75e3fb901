import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("fetches the model list", async () => {
    const fetchFn = vi.fn(async () => jsonResponse([{ id: "m" }]));
    const api = new ApiClient("http://svc:1", fetchFn as unknown as typeof fetch);
    const models = await api.getModels();
    expect(models).toEqual([{ id: "m" }]);
    expect(fetchFn).toHaveBeenCalledWith("http://svc:1/models", undefined);
  });

  it("posts conditioning params to generate", async () => {
    const fetchFn = vi.fn(async (_url: string, init?: RequestInit) => {
      expect(init?.method).toBe("POST");
      expect(JSON.parse(String(init?.body))).toEqual({ params: { GW: 29 } });
      return jsonResponse({ ok: true });
    });
    const api = new ApiClient("http://svc:1", fetchFn as unknown as typeof fetch);
    await api.generate("scapula-oc", { GW: 29 });
    expect(fetchFn.mock.calls[0][0]).toBe("http://svc:1/models/scapula-oc/generate");
  });

  it("builds sweep query strings", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ slopes: {} }));
    const api = new ApiClient("http://svc:1", fetchFn as unknown as typeof fetch);
    await api.sweep("m", "GW", 13);
    expect(fetchFn.mock.calls[0][0]).toBe(
      "http://svc:1/models/m/sweep?param=GW&steps=13",
    );
  });

  it("surfaces service error details", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ detail: "unknown label 'XX'" }, 422),
    );
    const api = new ApiClient("http://svc:1", fetchFn as unknown as typeof fetch);
    await expect(api.generate("m", { XX: 1 })).rejects.toThrowError(ApiError);
    await expect(api.generate("m", { XX: 1 })).rejects.toThrow("unknown label");
  });
});
