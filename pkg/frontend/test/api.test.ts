import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function clientReturning(status: number, body: unknown, calls: Call[] = []) {
  const fetchFn = (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return Promise.resolve(
      new Response(typeof body === "string" ? body : JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
      }),
    );
  };
  return { api: new ApiClient("http://test", fetchFn), calls };
}

describe("request shapes", () => {
  it("posts an action as JSON to the session's action route", async () => {
    const { api, calls } = clientReturning(200, { session_id: "s1" });
    await api.postAction("s1", 2);
    expect(calls[0]!.url).toBe("http://test/api/sessions/s1/actions");
    expect(calls[0]!.init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0]!.init?.body))).toEqual({ action_id: 2 });
  });

  it("percent-encodes the # in trajectory ids so it reaches the server", async () => {
    const { api, calls } = clientReturning(200, { id: "x" });
    await api.getTrajectory("maze/human/alice-12345678.jsonl#3");
    expect(calls[0]!.url).toBe("http://test/api/trajectories/maze/human/alice-12345678.jsonl%233");
  });

  it("builds list filters as query parameters", async () => {
    const { api, calls } = clientReturning(200, []);
    await api.listTrajectories({ game: "ctf", source: "human" });
    expect(calls[0]!.url).toBe("http://test/api/trajectories?game=ctf&source=human");
    await api.listTrajectories();
    expect(calls[1]!.url).toBe("http://test/api/trajectories");
  });

  it("sends the save label in the request body", async () => {
    const { api, calls } = clientReturning(201, { trajectory_id: "t" });
    await api.saveTrajectory("s1", "alice");
    expect(calls[0]!.url).toBe("http://test/api/sessions/s1/save");
    expect(JSON.parse(String(calls[0]!.init?.body))).toEqual({ label: "alice" });
  });
});

describe("error mapping", () => {
  it("turns a JSON error into an ApiError with the server's detail", async () => {
    const { api } = clientReturning(409, { detail: "session already finished" });
    const err = await api.postAction("s1", 0).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).detail).toBe("session already finished");
  });

  it("falls back to a generic detail for non-JSON errors", async () => {
    const { api } = clientReturning(502, "<html>bad gateway</html>");
    const err = await api.getState("s1").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).detail).toBe("HTTP 502");
  });

  it("lets network failures propagate as ordinary errors", async () => {
    const api = new ApiClient("http://test", () => Promise.reject(new TypeError("fetch failed")));
    const err = await api.listMaps().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(TypeError);
    expect(err).not.toBeInstanceOf(ApiError);
  });
});
