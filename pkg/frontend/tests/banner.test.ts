/** Offline handling: failures surface as a banner whose retry re-runs the call. */

import { describe, expect, it } from "vitest";

import { TeachingApi } from "../src/api";
import { TeachingApp } from "../src/app";

function flakyFetch(failures: number): typeof fetch {
  let remaining = failures;
  return async (input, init) => {
    if (remaining > 0) {
      remaining -= 1;
      throw new TypeError("fetch failed");
    }
    const path = String(input);
    if (path.endsWith("/sessions")) {
      return new Response(JSON.stringify({ id: "abc123" }), { status: 201 });
    }
    if (path.endsWith("/state")) {
      return new Response(
        JSON.stringify({
          id: "abc123",
          schema: { features: [{ name: "X1", domain: ["0", "1"] }] },
          training_count: 0,
          ambiguity: 0,
          ambiguity_trace: [],
          leaves: [],
          tree: null,
        }),
        { status: 200 },
      );
    }
    throw new Error(`unexpected path ${path} ${init?.method ?? "GET"}`);
  };
}

describe("error banner", () => {
  it("shows a retry banner while offline and recovers on retry", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const api = new TeachingApi("http://service", flakyFetch(1));
    const app = new TeachingApp(root, api, document);
    await app.start();

    await app.createSession(1);
    const banner = root.querySelector("[data-testid=error-banner]");
    expect(banner).not.toBeNull();
    expect(banner!.textContent).toContain("service unreachable");

    (root.querySelector("[data-testid=retry-button]") as HTMLButtonElement).click();
    await app.pending;
    expect(root.querySelector("[data-testid=error-banner]")).toBeNull();
    expect(app.sessionId).toBe("abc123");
  });
});
