/**
 * End-to-end closed-loop test against a live control service.
 *
 * Opt-in: set CONSOLE_E2E=1 (and optionally CONSOLE_SERVICE_URL, default
 * http://127.0.0.1:8000) with the Python service running, e.g.
 *   awm serve --ckpt <trained>.awm1 --debug-expose-disturbance
 * The debug flag is required for the disturbance endpoint.
 */

import { describe, expect, it } from "vitest";

import { ApiClient, fetchTransport } from "../src/api.js";
import { SessionStore } from "../src/session.js";

const enabled = !!process.env.CONSOLE_E2E;
const baseUrl = process.env.CONSOLE_SERVICE_URL ?? "http://127.0.0.1:8000";

describe.skipIf(!enabled)("live service closed loop", () => {
  it(
    "recovers from a holding-pressure disturbance by applying suggestions",
    { timeout: 60_000 },
    async () => {
      const store = await SessionStore.open(new ApiClient(fetchTransport(baseUrl)), 0);

      // establish the undisturbed deviation level
      const baselineScores: number[] = [];
      for (let i = 0; i < 3; i++) {
        const cycle = await store.stepOnce();
        expect(cycle).toBeDefined();
        baselineScores.push(cycle!.deviation_score);
      }
      const baseline = baselineScores.reduce((a, b) => a + b, 0) / baselineScores.length;

      await store.disturb([0.3, 0, 0]);
      const disturbed = await store.stepOnce();
      expect(disturbed!.deviation_score).toBeGreaterThan(2 * baseline);

      // operator loop: observe, apply the displayed suggestion, repeat
      let recovered = false;
      for (let i = 0; i < 5 && !recovered; i++) {
        await store.applySuggestion();
        const cycle = await store.stepOnce();
        recovered = cycle!.deviation_score < 2 * baseline;
      }
      expect(recovered).toBe(true);

      // leave the session clean; nominal stays compensated, so no deviation claim here
      await store.reset();
    },
  );
});
