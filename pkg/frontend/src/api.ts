/**
 * Typed client for the control-loop service.
 *
 * All HTTP goes through a Transport so tests can substitute a mock; the
 * default transport is a thin fetch wrapper.
 */

export interface CycleResult {
  cycle_id: number;
  observed_curve: number[];
  suggested_action: [number, number, number];
  latent_point_2d: [number, number];
  deviation_score: number;
}

export interface SessionState {
  nominal_params: [number, number, number];
  reference_curve: number[];
  cycle_counter: number;
  disturbance?: [number, number, number]; // only with the service's debug flag
}

export interface Transport {
  get(path: string): Promise<unknown>;
  post(path: string, body?: unknown): Promise<unknown>;
}

export class HttpError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export function fetchTransport(baseUrl: string): Transport {
  const base = baseUrl.replace(/\/$/, "");
  async function request(path: string, init?: RequestInit): Promise<unknown> {
    const resp = await fetch(base + path, init);
    if (!resp.ok) {
      throw new HttpError(resp.status, `${init?.method ?? "GET"} ${path}: ${resp.status}`);
    }
    return resp.json();
  }
  return {
    get: (path) => request(path),
    post: (path, body) =>
      request(path, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body ?? {}),
      }),
  };
}

export class ApiClient {
  constructor(private transport: Transport) {}

  async startSession(seed = 0): Promise<string> {
    const out = (await this.transport.post("/sessions", { seed })) as { session_id: string };
    return out.session_id;
  }

  state(sessionId: string): Promise<SessionState> {
    return this.transport.get(`/sessions/${sessionId}/state`) as Promise<SessionState>;
  }

  cycle(sessionId: string): Promise<CycleResult> {
    return this.transport.post(`/sessions/${sessionId}/cycle`) as Promise<CycleResult>;
  }

  adjust(sessionId: string, delta: [number, number, number]): Promise<unknown> {
    return this.transport.post(`/sessions/${sessionId}/adjust`, { delta });
  }

  disturb(sessionId: string, offset: [number, number, number]): Promise<unknown> {
    return this.transport.post(`/sessions/${sessionId}/disturb`, { offset });
  }

  reset(sessionId: string): Promise<unknown> {
    return this.transport.post(`/sessions/${sessionId}/reset`);
  }
}
