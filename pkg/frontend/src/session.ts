/**
 * Session store and control loop.
 *
 * Holds the operator's view of one live session: the latest cycle, nominal
 * parameters, and a bounded history of (cycle_id, deviation, suggestion).
 * All mutating requests are serialized through a single queue so at most one
 * is in flight, and cycle updates are applied strictly in cycle_id order.
 */

import { ApiClient, CycleResult, SessionState } from "./api.js";

export interface HistoryEntry {
  cycle_id: number;
  deviation_score: number;
  suggested_action: [number, number, number];
}

export type LoopMode = "manual" | "auto" | "paused";

export interface SessionView {
  sessionId: string;
  latest: CycleResult | null;
  nominalParams: [number, number, number];
  referenceCurve: number[];
  history: HistoryEntry[];
  mode: LoopMode;
  error: string | null;
  busy: boolean;
}

const HISTORY_LIMIT = 200;

type Listener = (view: SessionView) => void;

export class SessionStore {
  private view: SessionView;
  private listeners: Listener[] = [];
  private queue: Promise<unknown> = Promise.resolve();
  private autoTimer: ReturnType<typeof setInterval> | null = null;
  private pending = 0; // mutating requests queued or in flight

  constructor(private api: ApiClient, sessionId: string, state: SessionState,
              private historyLimit = HISTORY_LIMIT) {
    this.view = {
      sessionId,
      latest: null,
      nominalParams: state.nominal_params,
      referenceCurve: state.reference_curve,
      history: [],
      mode: "manual",
      error: null,
      busy: false,
    };
  }

  static async open(api: ApiClient, seed = 0): Promise<SessionStore> {
    const sessionId = await api.startSession(seed);
    return SessionStore.resume(api, sessionId);
  }

  /** Reattach to an existing session: the view is rebuilt from service state. */
  static async resume(api: ApiClient, sessionId: string): Promise<SessionStore> {
    const state = await api.state(sessionId);
    return new SessionStore(api, sessionId, state);
  }

  current(): SessionView {
    return this.view;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(patch: Partial<SessionView>): void {
    this.view = { ...this.view, ...patch };
    for (const l of this.listeners) l(this.view);
  }

  /** Serialize a mutating request; rejections pause auto mode and surface a banner. */
  private enqueue<T>(work: () => Promise<T>): Promise<T | undefined> {
    this.pending += 1;
    const run = this.queue.then(async () => {
      this.emit({ busy: true });
      try {
        const out = await work();
        this.emit({ busy: false, error: null });
        return out;
      } catch (err) {
        this.stopAuto();
        this.emit({ busy: false, mode: "paused", error: String(err) });
        return undefined;
      } finally {
        this.pending -= 1;
      }
    });
    this.queue = run;
    return run;
  }

  /** Run one production cycle and fold the result into the view. */
  stepOnce(): Promise<CycleResult | undefined> {
    return this.enqueue(async () => {
      const cycle = await this.api.cycle(this.view.sessionId);
      this.applyCycle(cycle);
      return cycle;
    });
  }

  private applyCycle(cycle: CycleResult): void {
    // strictly ordered: never step backwards even if responses race
    if (this.view.latest && cycle.cycle_id <= this.view.latest.cycle_id) return;
    const entry: HistoryEntry = {
      cycle_id: cycle.cycle_id,
      deviation_score: cycle.deviation_score,
      suggested_action: cycle.suggested_action,
    };
    const history = [...this.view.history, entry].slice(-this.historyLimit);
    this.emit({ latest: cycle, history });
  }

  /** Apply the currently displayed suggestion: exactly one /adjust call.
   * Clicks landing while any request is queued or in flight are dropped. */
  applySuggestion(): Promise<unknown> {
    const latest = this.view.latest;
    if (!latest || this.pending > 0) return Promise.resolve(undefined);
    const delta = latest.suggested_action;
    return this.enqueue(async () => {
      const out = (await this.api.adjust(this.view.sessionId, delta)) as {
        nominal_params: [number, number, number];
      };
      this.emit({ nominalParams: out.nominal_params });
      return out;
    });
  }

  /** Manual per-parameter nudge. */
  nudge(delta: [number, number, number]): Promise<unknown> {
    return this.enqueue(async () => {
      const out = (await this.api.adjust(this.view.sessionId, delta)) as {
        nominal_params: [number, number, number];
      };
      this.emit({ nominalParams: out.nominal_params });
      return out;
    });
  }

  /** Scenario drawer: inject a process disturbance (demo/training tool). */
  disturb(offset: [number, number, number]): Promise<unknown> {
    return this.enqueue(() => this.api.disturb(this.view.sessionId, offset));
  }

  reset(): Promise<unknown> {
    return this.enqueue(() => this.api.reset(this.view.sessionId));
  }

  startAuto(intervalMs: number): void {
    this.stopAuto();
    this.emit({ mode: "auto", error: null });
    this.autoTimer = setInterval(() => {
      void this.stepOnce();
    }, intervalMs);
  }

  stopAuto(): void {
    if (this.autoTimer !== null) {
      clearInterval(this.autoTimer);
      this.autoTimer = null;
    }
    if (this.view.mode === "auto") this.emit({ mode: "manual" });
  }
}
