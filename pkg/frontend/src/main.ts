/**
 * DOM wiring for the operator console. All state lives in SessionStore;
 * this file only maps the view to elements and user gestures to store calls.
 */

import { ApiClient, fetchTransport } from "./api.js";
import { actionBars, curvePath, scatterPoints, sparklinePath } from "./render.js";
import { SessionStore, SessionView } from "./session.js";

const CURVE_BOX = { width: 640, height: 240 };
const SPARK_BOX = { width: 300, height: 60 };
const SCATTER_BOX = { width: 300, height: 240 };
const SCATTER_COLORS = ["#7b2ff2", "#2fa84f", "#2f6ff2", "#d04a4a"]; // hp, is, mt, none

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fmt(v: number): string {
  return (v >= 0 ? "+" : "") + v.toFixed(3);
}

interface ScatterMemory {
  coords: [number, number];
  action: [number, number, number];
}

export async function boot(baseUrl: string): Promise<void> {
  const api = new ApiClient(fetchTransport(baseUrl));
  const store = await SessionStore.open(api, 0);
  const latentHistory: ScatterMemory[] = [];

  const referencePath = el<HTMLElement>("reference-path");
  const observedPath = el<HTMLElement>("observed-path");
  const emptyState = el<HTMLElement>("curve-empty");
  const bars = [0, 1, 2].map((i) => el<HTMLElement>(`bar-${i}`));
  const barValues = [0, 1, 2].map((i) => el<HTMLElement>(`bar-value-${i}`));
  const deviation = el<HTMLElement>("deviation");
  const spark = el<HTMLElement>("spark-path");
  const scatter = el<HTMLElement>("scatter");
  const banner = el<HTMLElement>("banner");
  const nominal = el<HTMLElement>("nominal");
  const applyBtn = el<HTMLButtonElement>("apply");
  const stepBtn = el<HTMLButtonElement>("step");
  const autoBtn = el<HTMLButtonElement>("auto");

  function render(view: SessionView): void {
    banner.textContent = view.error ?? "";
    banner.style.display = view.error ? "block" : "none";
    nominal.textContent = view.nominalParams.map((v) => v.toFixed(3)).join(" / ");
    applyBtn.disabled = view.busy || !view.latest;
    stepBtn.disabled = view.busy;
    autoBtn.textContent = view.mode === "auto" ? "stop auto" : "auto 1s";

    if (!view.latest) {
      emptyState.style.display = "block";
      return;
    }
    emptyState.style.display = "none";
    referencePath.setAttribute("d", curvePath(view.referenceCurve, CURVE_BOX));
    observedPath.setAttribute("d", curvePath(view.latest.observed_curve, CURVE_BOX));

    for (const [i, bar] of actionBars(view.latest.suggested_action, 0.5).entries()) {
      const half = 40; // px per half-range
      const px = Math.abs(bar.extent) * half;
      bars[i].style.height = `${px}px`;
      bars[i].style.transform = bar.extent >= 0 ? `translateY(${half - px}px)` : `translateY(${half}px)`;
      bars[i].className = bar.extent >= 0 ? "bar pos" : "bar neg";
      barValues[i].textContent = fmt(bar.value);
    }

    deviation.textContent = view.latest.deviation_score.toFixed(4);
    spark.setAttribute("d", sparklinePath(view.history.map((h) => h.deviation_score), SPARK_BOX));

    scatter.innerHTML = "";
    for (const p of scatterPoints(latentHistory, SCATTER_BOX)) {
      const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      dot.setAttribute("cx", String(p.x));
      dot.setAttribute("cy", String(p.y));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", SCATTER_COLORS[p.colorIndex === -1 ? 3 : p.colorIndex]);
      scatter.appendChild(dot);
    }
  }

  store.subscribe((view) => {
    if (view.latest && latentHistory.length < view.history.length) {
      latentHistory.push({
        coords: view.latest.latent_point_2d,
        action: view.latest.suggested_action,
      });
      if (latentHistory.length > 200) latentHistory.shift();
    }
    render(view);
  });

  stepBtn.addEventListener("click", () => void store.stepOnce());
  applyBtn.addEventListener("click", () => void store.applySuggestion());
  autoBtn.addEventListener("click", () => {
    if (store.current().mode === "auto") store.stopAuto();
    else store.startAuto(1000);
  });
  el<HTMLButtonElement>("reset").addEventListener("click", () => void store.reset());

  for (const i of [0, 1, 2]) {
    el<HTMLButtonElement>(`nudge-up-${i}`).addEventListener("click", () => {
      const delta: [number, number, number] = [0, 0, 0];
      delta[i] = 0.05;
      void store.nudge(delta);
    });
    el<HTMLButtonElement>(`nudge-down-${i}`).addEventListener("click", () => {
      const delta: [number, number, number] = [0, 0, 0];
      delta[i] = -0.05;
      void store.nudge(delta);
    });
  }

  el<HTMLButtonElement>("disturb").addEventListener("click", () => {
    const offset = [0, 1, 2].map(
      (i) => parseFloat(el<HTMLInputElement>(`disturb-${i}`).value) || 0,
    ) as [number, number, number];
    void store.disturb(offset);
  });

  render(store.current());
}

declare global {
  interface Window {
    awmBoot: typeof boot;
  }
}

if (typeof window !== "undefined") {
  window.awmBoot = boot;
}
