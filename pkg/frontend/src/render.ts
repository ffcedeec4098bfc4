/**
 * Pure view-geometry helpers: curves to SVG paths, suggestions to signed
 * bars, latent points to scatter coordinates. No DOM access here, so the
 * render logic is testable headlessly; main.ts owns the actual elements.
 */

export interface ChartBox {
  width: number;
  height: number;
}

export const PARAM_LABELS = ["holding pressure", "injection speed", "mold temperature"] as const;

/** Map a sampled curve (0-10 s, normalized pressure) to an SVG path string. */
export function curvePath(samples: number[], box: ChartBox, yMax = 1.0): string {
  if (samples.length === 0) return "";
  const n = samples.length;
  const parts: string[] = [];
  for (let i = 0; i < n; i++) {
    const x = (i / (n - 1)) * box.width;
    const y = box.height - (Math.min(Math.max(samples[i], 0), yMax) / yMax) * box.height;
    parts.push(`${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`);
  }
  return parts.join(" ");
}

export interface Bar {
  label: string;
  value: number;
  /** Signed extent in [-1, 1] after clamping to the display range. */
  extent: number;
}

/** Signed per-parameter bars for an action vector; range is the full-scale value. */
export function actionBars(action: [number, number, number], range = 1.0): Bar[] {
  return action.map((value, i) => ({
    label: PARAM_LABELS[i],
    value,
    extent: Math.min(Math.max(value / range, -1), 1),
  }));
}

export interface ScatterPoint {
  x: number;
  y: number;
  /** Dominant axis of the suggestion (0/1/2), or -1 for a near-zero action. */
  colorIndex: number;
}

/** Latent scatter: scale 2D PCA coordinates into the chart box. */
export function scatterPoints(
  points: Array<{ coords: [number, number]; action: [number, number, number] }>,
  box: ChartBox,
  zeroThreshold = 1e-3,
): ScatterPoint[] {
  if (points.length === 0) return [];
  let maxAbs = 0;
  for (const p of points) {
    maxAbs = Math.max(maxAbs, Math.abs(p.coords[0]), Math.abs(p.coords[1]));
  }
  const scale = maxAbs === 0 ? 1 : maxAbs;
  return points.map((p) => {
    const mags = p.action.map(Math.abs);
    const dominant = Math.max(...mags);
    return {
      x: (p.coords[0] / scale) * (box.width / 2) + box.width / 2,
      y: box.height / 2 - (p.coords[1] / scale) * (box.height / 2),
      colorIndex: dominant < zeroThreshold ? -1 : mags.indexOf(dominant),
    };
  });
}

/** Sparkline for the deviation history. */
export function sparklinePath(scores: number[], box: ChartBox): string {
  if (scores.length === 0) return "";
  const max = Math.max(...scores, 1e-9);
  return curvePath(scores.map((s) => s / max), box, 1.0);
}
