/** SVG line chart for the per-sentence score histogram.
 *
 * Three aligned series (combined, entity, aspect) over sentence index.
 * Series values are plotted as-is; only the axis mapping scales them.
 * The sentence with the highest combined score gets a marked band, and
 * every sentence position carries a hover hit-area with data-idx.
 */

import { HistogramResponse } from "./api.js";

export interface ChartGeometry {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = {
  width: 640,
  height: 220,
  padLeft: 36,
  padRight: 10,
  padTop: 10,
  padBottom: 22,
};

export const SERIES: Array<{ key: "combined" | "entity" | "aspect"; color: string }> = [
  { key: "combined", color: "#111827" },
  { key: "entity", color: "#2563eb" },
  { key: "aspect", color: "#d97706" },
];

export function argmax(values: number[]): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    const v = values[i]!;
    if (v > values[best]!) best = i;
  }
  return best;
}

function scaler(hist: HistogramResponse, geo: ChartGeometry) {
  const all = [...hist.combined, ...hist.entity, ...hist.aspect];
  const lo = Math.min(-0.05, ...all);
  const hi = Math.max(0.05, ...all);
  const n = hist.sentences.length;
  const innerW = geo.width - geo.padLeft - geo.padRight;
  const innerH = geo.height - geo.padTop - geo.padBottom;
  const x = (i: number) => geo.padLeft + (n <= 1 ? innerW / 2 : (i / (n - 1)) * innerW);
  const y = (v: number) => geo.padTop + (1 - (v - lo) / (hi - lo)) * innerH;
  return { x, y, lo, hi };
}

function polyline(values: number[], color: string, x: (i: number) => number, y: (v: number) => number): string {
  const points = values.map((v, i) => `${x(i).toFixed(1)},${y(v).toFixed(1)}`).join(" ");
  return `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${points}"/>`;
}

export function buildHistogramSvg(
  hist: HistogramResponse,
  geo: ChartGeometry = DEFAULT_GEOMETRY,
): string {
  const n = hist.sentences.length;
  if (n === 0) return `<svg class="histogram" width="${geo.width}" height="${geo.height}"></svg>`;
  const { x, y, lo, hi } = scaler(hist, geo);
  const parts: string[] = [];
  parts.push(
    `<svg class="histogram" width="${geo.width}" height="${geo.height}" viewBox="0 0 ${geo.width} ${geo.height}">`,
  );
  // zero line and scale labels
  if (lo < 0 && hi > 0) {
    parts.push(
      `<line x1="${geo.padLeft}" y1="${y(0).toFixed(1)}" x2="${geo.width - geo.padRight}" ` +
        `y2="${y(0).toFixed(1)}" stroke="#d1d5db" stroke-dasharray="4 3"/>`,
    );
  }
  parts.push(
    `<text x="2" y="${y(hi).toFixed(1)}" font-size="10" fill="#6b7280">${hi.toFixed(2)}</text>`,
    `<text x="2" y="${y(lo).toFixed(1)}" font-size="10" fill="#6b7280">${lo.toFixed(2)}</text>`,
  );
  // arg-max band of the combined curve
  const peak = argmax(hist.combined);
  const half = n <= 1 ? 20 : (x(1) - x(0)) / 2;
  parts.push(
    `<rect class="argmax" x="${(x(peak) - half).toFixed(1)}" y="${geo.padTop}" ` +
      `width="${(2 * half).toFixed(1)}" height="${geo.height - geo.padTop - geo.padBottom}" ` +
      `fill="#fde68a" opacity="0.5"/>`,
  );
  for (const series of SERIES) {
    parts.push(polyline(hist[series.key], series.color, x, y));
  }
  // hover hit areas, one per sentence
  for (let i = 0; i < n; i++) {
    parts.push(
      `<rect class="hit" data-idx="${i}" x="${(x(i) - half).toFixed(1)}" y="0" ` +
        `width="${(2 * half).toFixed(1)}" height="${geo.height}" fill="transparent"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
