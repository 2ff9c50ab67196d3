/** SVG scatter rendering: one panel per time window, colored by role label. */

import type { EmbeddingPoint } from "./tsne.js";

export interface LabeledPoint extends EmbeddingPoint {
  itemId: number;
  label: string;
  window: string;
}

export interface RenderStyle {
  width?: number;
  height?: number;
  pointRadius?: number;
  title?: string;
}

export const ROLE_COLORS: Record<string, string> = {
  LeftTroll: "#1f77b4",
  RightTroll: "#d62728",
  NewsFeed: "#2ca02c",
};
const FALLBACK_COLOR = "#7f7f7f";

export function colorFor(label: string): string {
  return ROLE_COLORS[label] ?? FALLBACK_COLOR;
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** One scatter panel; every point becomes one circle element. */
export function renderScatter(points: LabeledPoint[], style: RenderStyle = {}): string {
  if (points.length === 0) {
    throw new Error("refusing to render an empty embedding");
  }
  const { width = 640, height = 640, pointRadius = 3, title = "" } = style;
  const margin = 40;
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const sx = (x: number) => margin + ((x - xMin) / xSpan) * (width - 2 * margin);
  const sy = (y: number) => height - margin - ((y - yMin) / ySpan) * (height - 2 * margin);

  const seenLabels = [...new Set(points.map((p) => p.label))].sort();
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  if (title) {
    parts.push(
      `<text x="${width / 2}" y="24" text-anchor="middle" font-family="sans-serif" ` +
      `font-size="16">${escapeXml(title)}</text>`,
    );
  }
  for (const p of points) {
    parts.push(
      `<circle class="pt" cx="${sx(p.x).toFixed(2)}" cy="${sy(p.y).toFixed(2)}" ` +
      `r="${pointRadius}" fill="${colorFor(p.label)}" fill-opacity="0.75" ` +
      `data-item="${p.itemId}"/>`,
    );
  }
  seenLabels.forEach((label, i) => {
    const y = margin + i * 20;
    parts.push(`<circle cx="${width - margin - 100}" cy="${y}" r="5" fill="${colorFor(label)}"/>`);
    parts.push(
      `<text x="${width - margin - 88}" y="${y + 4}" font-family="sans-serif" ` +
      `font-size="12">${escapeXml(label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Coordinates TSV, one row per embedded item. */
export function coordinatesTsv(points: LabeledPoint[]): string {
  const lines = ["item_id\twindow\tlabel\tx\ty"];
  for (const p of points) {
    lines.push(`${p.itemId}\t${p.window}\t${p.label}\t${p.x.toPrecision(9)}\t${p.y.toPrecision(9)}`);
  }
  return lines.join("\n") + "\n";
}
