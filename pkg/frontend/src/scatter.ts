// Window scatter views: amount against hour-of-day and against date, the
// suspect transaction visually separated. Geometry is computed here as pure
// data and rendered to an SVG string, so both halves test without a DOM.

import type { TransactionWire } from "./types.js";

export interface ScatterPoint {
  id: number;
  x: number;
  y: number; // log10(amount + 1); raw spans too many decades for linear axes
  flagged: boolean;
  label: string;
}

export interface ScatterData {
  points: ScatterPoint[];
  xLabel: string;
  yLabel: string;
  xTicks: { at: number; label: string }[];
  yTicks: { at: number; label: string }[];
}

const Y_LABEL = "amount (log scale)";

function yOf(t: TransactionWire): number {
  return Math.log10(Math.max(t.affective_amount, 0) + 1);
}

function amountTicks(points: ScatterPoint[]): { at: number; label: string }[] {
  if (points.length === 0) return [];
  const lo = Math.floor(Math.min(...points.map((p) => p.y)));
  const hi = Math.ceil(Math.max(...points.map((p) => p.y)));
  const ticks = [];
  for (let d = lo; d <= hi; d++) {
    ticks.push({ at: d, label: d >= 7 ? `1e${d}` : (10 ** d).toLocaleString("en-US") });
  }
  return ticks;
}

export function amountVsHour(
  window: TransactionWire[],
  suspectId: number | null,
): ScatterData {
  const points = window.map((t) => ({
    id: t.id,
    x: t.trx_time,
    y: yOf(t),
    flagged: t.id === suspectId,
    label: `#${t.id} ${t.merchant_id} ${t.affective_amount.toLocaleString("en-US")} @ ${t.trx_time}:00`,
  }));
  const hours = [0, 6, 12, 18, 23];
  return {
    points,
    xLabel: "hour of day",
    yLabel: Y_LABEL,
    xTicks: hours.map((h) => ({ at: h, label: `${h}` })),
    yTicks: amountTicks(points),
  };
}

/** Days since the earliest transaction in the window. */
function dayOffset(iso: string, epoch: string): number {
  return (Date.parse(iso) - Date.parse(epoch)) / 86_400_000;
}

export function amountVsDate(
  window: TransactionWire[],
  suspectId: number | null,
): ScatterData {
  if (window.length === 0) {
    return { points: [], xLabel: "date", yLabel: Y_LABEL, xTicks: [], yTicks: [] };
  }
  const epoch = [...window].map((t) => t.trx_date).sort()[0]!;
  const points = window.map((t) => ({
    id: t.id,
    x: dayOffset(t.trx_date, epoch),
    y: yOf(t),
    flagged: t.id === suspectId,
    label: `#${t.id} ${t.merchant_id} ${t.affective_amount.toLocaleString("en-US")} on ${t.trx_date}`,
  }));
  const span = Math.max(...points.map((p) => p.x));
  const step = Math.max(1, Math.ceil(span / 4));
  const xTicks = [];
  for (let d = 0; d <= span; d += step) {
    const dt = new Date(Date.parse(epoch) + d * 86_400_000);
    xTicks.push({ at: d, label: dt.toISOString().slice(5, 10) });
  }
  return { points, xLabel: "date", yLabel: Y_LABEL, xTicks, yTicks: amountTicks(points) };
}

const W = 460;
const H = 220;
const M = { top: 10, right: 14, bottom: 34, left: 56 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function renderScatterSVG(data: ScatterData, title: string): string {
  const iw = W - M.left - M.right;
  const ih = H - M.top - M.bottom;
  const xs = data.points.map((p) => p.x);
  const ys = data.points.map((p) => p.y);
  const xMin = Math.min(0, ...xs);
  const xMax = Math.max(1, ...xs);
  const yMin = Math.min(...(ys.length ? ys : [0]));
  const yMax = Math.max(...(ys.length ? ys : [1]));
  const yPad = (yMax - yMin || 1) * 0.08;
  const sx = (x: number) => M.left + ((x - xMin) / (xMax - xMin || 1)) * iw;
  const sy = (y: number) =>
    M.top + ih - ((y - (yMin - yPad)) / (yMax + yPad - (yMin - yPad))) * ih;

  const parts: string[] = [];
  parts.push(
    `<svg class="scatter" viewBox="0 0 ${W} ${H}" role="img" aria-label="${esc(title)}">`,
  );
  parts.push(
    `<rect x="${M.left}" y="${M.top}" width="${iw}" height="${ih}" class="plot-bg"/>`,
  );
  for (const t of data.xTicks) {
    if (t.at < xMin || t.at > xMax) continue;
    const x = sx(t.at);
    parts.push(`<line x1="${x}" y1="${M.top}" x2="${x}" y2="${M.top + ih}" class="grid"/>`);
    parts.push(`<text x="${x}" y="${H - 16}" class="tick" text-anchor="middle">${esc(t.label)}</text>`);
  }
  for (const t of data.yTicks) {
    const y = sy(t.at);
    if (y < M.top || y > M.top + ih) continue;
    parts.push(`<line x1="${M.left}" y1="${y}" x2="${M.left + iw}" y2="${y}" class="grid"/>`);
    parts.push(`<text x="${M.left - 6}" y="${y + 3}" class="tick" text-anchor="end">${esc(t.label)}</text>`);
  }
  parts.push(
    `<text x="${M.left + iw / 2}" y="${H - 2}" class="axis" text-anchor="middle">${esc(data.xLabel)}</text>`,
  );
  parts.push(
    `<text x="12" y="${M.top + ih / 2}" class="axis" text-anchor="middle" transform="rotate(-90 12 ${M.top + ih / 2})">${esc(data.yLabel)}</text>`,
  );
  // normal points first so the suspect draws on top
  const ordered = [...data.points].sort((a, b) => Number(a.flagged) - Number(b.flagged));
  for (const p of ordered) {
    const cls = p.flagged ? "pt flagged" : "pt";
    const r = p.flagged ? 6 : 3;
    parts.push(
      `<circle cx="${sx(p.x).toFixed(1)}" cy="${sy(p.y).toFixed(1)}" r="${r}" class="${cls}"><title>${esc(p.label)}</title></circle>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
