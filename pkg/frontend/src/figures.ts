/**
 * Figure builders: each takes parsed CSV tables and returns SVG text.
 */

import { Table, numericColumn, stringColumn } from "./csv.js";
import {
  Chart,
  PALETTE,
  closeChart,
  legend,
  linearScale,
  logScale,
  logTicks,
  openChart,
  polyline,
  rect,
  ticks,
  HEIGHT,
  MARGIN,
  WIDTH,
} from "./svg.js";

const plotRange: [number, number] = [MARGIN.left, WIDTH - MARGIN.right];
const plotRangeY: [number, number] = [HEIGHT - MARGIN.bottom, MARGIN.top];

/** CDF comparison across schemes, log error axis. */
export function cdfFigure(curves: Map<string, Table>): string {
  let maxErr = 1.0;
  for (const table of curves.values()) {
    const errs = numericColumn(table, "error_m");
    if (errs.length) maxErr = Math.max(maxErr, errs[errs.length - 1]);
  }
  const x = logScale([0.01, maxErr], plotRange);
  const y = linearScale([0, 1], plotRangeY);
  const chart = openChart(
    "2D positioning error CDF",
    "2D error [m]",
    "fraction of epochs",
    x,
    y,
    logTicks(x.domain),
    ticks([0, 1], 5)
  );
  const entries: [string, string][] = [];
  let i = 0;
  for (const [scheme, table] of curves) {
    const color = PALETTE[i % PALETTE.length];
    i += 1;
    const errs = numericColumn(table, "error_m").map((v) => Math.max(v, 0.01));
    const qs = numericColumn(table, "quantile");
    polyline(chart, errs, qs, color);
    entries.push([scheme, color]);
  }
  legend(chart, entries);
  return closeChart(chart);
}

/** Per-scheme error-vs-time series with the admitted-BS count strip. */
export function seriesFigure(scheme: string, table: Table): string {
  const t = numericColumn(table, "t");
  const err = numericColumn(table, "error_m").map((v) => Math.max(v, 1e-4));
  const nbs = numericColumn(table, "n_bs");
  const x = linearScale([t[0], t[t.length - 1] || 1], plotRange);
  const y = logScale([1e-4, Math.max(...err, 1)], plotRangeY);
  const chart = openChart(
    `2D error over time: ${scheme}`,
    "time [s]",
    "2D error [m]",
    x,
    y,
    ticks(x.domain),
    logTicks(y.domain)
  );
  // shade epochs with zero usable BSs (dead reckoning)
  for (let i = 0; i < t.length; i++) {
    if (nbs[i] === 0) {
      const x0 = i > 0 ? (t[i - 1] + t[i]) / 2 : t[i];
      const x1 = i + 1 < t.length ? (t[i] + t[i + 1]) / 2 : t[i];
      rect(chart, x0, y.domain[0], x1, y.domain[1], "#f3d9d9", 0.8);
    }
  }
  polyline(chart, t, err, PALETTE[0]);
  return closeChart(chart);
}

function histogram(values: number[], bins: number): { edges: number[]; counts: number[] } {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  const edges = Array.from({ length: bins + 1 }, (_, i) => lo + (span * i) / bins);
  const counts = new Array(bins).fill(0);
  for (const v of values) {
    let k = Math.floor(((v - lo) / span) * bins);
    if (k >= bins) k = bins - 1;
    if (k < 0) k = 0;
    counts[k] += 1;
  }
  return { edges, counts };
}

/** Overlaid exact-vs-linearized histograms for one transformed quantity. */
export function pdfHistFigure(quantity: string, table: Table, bins = 80): string {
  const q = stringColumn(table, "quantity");
  const nl: number[] = [];
  const lin: number[] = [];
  const nlCol = numericColumn(table, "nonlinear_value");
  const linCol = numericColumn(table, "linearized_value");
  for (let i = 0; i < q.length; i++) {
    if (q[i] === quantity) {
      nl.push(nlCol[i]);
      lin.push(linCol[i]);
    }
  }
  if (nl.length === 0) {
    throw new Error(`pdfstudy.csv has no rows for quantity ${quantity}`);
  }
  const all = nl.concat(lin);
  const { edges: allEdges } = histogram(all, bins);
  const lo = allEdges[0];
  const hi = allEdges[allEdges.length - 1];
  const binify = (vals: number[]) => {
    const counts = new Array(bins).fill(0);
    for (const v of vals) {
      let k = Math.floor(((v - lo) / (hi - lo || 1)) * bins);
      if (k >= bins) k = bins - 1;
      if (k < 0) k = 0;
      counts[k] += 1;
    }
    return counts;
  };
  const nlCounts = binify(nl);
  const linCounts = binify(lin);
  const peak = Math.max(...nlCounts, ...linCounts);
  const unit = quantity === "angle" ? "rad" : "m";
  const x = linearScale([lo, hi], plotRange);
  const y = linearScale([0, peak * 1.05], plotRangeY);
  const chart = openChart(
    `Transformed ${quantity} distribution: exact vs linearized`,
    `${quantity} [${unit}]`,
    "samples per bin",
    x,
    y,
    ticks([lo, hi], 6),
    ticks([0, peak], 5)
  );
  for (let k = 0; k < bins; k++) {
    const x0 = lo + ((hi - lo) * k) / bins;
    const x1 = lo + ((hi - lo) * (k + 1)) / bins;
    if (nlCounts[k] > 0) rect(chart, x0, 0, x1, nlCounts[k], PALETTE[0], 0.55);
    if (linCounts[k] > 0) rect(chart, x0, 0, x1, linCounts[k], PALETTE[1], 0.55);
  }
  legend(chart, [
    ["exact model", PALETTE[0]],
    ["linearized", PALETTE[1]],
  ]);
  return closeChart(chart);
}

/** Heatmap of first-order model error over the offset mesh. */
export function meshHeatmap(which: "range" | "angle", table: Table): string {
  const dx = numericColumn(table, "dx_m");
  const dy = numericColumn(table, "dy_m");
  const err = numericColumn(table, which === "range" ? "range_err_m" : "angle_err_rad");
  const xs = [...new Set(dx)].sort((a, b) => a - b);
  const ys = [...new Set(dy)].sort((a, b) => a - b);
  const stepX = xs.length > 1 ? xs[1] - xs[0] : 1;
  const stepY = ys.length > 1 ? ys[1] - ys[0] : 1;
  const x = linearScale([xs[0] - stepX / 2, xs[xs.length - 1] + stepX / 2], plotRange);
  const y = linearScale([ys[0] - stepY / 2, ys[ys.length - 1] + stepY / 2], plotRangeY);
  const unit = which === "range" ? "m" : "rad";
  const peak = Math.max(...err.filter((v) => Number.isFinite(v)), 1e-12);
  const chart = openChart(
    `First-order ${which} error over UE offsets (peak ${peak.toPrecision(3)} ${unit})`,
    "east offset [m]",
    "north offset [m]",
    x,
    y,
    ticks(x.domain),
    ticks(y.domain)
  );
  for (let i = 0; i < err.length; i++) {
    if (!Number.isFinite(err[i])) continue;
    // log-compressed intensity: errors span many orders of magnitude
    const rel = Math.log10(1 + (9 * err[i]) / peak);
    const shade = Math.round(245 - 215 * rel);
    chart.body.push(
      `<rect x="${chart.x(dx[i] - stepX / 2).toFixed(2)}" ` +
        `y="${chart.y(dy[i] + stepY / 2).toFixed(2)}" ` +
        `width="${(chart.x(dx[i] + stepX / 2) - chart.x(dx[i] - stepX / 2)).toFixed(2)}" ` +
        `height="${(chart.y(dy[i] - stepY / 2) - chart.y(dy[i] + stepY / 2)).toFixed(2)}" ` +
        `fill="rgb(${shade},${Math.round(shade * 0.55 + 90)},255)"/>`
    );
  }
  return closeChart(chart);
}
