/**
 * Minimal deterministic SVG chart primitives.
 *
 * No DOM, no canvas: figures are assembled as strings with fixed
 * number formatting, so re-rendering identical inputs yields identical
 * bytes.
 */

export const WIDTH = 760;
export const HEIGHT = 480;
export const MARGIN = { top: 36, right: 24, bottom: 48, left: 64 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];

const f = (v: number) => (Number.isFinite(v) ? v.toFixed(2) : "0.00");

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  return scale;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const lo = Math.max(domain[0], 1e-6);
  const hi = Math.max(domain[1], lo * 10);
  const inner = linearScale([Math.log10(lo), Math.log10(hi)], range);
  const scale = ((v: number) => inner(Math.log10(Math.max(v, lo)))) as Scale;
  scale.domain = [lo, hi];
  return scale;
}

export function ticks(domain: [number, number], count = 6): number[] {
  const [lo, hi] = domain;
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / count / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += s) out.push(Number(v.toPrecision(12)));
  return out;
}

export function logTicks(domain: [number, number]): number[] {
  const out: number[] = [];
  const lo = Math.floor(Math.log10(Math.max(domain[0], 1e-6)));
  const hi = Math.ceil(Math.log10(Math.max(domain[1], 1e-5)));
  for (let e = lo; e <= hi; e++) out.push(Number(Math.pow(10, e).toPrecision(12)));
  return out;
}

export function tickLabel(v: number): string {
  if (v !== 0 && (Math.abs(v) < 0.01 || Math.abs(v) >= 10000)) {
    return v.toExponential(0);
  }
  return Number(v.toPrecision(6)).toString();
}

export interface Chart {
  x: Scale;
  y: Scale;
  body: string[];
}

export function openChart(
  title: string,
  xLabel: string,
  yLabel: string,
  x: Scale,
  y: Scale,
  xTicks: number[],
  yTicks: number[]
): Chart {
  const body: string[] = [];
  body.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`
  );
  body.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  body.push(
    `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15" font-weight="bold">${title}</text>`
  );
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  for (const t of xTicks) {
    const px = f(x(t));
    body.push(
      `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y1}" stroke="#e0e0e0" stroke-width="1"/>`
    );
    body.push(
      `<text x="${px}" y="${y0 + 18}" text-anchor="middle" font-size="11">${tickLabel(t)}</text>`
    );
  }
  for (const t of yTicks) {
    const py = f(y(t));
    body.push(
      `<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#e0e0e0" stroke-width="1"/>`
    );
    body.push(
      `<text x="${x0 - 6}" y="${py}" text-anchor="end" dominant-baseline="middle" font-size="11">${tickLabel(t)}</text>`
    );
  }
  body.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#444"/>`
  );
  body.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="12">${xLabel}</text>`
  );
  body.push(
    `<text x="20" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" ` +
      `transform="rotate(-90 20 ${(y0 + y1) / 2})">${yLabel}</text>`
  );
  return { x, y, body };
}

export function polyline(chart: Chart, xs: number[], ys: number[], color: string): void {
  const pts = xs.map((v, i) => `${f(chart.x(v))},${f(chart.y(ys[i]))}`).join(" ");
  chart.body.push(
    `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.8"/>`
  );
}

export function rect(
  chart: Chart,
  x0: number,
  y0v: number,
  x1: number,
  y1v: number,
  fill: string,
  opacity = 1
): void {
  const px = Math.min(chart.x(x0), chart.x(x1));
  const py = Math.min(chart.y(y0v), chart.y(y1v));
  const w = Math.abs(chart.x(x1) - chart.x(x0));
  const h = Math.abs(chart.y(y1v) - chart.y(y0v));
  chart.body.push(
    `<rect x="${f(px)}" y="${f(py)}" width="${f(w)}" height="${f(h)}" ` +
      `fill="${fill}" fill-opacity="${opacity}"/>`
  );
}

export function legend(chart: Chart, entries: [string, string][]): void {
  const x0 = WIDTH - MARGIN.right - 150;
  let y = MARGIN.top + 14;
  for (const [label, color] of entries) {
    chart.body.push(
      `<line x1="${x0}" y1="${y - 4}" x2="${x0 + 24}" y2="${y - 4}" stroke="${color}" stroke-width="2.5"/>`
    );
    chart.body.push(`<text x="${x0 + 30}" y="${y}" font-size="12">${label}</text>`);
    y += 18;
  }
}

export function closeChart(chart: Chart): string {
  return chart.body.join("\n") + "\n</svg>\n";
}
