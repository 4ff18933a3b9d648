import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { parseCsv } from "../src/csv.js";
import { cdfFigure, meshHeatmap, pdfHistFigure, seriesFigure } from "../src/figures.js";
import { renderRunDir } from "../src/main.js";

function fakeCdf(n: number, scale: number): string {
  const lines = ["error_m,quantile"];
  for (let i = 1; i <= n; i++) {
    lines.push(`${((scale * i) / n).toFixed(4)},${(i / n).toFixed(4)}`);
  }
  return lines.join("\n") + "\n";
}

function fakeErrors(n: number): string {
  const lines = ["t,error_m,n_bs"];
  for (let i = 0; i < n; i++) {
    const nbs = i % 17 === 0 ? 0 : 1 + (i % 3);
    lines.push(`${(i * 0.5).toFixed(1)},${(0.05 + 0.01 * (i % 50)).toFixed(3)},${nbs}`);
  }
  return lines.join("\n") + "\n";
}

function fakePdfStudy(n: number): string {
  const lines = ["sample_id,nonlinear_value,linearized_value,quantity"];
  for (let i = 0; i < n; i++) {
    const v = Math.sin(i * 0.7) * 0.5 + 1.0;
    lines.push(`${i},${v.toFixed(5)},${(v * 1.1).toFixed(5)},range`);
  }
  for (let i = 0; i < n; i++) {
    const v = Math.cos(i * 0.9) * 0.8;
    lines.push(`${i},${v.toFixed(5)},${(v * 0.7).toFixed(5)},angle`);
  }
  return lines.join("\n") + "\n";
}

function fakeMesh(): string {
  const lines = ["dx_m,dy_m,range_err_m,angle_err_rad"];
  for (let iy = 1; iy <= 10; iy++) {
    for (let ix = 1; ix <= 10; ix++) {
      lines.push(`${ix},${iy},${(1 / (ix + iy)).toFixed(5)},${(0.1 * ix).toFixed(5)}`);
    }
  }
  return lines.join("\n") + "\n";
}

describe("figure builders", () => {
  it("renders a CDF figure with one curve per scheme", () => {
    const curves = new Map([
      ["lc-kf", parseCsv(fakeCdf(50, 1.0), "cdf.csv")],
      ["tc-ekf", parseCsv(fakeCdf(50, 40.0), "cdf.csv")],
    ]);
    const svg = cdfFigure(curves);
    expect(svg).toContain("<svg");
    expect((svg.match(/<polyline/g) ?? []).length).toBe(2);
    expect(svg).toContain("lc-kf");
    expect(svg).toContain("tc-ekf");
  });

  it("renders an error series with dead-reckoning shading", () => {
    const svg = seriesFigure("lc-kf", parseCsv(fakeErrors(200), "errors.csv"));
    expect(svg).toContain("2D error over time: lc-kf");
    expect(svg).toContain("#f3d9d9");
  });

  it("renders overlaid histograms per quantity", () => {
    const table = parseCsv(fakePdfStudy(500), "pdfstudy.csv");
    const svgRange = pdfHistFigure("range", table);
    const svgAngle = pdfHistFigure("angle", table);
    expect(svgRange).toContain("linearized");
    expect(svgAngle).toContain("angle [rad]");
    expect(() => pdfHistFigure("power", table)).toThrow(/no rows/);
  });

  it("renders mesh heatmaps", () => {
    const table = parseCsv(fakeMesh(), "mesh.csv");
    const svg = meshHeatmap("angle", table);
    expect((svg.match(/<rect/g) ?? []).length).toBeGreaterThan(100);
  });
});

describe("renderRunDir", () => {
  let dir: string;

  beforeAll(() => {
    dir = fs.mkdtempSync(path.join(os.tmpdir(), "mbsfuse-fig-"));
    const run = path.join(dir, "run");
    for (const scheme of ["lc-kf", "tc-ekf", "tc-ekf-r", "tc-ukf", "tc-ukf-r"]) {
      fs.mkdirSync(path.join(run, scheme), { recursive: true });
      fs.writeFileSync(path.join(run, scheme, "cdf.csv"), fakeCdf(40, 2));
      fs.writeFileSync(path.join(run, scheme, "errors.csv"), fakeErrors(100));
    }
    fs.mkdirSync(path.join(run, "study-pdf"));
    fs.writeFileSync(path.join(run, "study-pdf", "pdfstudy.csv"), fakePdfStudy(300));
    fs.mkdirSync(path.join(run, "study-mesh"));
    fs.writeFileSync(path.join(run, "study-mesh", "mesh.csv"), fakeMesh());
  });

  afterAll(() => {
    fs.rmSync(dir, { recursive: true, force: true });
  });

  it("emits the full figure set and is byte-stable on rerender", () => {
    const run = path.join(dir, "run");
    const out1 = path.join(dir, "figs1");
    const out2 = path.join(dir, "figs2");
    const written1 = renderRunDir(run, out1);
    const written2 = renderRunDir(run, out2);
    expect(written1.length).toBeGreaterThanOrEqual(6);
    expect(written1.length).toBe(written2.length);
    for (let i = 0; i < written1.length; i++) {
      const a = fs.readFileSync(written1[i]);
      const b = fs.readFileSync(written2[i]);
      expect(a.equals(b)).toBe(true);
    }
  });

  it("fails loudly on a schema mismatch", () => {
    const bad = path.join(dir, "bad");
    fs.mkdirSync(path.join(bad, "lc-kf"), { recursive: true });
    fs.writeFileSync(path.join(bad, "lc-kf", "cdf.csv"), "error_m,frac\n1,1\n");
    expect(() => renderRunDir(bad, path.join(dir, "figs3"))).toThrow(/frac/);
  });

  it("rejects empty run directories", () => {
    const empty = path.join(dir, "empty");
    fs.mkdirSync(empty, { recursive: true });
    expect(() => renderRunDir(empty, path.join(dir, "figs4"))).toThrow(/no renderable/);
  });
});
