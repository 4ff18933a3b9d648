#!/usr/bin/env node
/**
 * render_figures <run-dir> --out <fig-dir>
 *
 * Scans an mbsfuse output directory and renders every figure its CSVs
 * support: one CDF comparison (schemes found under <run-dir>/<scheme>/
 * cdf.csv), one error-series figure per scheme, exact-vs-linearized
 * histograms for any pdfstudy.csv, and range/angle heatmaps for any
 * mesh.csv. Figures are SVG and byte-stable for identical inputs.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { SCHEMAS, SchemaMismatch, Table, parseCsv } from "./csv.js";
import { cdfFigure, meshHeatmap, pdfHistFigure, seriesFigure } from "./figures.js";

function findFiles(root: string, name: string): string[] {
  const out: string[] = [];
  const walk = (dir: string) => {
    for (const entry of fs.readdirSync(dir, { withFileTypes: true })) {
      const p = path.join(dir, entry.name);
      if (entry.isDirectory()) walk(p);
      else if (entry.name === name) out.push(p);
    }
  };
  walk(root);
  return out.sort();
}

function readTable(file: string, schema: keyof typeof SCHEMAS): Table {
  return parseCsv(fs.readFileSync(file, "utf-8"), schema, file);
}

export function renderRunDir(runDir: string, outDir: string): string[] {
  if (!fs.existsSync(runDir)) {
    throw new Error(`run directory not found: ${runDir}`);
  }
  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  const emit = (name: string, svg: string) => {
    const p = path.join(outDir, name);
    fs.writeFileSync(p, svg);
    written.push(p);
  };

  const cdfFiles = findFiles(runDir, "cdf.csv");
  if (cdfFiles.length > 0) {
    const curves = new Map<string, Table>();
    for (const file of cdfFiles) {
      const scheme = path.basename(path.dirname(file));
      curves.set(scheme, readTable(file, "cdf.csv"));
    }
    emit("cdf_comparison.svg", cdfFigure(curves));
  }

  for (const file of findFiles(runDir, "errors.csv")) {
    const scheme = path.basename(path.dirname(file));
    emit(`series_${scheme}.svg`, seriesFigure(scheme, readTable(file, "errors.csv")));
  }

  for (const file of findFiles(runDir, "pdfstudy.csv")) {
    const table = readTable(file, "pdfstudy.csv");
    const tag = path.basename(path.dirname(file));
    emit(`pdf_hist_range_${tag}.svg`, pdfHistFigure("range", table));
    emit(`pdf_hist_angle_${tag}.svg`, pdfHistFigure("angle", table));
  }

  for (const file of findFiles(runDir, "mesh.csv")) {
    const table = readTable(file, "mesh.csv");
    const tag = path.basename(path.dirname(file));
    emit(`mesh_range_${tag}.svg`, meshHeatmap("range", table));
    emit(`mesh_angle_${tag}.svg`, meshHeatmap("angle", table));
  }

  if (written.length === 0) {
    throw new Error(`no renderable CSVs found under ${runDir}`);
  }
  return written;
}

function cliMain(argv: string[]): number {
  const args = argv.slice(2);
  let runDir: string | undefined;
  let outDir: string | undefined;
  for (let i = 0; i < args.length; i++) {
    if (args[i] === "--out") {
      outDir = args[++i];
    } else if (!args[i].startsWith("-") && runDir === undefined) {
      runDir = args[i];
    } else {
      console.error(`unknown argument: ${args[i]}`);
      return 2;
    }
  }
  if (!runDir || !outDir) {
    console.error("usage: render_figures <run-dir> --out <fig-dir>");
    return 2;
  }
  try {
    const written = renderRunDir(runDir, outDir);
    for (const p of written) console.log(p);
    console.log(`${written.length} figures written to ${outDir}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaMismatch) {
      console.error(String(err));
      return 3;
    }
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("main.js") || entry.endsWith("render_figures")) {
  process.exit(cliMain(process.argv));
}
