/**
 * CSV reading with schema validation for mbsfuse outputs.
 *
 * Every file the CLI writes starts with optional `#` comment lines,
 * then a header row. Schemas are versioned on the Python side; this
 * module hard-fails with a SchemaMismatch naming the offending column
 * rather than guessing.
 */

export const SCHEMAS = {
  "errors.csv": ["t", "error_m", "n_bs"],
  "metrics.csv": ["scheme", "rms_m", "max_m", "pct_lt_2m", "pct_lt_1m", "pct_lt_0p3m"],
  "cdf.csv": ["error_m", "quantile"],
  "pdfstudy.csv": ["sample_id", "nonlinear_value", "linearized_value", "quantity"],
  "mesh.csv": ["dx_m", "dy_m", "range_err_m", "angle_err_rad"],
} as const;

export type SchemaName = keyof typeof SCHEMAS;

export class SchemaMismatch extends Error {
  constructor(file: string, expected: readonly string[], found: string[]) {
    super(
      `schema mismatch in ${file}: expected columns [${expected.join(", ")}], ` +
        `found [${found.join(", ")}]`
    );
    this.name = "SchemaMismatch";
  }
}

export interface Table {
  columns: string[];
  rows: string[][];
}

export function parseCsv(text: string, schema: SchemaName, file: string = schema): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0 && !l.startsWith("#"));
  if (lines.length === 0) {
    throw new SchemaMismatch(file, SCHEMAS[schema], []);
  }
  const columns = lines[0].split(",");
  const expected = SCHEMAS[schema];
  if (columns.length !== expected.length || columns.some((c, i) => c !== expected[i])) {
    throw new SchemaMismatch(file, expected, columns);
  }
  const rows = lines.slice(1).map((l) => l.split(","));
  return { columns, rows };
}

export function numericColumn(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaMismatch("table", [name], table.columns);
  }
  return table.rows.map((r) => Number(r[idx]));
}

export function stringColumn(table: Table, name: string): string[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaMismatch("table", [name], table.columns);
  }
  return table.rows.map((r) => r[idx]);
}
