import { readFileSync } from "node:fs";

export const REQUIRED_COLUMNS = [
  "run_id",
  "strategy",
  "N",
  "R",
  "seed",
  "time_s",
  "time_over_tn",
  "mse",
  "coverage_fraction",
  "pearson_r",
] as const;

export interface MetricsRow {
  run_id: string;
  strategy: string;
  N: string;
  R: string;
  seed: string;
  time_s: number;
  time_over_tn: number;
  mse: number;
  coverage_fraction: number;
  pearson_r: number | null;
}

export class SchemaError extends Error {}

/** Parse an aggregate metrics CSV, verifying the exact column set. */
export function parseMetricsCsv(path: string): MetricsRow[] {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new SchemaError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  const header = lines[0].split(",");
  const missing = REQUIRED_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${path}: header is missing required column(s): ${missing.join(", ")}`
    );
  }
  if (lines.length === 1) {
    throw new SchemaError(`${path}: no data rows`);
  }
  const idx = new Map(header.map((name, i) => [name, i]));
  const rows: MetricsRow[] = [];
  for (let k = 1; k < lines.length; k++) {
    const parts = lines[k].split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(
        `${path}: line ${k + 1} has ${parts.length} fields, expected ${header.length}`
      );
    }
    const num = (name: string): number => {
      const v = Number(parts[idx.get(name)!]);
      if (!Number.isFinite(v)) {
        throw new SchemaError(`${path}: line ${k + 1}: ${name} is not numeric`);
      }
      return v;
    };
    const pearsonRaw = parts[idx.get("pearson_r")!];
    rows.push({
      run_id: parts[idx.get("run_id")!],
      strategy: parts[idx.get("strategy")!],
      N: parts[idx.get("N")!],
      R: parts[idx.get("R")!],
      seed: parts[idx.get("seed")!],
      time_s: num("time_s"),
      time_over_tn: num("time_over_tn"),
      mse: num("mse"),
      coverage_fraction: num("coverage_fraction"),
      pearson_r: pearsonRaw === "" ? null : num("pearson_r"),
    });
  }
  return rows;
}

/** Keep rows whose column equals the given value (string comparison). */
export function filterRows(
  rows: MetricsRow[],
  filters: Map<string, string>
): MetricsRow[] {
  return rows.filter((row) => {
    for (const [key, value] of filters) {
      if (!(key in row)) {
        throw new SchemaError(`unknown filter column: ${key}`);
      }
      if (String(row[key as keyof MetricsRow]) !== value) return false;
    }
    return true;
  });
}
