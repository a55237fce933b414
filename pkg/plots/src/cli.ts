import { writeFileSync } from "node:fs";
import { SchemaError, filterRows, parseMetricsCsv } from "./csv.js";
import { FigureKind, renderFigure } from "./figures.js";

const USAGE = `usage: plots <mse|coverage|correlation> <aggregate.csv> -o <out.svg> [--filter key=value ...]

Renders one figure family from a swarmmap aggregate metrics CSV.
  mse          mean map error with std bands, pre-planned sweep dashed
  coverage     bar chart of mean time to full coverage per group
  correlation  weeds-vs-observations Pearson r over time
Filters restrict rows by exact column value, e.g. --filter N=50 --filter R=inf.`;

export function runCli(argv: string[]): number {
  const args = [...argv];
  const filters = new Map<string, string>();
  let output: string | null = null;
  const positional: string[] = [];
  while (args.length > 0) {
    const a = args.shift()!;
    if (a === "-o" || a === "--output") {
      output = args.shift() ?? null;
    } else if (a === "--filter") {
      const kv = args.shift();
      const eq = kv?.indexOf("=") ?? -1;
      if (!kv || eq <= 0) {
        console.error("--filter expects key=value");
        return 2;
      }
      filters.set(kv.slice(0, eq), kv.slice(eq + 1));
    } else if (a === "-h" || a === "--help") {
      console.log(USAGE);
      return 0;
    } else {
      positional.push(a);
    }
  }
  if (positional.length !== 2 || output === null) {
    console.error(USAGE);
    return 2;
  }
  const [kind, csvPath] = positional;
  if (!["mse", "coverage", "correlation"].includes(kind)) {
    console.error(`unknown figure: ${kind}\n${USAGE}`);
    return 2;
  }
  try {
    const rows = filterRows(parseMetricsCsv(csvPath), filters);
    const svg = renderFigure(kind as FigureKind, rows);
    writeFileSync(output, svg);
    console.log(`wrote ${output}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(runCli(process.argv.slice(2)));
}
