import { MetricsRow, SchemaError } from "./csv.js";

export interface GroupCurve {
  label: string;
  times: number[];
  mean: number[];
  std: number[];
  runs: number;
}

export interface GroupBar {
  label: string;
  mean: number;
  std: number;
  runs: number;
}

const groupKey = (r: MetricsRow) => `${r.strategy} N=${r.N} R=${r.R}`;

function meanStd(values: number[]): { mean: number; std: number } {
  const mean = values.reduce((a, b) => a + b, 0) / values.length;
  const varSum = values.reduce((a, b) => a + (b - mean) ** 2, 0);
  return { mean, std: Math.sqrt(varSum / values.length) };
}

/**
 * Per (strategy, N, R) group: mean and standard deviation across seeds of a
 * per-run time series.  Sample times within a group are identical across
 * seeds by construction of the runner, so grouping by exact time is sound.
 */
export function groupCurves(
  rows: MetricsRow[],
  value: (r: MetricsRow) => number | null
): GroupCurve[] {
  if (rows.length === 0) throw new SchemaError("no rows to plot (empty group)");
  const groups = new Map<string, Map<number, number[]>>();
  const runsPer = new Map<string, Set<string>>();
  for (const row of rows) {
    const v = value(row);
    if (v === null || !Number.isFinite(v)) continue;
    const key = groupKey(row);
    if (!groups.has(key)) {
      groups.set(key, new Map());
      runsPer.set(key, new Set());
    }
    const byTime = groups.get(key)!;
    if (!byTime.has(row.time_over_tn)) byTime.set(row.time_over_tn, []);
    byTime.get(row.time_over_tn)!.push(v);
    runsPer.get(key)!.add(row.run_id);
  }
  const curves: GroupCurve[] = [];
  for (const [label, byTime] of [...groups.entries()].sort()) {
    const times = [...byTime.keys()].sort((a, b) => a - b);
    const mean: number[] = [];
    const std: number[] = [];
    for (const t of times) {
      const s = meanStd(byTime.get(t)!);
      mean.push(s.mean);
      std.push(s.std);
    }
    curves.push({ label, times, mean, std, runs: runsPer.get(label)!.size });
  }
  if (curves.length === 0) {
    throw new SchemaError("no plottable values in the selected rows");
  }
  return curves;
}

/** First time_over_tn at which each run reaches full coverage. */
export function coverageTimes(rows: MetricsRow[]): GroupBar[] {
  if (rows.length === 0) throw new SchemaError("no rows to plot (empty group)");
  const perRun = new Map<string, { key: string; t: number }>();
  for (const row of rows) {
    if (row.coverage_fraction >= 1.0) {
      const cur = perRun.get(row.run_id);
      if (cur === undefined || row.time_over_tn < cur.t) {
        perRun.set(row.run_id, { key: groupKey(row), t: row.time_over_tn });
      }
    }
  }
  const byGroup = new Map<string, number[]>();
  for (const { key, t } of perRun.values()) {
    if (!byGroup.has(key)) byGroup.set(key, []);
    byGroup.get(key)!.push(t);
  }
  if (byGroup.size === 0) {
    throw new SchemaError("no run in the selection ever reaches full coverage");
  }
  const bars: GroupBar[] = [];
  for (const [label, ts] of [...byGroup.entries()].sort()) {
    const s = meanStd(ts);
    bars.push({ label, mean: s.mean, std: s.std, runs: ts.length });
  }
  return bars;
}
