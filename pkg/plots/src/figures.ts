import { MetricsRow, SchemaError } from "./csv.js";
import { GroupCurve, coverageTimes, groupCurves } from "./stats.js";
import { PALETTE, SvgChart, makeScale } from "./svg.js";

export type FigureKind = "mse" | "coverage" | "correlation";

const BASELINE = "preplanned";

function isBaseline(label: string): boolean {
  return label.startsWith(BASELINE);
}

/** Map-error curves on a log scale, pre-planned sweeps drawn dashed. */
function renderMse(rows: MetricsRow[]): string {
  const curves = groupCurves(rows, (r) => r.mse);
  const chart = new SvgChart("Aggregated map error vs. normalized time");
  const logSafe = (v: number) => Math.log10(Math.max(v, 1e-6));
  let tMax = 0;
  let lo = Infinity;
  let hi = -Infinity;
  for (const c of curves) {
    tMax = Math.max(tMax, ...c.times);
    for (let i = 0; i < c.mean.length; i++) {
      lo = Math.min(lo, logSafe(Math.max(c.mean[i] - c.std[i], 1e-6)));
      hi = Math.max(hi, logSafe(c.mean[i] + c.std[i]));
    }
  }
  const x = makeScale(0, tMax, chart.plotLeft, chart.plotRight);
  const y = makeScale(lo - 0.1, hi + 0.1, chart.plotBottom, chart.plotTop);
  chart.axes(x, y, "time / t_n", "map MSE (log scale)", true);
  curves.forEach((c, k) => {
    const color = PALETTE[k % PALETTE.length];
    const xs = c.times.map(x);
    if (!isBaseline(c.label)) {
      chart.band(
        xs,
        c.mean.map((m, i) => y(logSafe(Math.max(m - c.std[i], 1e-6)))),
        c.mean.map((m, i) => y(logSafe(m + c.std[i]))),
        color
      );
    }
    chart.line(xs, c.mean.map((m) => y(logSafe(m))), color, isBaseline(c.label));
    chart.legend(`${c.label} (${c.runs} runs)`, color, isBaseline(c.label));
  });
  return chart.render();
}

/** Mean time to full coverage per group, in units of t_n. */
function renderCoverage(rows: MetricsRow[]): string {
  const bars = coverageTimes(rows.filter((r) => !r.strategy.startsWith(BASELINE)));
  const chart = new SvgChart("Time to full coverage, by strategy and group size");
  const top = Math.max(...bars.map((b) => b.mean + b.std)) * 1.1;
  const y = makeScale(0, top, chart.plotBottom, chart.plotTop);
  const x = makeScale(0, bars.length, chart.plotLeft, chart.plotRight);
  chart.axes(x, y, "", "coverage time / t_n", false, false);
  const slot = (chart.plotRight - chart.plotLeft) / bars.length;
  bars.forEach((b, k) => {
    const color = PALETTE[k % PALETTE.length];
    const cx = chart.plotLeft + slot * (k + 0.5);
    chart.bar(cx - slot * 0.3, slot * 0.6, y(b.mean), y(0), color);
    chart.whisker(cx, y(Math.max(b.mean - b.std, 0)), y(b.mean + b.std));
    chart.tickLabel(cx, b.label);
    chart.legend(`${b.label} (${b.runs} runs)`, color);
  });
  return chart.render();
}

/** Weeds-vs-observation-effort correlation curves. */
function renderCorrelation(rows: MetricsRow[]): string {
  const curves = groupCurves(
    rows.filter((r) => !r.strategy.startsWith(BASELINE)),
    (r) => r.pearson_r
  );
  const chart = new SvgChart("Correlation of observation effort with weed counts");
  let tMax = 0;
  for (const c of curves) tMax = Math.max(tMax, ...c.times);
  const x = makeScale(0, tMax, chart.plotLeft, chart.plotRight);
  const y = makeScale(-0.2, 1.0, chart.plotBottom, chart.plotTop);
  chart.axes(x, y, "time / t_n", "Pearson r");
  curves.forEach((c, k) => {
    const color = PALETTE[k % PALETTE.length];
    const xs = c.times.map(x);
    chart.band(
      xs,
      c.mean.map((m, i) => y(Math.max(m - c.std[i], -0.2))),
      c.mean.map((m, i) => y(Math.min(m + c.std[i], 1.0))),
      color
    );
    chart.line(xs, c.mean.map((m) => y(m)), color);
    chart.legend(`${c.label} (${c.runs} runs)`, color);
  });
  return chart.render();
}

export function renderFigure(kind: FigureKind, rows: MetricsRow[]): string {
  switch (kind) {
    case "mse":
      return renderMse(rows);
    case "coverage":
      return renderCoverage(rows);
    case "correlation":
      return renderCorrelation(rows);
    default:
      throw new SchemaError(`unknown figure kind: ${kind as string}`);
  }
}
