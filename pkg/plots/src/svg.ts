/** Minimal SVG chart builder: enough for curves with bands and bar charts. */

export const WIDTH = 840;
export const HEIGHT = 520;
export const MARGIN = { left: 70, right: 170, top: 40, bottom: 55 };

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export interface Scale {
  (v: number): number;
  min: number;
  max: number;
}

export function makeScale(min: number, max: number, a: number, b: number): Scale {
  const span = max - min || 1;
  const f = ((v: number) => a + ((v - min) / span) * (b - a)) as Scale;
  f.min = min;
  f.max = max;
  return f;
}

export function niceTicks(min: number, max: number, count = 6): number[] {
  const span = max - min || 1;
  const step0 = span / count;
  const mag = 10 ** Math.floor(Math.log10(step0));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count) ?? mag * 10;
  const start = Math.ceil(min / step) * step;
  const out: number[] = [];
  for (let v = start; v <= max + 1e-12; v += step) out.push(Number(v.toPrecision(12)));
  return out;
}

const fmt = (v: number) =>
  Math.abs(v) >= 1000 || (v !== 0 && Math.abs(v) < 0.01)
    ? v.toExponential(1)
    : String(Number(v.toPrecision(4)));

export class SvgChart {
  private parts: string[] = [];
  readonly plotLeft = MARGIN.left;
  readonly plotRight = WIDTH - MARGIN.right;
  readonly plotTop = MARGIN.top;
  readonly plotBottom = HEIGHT - MARGIN.bottom;
  private legendRow = 0;

  constructor(title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
        `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="13">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="16">${esc(title)}</text>`
    );
  }

  axes(
    x: Scale,
    y: Scale,
    xLabel: string,
    yLabel: string,
    logY = false,
    xTicks = true
  ): void {
    const { plotLeft: l, plotRight: r, plotTop: t, plotBottom: b } = this;
    this.parts.push(
      `<line x1="${l}" y1="${b}" x2="${r}" y2="${b}" stroke="black"/>`,
      `<line x1="${l}" y1="${t}" x2="${l}" y2="${b}" stroke="black"/>`
    );
    for (const v of xTicks ? niceTicks(x.min, x.max) : []) {
      const px = x(v);
      this.parts.push(
        `<line x1="${px}" y1="${b}" x2="${px}" y2="${b + 5}" stroke="black"/>`,
        `<text x="${px}" y="${b + 20}" text-anchor="middle">${fmt(v)}</text>`,
        `<line x1="${px}" y1="${t}" x2="${px}" y2="${b}" stroke="#eeeeee"/>`
      );
    }
    const yTicks = logY
      ? niceTicks(y.min, y.max, 6).concat()
      : niceTicks(y.min, y.max);
    for (const v of yTicks) {
      const py = y(v);
      const label = logY ? fmt(10 ** v) : fmt(v);
      this.parts.push(
        `<line x1="${l - 5}" y1="${py}" x2="${l}" y2="${py}" stroke="black"/>`,
        `<text x="${l - 8}" y="${py + 4}" text-anchor="end">${label}</text>`,
        `<line x1="${l}" y1="${py}" x2="${r}" y2="${py}" stroke="#eeeeee"/>`
      );
    }
    this.parts.push(
      `<text x="${(l + r) / 2}" y="${HEIGHT - 12}" text-anchor="middle">${esc(xLabel)}</text>`,
      `<text x="18" y="${(t + b) / 2}" text-anchor="middle" ` +
        `transform="rotate(-90 18 ${(t + b) / 2})">${esc(yLabel)}</text>`
    );
  }

  band(xs: number[], lo: number[], hi: number[], color: string): void {
    const fwd = xs.map((v, i) => `${v},${lo[i]}`);
    const back = xs.map((v, i) => `${v},${hi[i]}`).reverse();
    this.parts.push(
      `<polygon points="${fwd.concat(back).join(" ")}" fill="${color}" ` +
        `fill-opacity="0.15" stroke="none"/>`
    );
  }

  line(xs: number[], ys: number[], color: string, dashed = false): void {
    const pts = xs.map((v, i) => `${v},${ys[i]}`).join(" ");
    const dash = dashed ? ` stroke-dasharray="7 4"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.8"${dash}/>`
    );
  }

  bar(px: number, width: number, pyTop: number, pyBase: number, color: string): void {
    this.parts.push(
      `<rect x="${px}" y="${pyTop}" width="${width}" height="${pyBase - pyTop}" ` +
        `fill="${color}" fill-opacity="0.8"/>`
    );
  }

  whisker(px: number, py1: number, py2: number): void {
    this.parts.push(
      `<line x1="${px}" y1="${py1}" x2="${px}" y2="${py2}" stroke="black"/>`,
      `<line x1="${px - 4}" y1="${py1}" x2="${px + 4}" y2="${py1}" stroke="black"/>`,
      `<line x1="${px - 4}" y1="${py2}" x2="${px + 4}" y2="${py2}" stroke="black"/>`
    );
  }

  tickLabel(px: number, text: string): void {
    this.parts.push(
      `<text x="${px}" y="${this.plotBottom + 18}" text-anchor="end" font-size="11" ` +
        `transform="rotate(-30 ${px} ${this.plotBottom + 18})">${esc(text)}</text>`
    );
  }

  legend(label: string, color: string, dashed = false): void {
    const x = this.plotRight + 12;
    const y = this.plotTop + 10 + this.legendRow * 20;
    const dash = dashed ? ` stroke-dasharray="7 4"` : "";
    this.parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" stroke="${color}" stroke-width="2"${dash}/>`,
      `<text x="${x + 28}" y="${y + 4}" font-size="12">${esc(label)}</text>`
    );
    this.legendRow += 1;
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}
