/**
 * Tiny deterministic SVG scene builder: linear scales, axes with ticks,
 * polylines, markers with error bars, filled cells. No randomness, no
 * timestamps, so identical inputs yield identical bytes.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_MARGIN: Margin = { top: 42, right: 24, bottom: 48, left: 64 };

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.range = range;
  return f;
}

export function extent(values: number[], pad = 0.05): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const w = hi - lo || Math.abs(hi) || 1;
  return [lo - pad * w, hi + pad * w];
}

export function ticks(domain: [number, number], n = 5): number[] {
  const [lo, hi] = domain;
  const span = hi - lo;
  if (span <= 0) return [lo];
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * mag);
  const step = candidates.find((s) => span / s <= n) ?? candidates[candidates.length - 1];
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return out;
}

export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2);
  return String(parseFloat(v.toPrecision(6)));
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/** Two-stop blue->yellow ramp for heatmap cells; u in [0, 1]. */
export function rampColor(u: number): string {
  const t = Math.max(0, Math.min(1, u));
  const lerp = (a: number, b: number) => Math.round(a + (b - a) * t);
  // dark blue (#20304c) to warm yellow (#f2cf3e)
  return `rgb(${lerp(32, 242)},${lerp(48, 207)},${lerp(76, 62)})`;
}

export class Svg {
  readonly width: number;
  readonly height: number;
  private parts: string[] = [];

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
  }

  raw(fragment: string): void {
    this.parts.push(fragment);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${r2(x1)}" y1="${r2(y1)}" x2="${r2(x2)}" y2="${r2(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(pts: Array<[number, number]>, stroke: string, width = 1.5, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    const s = pts.map(([x, y]) => `${r2(x)},${r2(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${s}" fill="none" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  circle(x: number, y: number, radius: number, fill: string): void {
    this.parts.push(`<circle cx="${r2(x)}" cy="${r2(y)}" r="${radius}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${r2(x)}" y="${r2(y)}" width="${r2(w)}" height="${r2(h)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, s: string, opts: { size?: number; anchor?: string; fill?: string; rotate?: number } = {}): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? "#222";
    const rot = opts.rotate ? ` transform="rotate(${opts.rotate} ${r2(x)} ${r2(y)})"` : "";
    this.parts.push(
      `<text x="${r2(x)}" y="${r2(y)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}" font-family="sans-serif"${rot}>${esc(s)}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function r2(v: number): string {
  return (Math.round(v * 100) / 100).toString();
}

export interface AxisLabels {
  x: string;
  y: string;
  title?: string;
}

/** Draw frame, ticks and labels; returns the x/y scales for the data area. */
export function frame(
  svg: Svg,
  xDomain: [number, number],
  yDomain: [number, number],
  labels: AxisLabels,
  margin: Margin = DEFAULT_MARGIN,
): { x: Scale; y: Scale } {
  const x = linearScale(xDomain, [margin.left, svg.width - margin.right]);
  const y = linearScale(yDomain, [svg.height - margin.bottom, margin.top]);
  const x0 = margin.left;
  const x1 = svg.width - margin.right;
  const y0 = svg.height - margin.bottom;
  const y1 = margin.top;
  svg.line(x0, y0, x1, y0, "#222");
  svg.line(x0, y0, x0, y1, "#222");
  for (const t of ticks(xDomain)) {
    svg.line(x(t), y0, x(t), y0 + 5, "#222");
    svg.text(x(t), y0 + 18, fmt(t), { anchor: "middle", size: 11 });
  }
  for (const t of ticks(yDomain)) {
    svg.line(x0 - 5, y(t), x0, y(t), "#222");
    svg.text(x0 - 8, y(t) + 4, fmt(t), { anchor: "end", size: 11 });
  }
  svg.text((x0 + x1) / 2, svg.height - 10, labels.x, { anchor: "middle" });
  svg.text(16, (y0 + y1) / 2, labels.y, { anchor: "middle", rotate: -90 });
  if (labels.title) {
    svg.text((x0 + x1) / 2, 22, labels.title, { anchor: "middle", size: 14 });
  }
  return { x, y };
}

/** Vertical error bar at pixel x for data value y +/- half. */
export function errorBar(svg: Svg, px: number, y: number, half: number, yScale: Scale, color: string): void {
  if (half <= 0 || !Number.isFinite(half)) return;
  const yLo = yScale(y - half);
  const yHi = yScale(y + half);
  svg.line(px, yLo, px, yHi, color, 1);
  svg.line(px - 3, yLo, px + 3, yLo, color, 1);
  svg.line(px - 3, yHi, px + 3, yHi, color, 1);
}
