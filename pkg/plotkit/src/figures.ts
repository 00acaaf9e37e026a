/**
 * The four figure kinds, each a pure function from validated tables to an
 * SVG string. All estimates (central charges, exponents, fitted slopes,
 * crossing points, nu) come from the analysis JSON that accompanies the
 * CSV; nothing is refitted here.
 *
 * Input schemas (long-format campaign outputs):
 *   central-charge  CSV  theta,c_ent,c_ent_err
 *   cumulants       CSV  L,l,order,value,stderr   + fit JSON (slope/intercept per order)
 *   collapse        CSV  theta,u,L,mean,stderr,n  + collapse JSON (u_c, nu)
 *   heatmap         CSV  t_over_pi,p_meas,value
 */

import {
  SchemaError,
  Table,
  numericColumn,
  requireColumns,
  requireKeys,
} from "./schema.js";
import {
  DEFAULT_MARGIN,
  PALETTE,
  Svg,
  errorBar,
  extent,
  fmt,
  frame,
  rampColor,
} from "./svg.js";

export type FigureKind = "central-charge" | "cumulants" | "collapse" | "heatmap";

export interface FigureStyle {
  width?: number;
  height?: number;
  title?: string;
}

export interface FitOverlay {
  order: number;
  slope: number;
  intercept: number;
  boundary: string; // "periodic" | "open"
  estimate?: number;
  derived?: string;
}

const W = 640;
const H = 420;

/** Conformal chord used only to draw overlay lines in the fit's own variable. */
export function chord(l: number, L: number, boundary: string): number {
  if (boundary === "open") {
    return ((2 * L) / Math.PI) * Math.sin((Math.PI * l) / L);
  }
  return (L / Math.PI) * Math.sin((Math.PI * l) / L);
}

// -- central charge vs measurement angle -----------------------------------

export function renderCentralCharge(csv: Table, source: string, style: FigureStyle = {}): string {
  requireColumns(csv, ["theta", "c_ent", "c_ent_err"], source);
  const theta = numericColumn(csv, "theta", source);
  const c = numericColumn(csv, "c_ent", source);
  const err = numericColumn(csv, "c_ent_err", source);

  const svg = new Svg(style.width ?? W, style.height ?? H);
  const { x, y } = frame(svg, extent(theta), extent([...c.map((v, i) => v - err[i]), ...c.map((v, i) => v + err[i])]), {
    x: "theta / pi",
    y: "entanglement central charge c_ent",
    title: style.title ?? "Central charge along the measurement-angle ray",
  });
  const order = theta.map((_, i) => i).sort((a, b) => theta[a] - theta[b]);
  svg.polyline(order.map((i) => [x(theta[i]), y(c[i])]), PALETTE[0], 1);
  for (const i of order) {
    errorBar(svg, x(theta[i]), c[i], err[i], y, PALETTE[0]);
    svg.circle(x(theta[i]), y(c[i]), 3, PALETTE[0]);
  }
  return svg.render();
}

// -- cumulant arcs against cut position ------------------------------------

export interface CumulantSeries {
  order: number;
  L: number;
  frac: number[]; // l / L
  value: number[];
  stderr: number[];
}

export function buildCumulantSeries(csv: Table, source: string): CumulantSeries[] {
  requireColumns(csv, ["L", "l", "order", "value", "stderr"], source);
  const L = numericColumn(csv, "L", source);
  const l = numericColumn(csv, "l", source);
  const order = numericColumn(csv, "order", source);
  const value = numericColumn(csv, "value", source);
  const stderr = numericColumn(csv, "stderr", source);

  const groups = new Map<string, CumulantSeries>();
  for (let i = 0; i < l.length; i++) {
    const key = `${order[i]}|${L[i]}`;
    let g = groups.get(key);
    if (!g) {
      g = { order: order[i], L: L[i], frac: [], value: [], stderr: [] };
      groups.set(key, g);
    }
    g.frac.push(l[i] / L[i]);
    g.value.push(value[i]);
    g.stderr.push(stderr[i]);
  }
  const out = [...groups.values()];
  for (const g of out) {
    const idx = g.frac.map((_, i) => i).sort((a, b) => g.frac[a] - g.frac[b]);
    g.frac = idx.map((i) => g.frac[i]);
    g.value = idx.map((i) => g.value[i]);
    g.stderr = idx.map((i) => g.stderr[i]);
  }
  return out.sort((a, b) => a.order - b.order || a.L - b.L);
}

export function renderCumulants(
  csv: Table,
  source: string,
  fits: FitOverlay[],
  style: FigureStyle = {},
): string {
  const series = buildCumulantSeries(csv, source);
  const svg = new Svg(style.width ?? W, style.height ?? H);
  const allVals = series.flatMap((s) => s.value);
  const { x, y } = frame(svg, [0, 1], extent(allVals), {
    x: "cut fraction l / L",
    y: "cumulant (nats)",
    title: style.title ?? "Entanglement cumulant arcs with log-chord fits",
  });
  series.forEach((s, si) => {
    const color = PALETTE[si % PALETTE.length];
    s.frac.forEach((f, i) => {
      errorBar(svg, x(f), s.value[i], s.stderr[i], y, color);
      svg.circle(x(f), y(s.value[i]), 2.5, color);
    });
    const fit = fits.find((f) => f.order === s.order);
    if (fit) {
      const pts: Array<[number, number]> = [];
      for (let l = 1; l < s.L; l++) {
        const v = fit.slope * Math.log(chord(l, s.L, fit.boundary)) + fit.intercept;
        pts.push([x(l / s.L), y(v)]);
      }
      svg.polyline(pts, color, 1, "4 3");
    }
    svg.text(svg.width - DEFAULT_MARGIN.right - 6, DEFAULT_MARGIN.top + 16 * (si + 1), `order ${s.order}, L=${s.L}`, {
      anchor: "end",
      size: 11,
      fill: color,
    });
  });
  return svg.render();
}

// -- finite-size scaling collapse ------------------------------------------

export interface CollapseParams {
  u_c: number;
  nu: number;
}

export function renderCollapse(
  csv: Table,
  source: string,
  params: CollapseParams,
  style: FigureStyle = {},
): string {
  requireColumns(csv, ["u", "L", "mean", "stderr"], source);
  const u = numericColumn(csv, "u", source);
  const L = numericColumn(csv, "L", source);
  const mean = numericColumn(csv, "mean", source);
  const stderr = numericColumn(csv, "stderr", source);
  if (!Number.isFinite(params.u_c) || !Number.isFinite(params.nu) || params.nu <= 0) {
    throw new SchemaError(`${source}: collapse parameters u_c/nu invalid`);
  }
  const scaled = u.map((v, i) => (v - params.u_c) * Math.pow(L[i], 1 / params.nu));
  const sizes = [...new Set(L)].sort((a, b) => a - b);

  const svg = new Svg(style.width ?? W, style.height ?? H);
  const { x, y } = frame(svg, extent(scaled), extent(mean), {
    x: `(u - ${fmt(params.u_c)}) L^(1/${fmt(params.nu)})`,
    y: "mean coherent information (bits)",
    title: style.title ?? "Finite-size scaling collapse",
  });
  sizes.forEach((size, si) => {
    const color = PALETTE[si % PALETTE.length];
    const idx = L.map((v, i) => i)
      .filter((i) => L[i] === size)
      .sort((a, b) => scaled[a] - scaled[b]);
    svg.polyline(idx.map((i) => [x(scaled[i]), y(mean[i])]), color, 1);
    for (const i of idx) {
      errorBar(svg, x(scaled[i]), mean[i], stderr[i], y, color);
      svg.circle(x(scaled[i]), y(mean[i]), 3, color);
    }
    svg.text(svg.width - DEFAULT_MARGIN.right - 6, DEFAULT_MARGIN.top + 16 * (si + 1), `L = ${size}`, {
      anchor: "end",
      size: 11,
      fill: color,
    });
  });
  return svg.render();
}

// -- phase diagram heatmap --------------------------------------------------

export function renderHeatmap(csv: Table, source: string, style: FigureStyle = {}): string {
  requireColumns(csv, ["t_over_pi", "p_meas", "value"], source);
  const t = numericColumn(csv, "t_over_pi", source);
  const p = numericColumn(csv, "p_meas", source);
  const v = numericColumn(csv, "value", source);

  const ts = [...new Set(t)].sort((a, b) => a - b);
  const ps = [...new Set(p)].sort((a, b) => a - b);
  const [vLo, vHi] = [Math.min(...v), Math.max(...v)];
  const span = vHi - vLo || 1;

  const svg = new Svg(style.width ?? W, style.height ?? H);
  const m = DEFAULT_MARGIN;
  const { x, y } = frame(svg, extent(ts, 0), extent(ps, 0), {
    x: "t / pi",
    y: "p_meas",
    title: style.title ?? "Phase diagram",
  }, m);
  const cw = ts.length > 1 ? (x(ts[1]) - x(ts[0])) : (svg.width - m.left - m.right);
  const ch = ps.length > 1 ? (y(ps[0]) - y(ps[1])) : (svg.height - m.top - m.bottom);
  for (let i = 0; i < v.length; i++) {
    svg.rect(x(t[i]) - cw / 2, y(p[i]) - ch / 2, cw, ch, rampColor((v[i] - vLo) / span));
  }
  svg.text(svg.width - m.right, 22, `${fmt(vLo)} .. ${fmt(vHi)}`, { anchor: "end", size: 11 });
  return svg.render();
}

// -- dispatch ----------------------------------------------------------------

export interface FigureSpec {
  kind: FigureKind;
  inputs: {
    csv: string;
    fit?: string;
    collapse?: string;
  };
  output: string;
  style?: FigureStyle;
}

export interface LoadedInputs {
  csv: Table;
  csvSource: string;
  fit?: unknown;
  collapse?: unknown;
}

export function renderFigure(spec: FigureSpec, inputs: LoadedInputs): string {
  const style = spec.style ?? {};
  switch (spec.kind) {
    case "central-charge":
      return renderCentralCharge(inputs.csv, inputs.csvSource, style);
    case "cumulants": {
      if (inputs.fit === undefined) {
        throw new SchemaError("cumulants figure requires inputs.fit (analysis JSON)");
      }
      const raw = Array.isArray(inputs.fit) ? inputs.fit : [inputs.fit];
      const fits = raw.map((f, i) => {
        const obj = f as Record<string, unknown>;
        requireKeys(obj, ["order", "slope", "intercept", "boundary"], `fit[${i}]`);
        return obj as unknown as FitOverlay;
      });
      return renderCumulants(inputs.csv, inputs.csvSource, fits, style);
    }
    case "collapse": {
      if (inputs.collapse === undefined) {
        throw new SchemaError("collapse figure requires inputs.collapse (analysis JSON)");
      }
      const obj = inputs.collapse as Record<string, unknown>;
      requireKeys(obj, ["u_c", "nu"], "collapse JSON");
      return renderCollapse(
        inputs.csv,
        inputs.csvSource,
        { u_c: Number(obj.u_c), nu: Number(obj.nu) },
        style,
      );
    }
    case "heatmap":
      return renderHeatmap(inputs.csv, inputs.csvSource, style);
    default:
      throw new SchemaError(`unknown figure kind '${(spec as { kind: string }).kind}'`);
  }
}
