/**
 * The seven figure kinds, each a pure function bundle -> SVG string.
 *
 * cloud           particle cloud colored by initial y1 (mixing)
 * projection      reconstructed physical-space cloud with velocity quivers
 * height_surface  reconstructed height field as an axonometric surface
 * residuals       Sinkhorn residual curves + iterations per time step
 * energy          energy variation traces + semilog normalized error
 * ratio           ageostrophic-to-geostrophic ratio trace
 * convergence     log-log error vs eps per solver mode
 */

import { VizBundle, SnapshotData, column, iterationsPerStep, parseTable, snapshotAt } from "./bundle.js";
import { PALETTE, Svg, colorRamp, extent, linearScale, logScale } from "./svg.js";

export const FIGURE_KINDS = [
  "cloud",
  "projection",
  "height_surface",
  "residuals",
  "energy",
  "ratio",
  "convergence",
] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureOptions {
  /** snapshot time for the cloud/projection/surface kinds; default first */
  time?: number;
  width?: number;
  height?: number;
}

const W = 560;
const H = 440;
const M = { left: 60, right: 20, top: 30, bottom: 45 };

function frame(opts: FigureOptions) {
  const w = opts.width ?? W;
  const h = opts.height ?? H;
  return { svg: new Svg(w, h), plot: { x0: M.left, x1: w - M.right, y0: h - M.bottom, y1: M.top } };
}

function renderCloud(bundle: VizBundle, opts: FigureOptions): string {
  const snap = snapshotAt(bundle, opts.time);
  const initial = bundle.snapshots[0];
  const { svg, plot } = frame(opts);
  const x = linearScale([0, 1], [plot.x0, plot.x1]);
  const y = linearScale([0, 1], [plot.y0, plot.y1]);
  const [c0, c1] = extent(initial.x1);
  snap.x1.forEach((x1, i) => {
    const u = (initial.x1[i] - c0) / (c1 - c0 || 1);
    svg.circle(x(x1), y(snap.x2[i]), 2.2, colorRamp(u), 0.85);
  });
  svg.axes(x, y, { xlabel: "y1", ylabel: "y2", title: `particles at t=${snap.t} (colored by initial y1)` });
  return svg.render();
}

function quiverScale(vx: number[], vy: number[]): number {
  const mag = Math.max(...vx.map((v, i) => Math.hypot(v, vy[i])), 1e-12);
  return 0.06 / mag; // longest arrow spans ~6% of the unit domain
}

function renderProjection(bundle: VizBundle, opts: FigureOptions): string {
  const snap = snapshotAt(bundle, opts.time);
  if (snap.px.some((v) => v === null)) {
    throw new Error(`snapshot t=${snap.t} has no reconstructed physical positions`);
  }
  const px = snap.px as number[];
  const py = snap.py as number[];
  const vx = (snap.vx as number[]) ?? [];
  const vy = (snap.vy as number[]) ?? [];
  const { svg, plot } = frame(opts);
  const x = linearScale([0, 1], [plot.x0, plot.x1]);
  const y = linearScale([0, 1], [plot.y0, plot.y1]);
  const s = quiverScale(vx, vy);
  px.forEach((p, i) => {
    svg.circle(x(p), y(py[i]), 1.8, "#1f77b4", 0.8);
    if (Number.isFinite(vx[i]) && Number.isFinite(vy[i])) {
      svg.line(x(p), y(py[i]), x(p + s * vx[i]), y(py[i] + s * vy[i]), "#d62728", 0.8);
    }
  });
  svg.axes(x, y, { xlabel: "x1", ylabel: "x2", title: `physical cloud with velocity quivers, t=${snap.t}` });
  return svg.render();
}

function gridShape(bundle: VizBundle): { n1: number; n2: number } {
  return { n1: Number(bundle.config.n1), n2: Number(bundle.config.n2) };
}

function renderHeightSurface(bundle: VizBundle, opts: FigureOptions): string {
  const snap = snapshotAt(bundle, opts.time);
  if (!snap.h || snap.h.some((v) => v === null)) {
    throw new Error(`snapshot t=${snap.t} carries no height field`);
  }
  const h = snap.h as number[];
  const { n1, n2 } = gridShape(bundle);
  const w = opts.width ?? W;
  const hh = opts.height ?? H;
  const svg = new Svg(w, hh);
  const [h0, h1] = extent(h);
  // axonometric projection: grid node (i, j) with height z
  const proj = (i: number, j: number, z: number): [number, number] => {
    const u = i / (n1 - 1 || 1);
    const v = j / (n2 - 1 || 1);
    const zs = (z - h0) / (h1 - h0 || 1);
    const sx = 70 + (u + 0.45 * v) * (w - 160);
    const sy = hh - 90 - v * 0.42 * (hh - 140) - zs * 0.35 * (hh - 140);
    return [sx, sy];
  };
  const at = (i: number, j: number) => h[j * n1 + i];
  // painter's order: far rows (large j) first
  for (let j = n2 - 2; j >= 0; j--) {
    for (let i = n1 - 2; i >= 0; i--) {
      const quad: [number, number][] = [
        proj(i, j, at(i, j)),
        proj(i + 1, j, at(i + 1, j)),
        proj(i + 1, j + 1, at(i + 1, j + 1)),
        proj(i, j + 1, at(i, j + 1)),
      ];
      const mean = (at(i, j) + at(i + 1, j) + at(i + 1, j + 1) + at(i, j + 1)) / 4;
      svg.polygon(quad, colorRamp((mean - h0) / (h1 - h0 || 1)), "#555");
    }
  }
  svg.text(w / 2, 18, `height surface at t=${snap.t} (range ${h0.toFixed(3)} to ${h1.toFixed(3)})`, 13);
  return svg.render();
}

function renderResiduals(bundle: VizBundle, opts: FigureOptions): string {
  const withRes = bundle.snapshots.filter((s) => s.residuals && s.residuals.length > 0);
  if (withRes.length === 0) throw new Error("bundle has no residual traces");
  const w = opts.width ?? W;
  const h = opts.height ?? H;
  const svg = new Svg(w, h);
  // left: semilog residual curves, one per snapshot (first solve of each)
  const left = { x0: M.left, x1: w / 2 - 15, y0: h - M.bottom, y1: M.top };
  let maxIt = 1;
  let rLo = Infinity;
  let rHi = -Infinity;
  for (const s of withRes) {
    for (const [, it, r] of s.residuals!) {
      maxIt = Math.max(maxIt, it);
      if (r > 0) {
        rLo = Math.min(rLo, r);
        rHi = Math.max(rHi, r);
      }
    }
  }
  const lx = linearScale([1, maxIt], [left.x0, left.x1]);
  const ly = logScale([rLo, rHi], [left.y0, left.y1]);
  withRes.forEach((s, k) => {
    const first = s.residuals!.filter(([solve]) => solve === 0);
    const pts = first.filter(([, , r]) => r > 0).map(([, it, r]) => [lx(it), ly(r)] as [number, number]);
    if (pts.length > 1) svg.polyline(pts, PALETTE[k % PALETTE.length], 1.2);
  });
  svg.axes(lx, ly, { xlabel: "iteration", ylabel: "residual", title: "Sinkhorn residuals per snapshot" });
  // right: total iterations per time step (warm-start effect)
  const per = iterationsPerStep(bundle);
  const right = { x0: w / 2 + 45, x1: w - M.right, y0: h - M.bottom, y1: M.top };
  const rx = linearScale(extent(per.map((p) => p.step)), [right.x0, right.x1]);
  const ry = linearScale([0, Math.max(...per.map((p) => p.iters))], [right.y0, right.y1]);
  svg.polyline(
    per.map((p) => [rx(p.step), ry(p.iters)] as [number, number]),
    "#d62728",
  );
  per.forEach((p) => svg.circle(rx(p.step), ry(p.iters), 2, "#d62728"));
  svg.axes(rx, ry, { xlabel: "time step", title: "iterations per step" });
  return svg.render();
}

function numeric(vals: (number | string | boolean | null)[]): number[] {
  return vals.map((v) => (typeof v === "number" ? v : NaN));
}

function renderEnergy(bundle: VizBundle, opts: FigureOptions): string {
  if (!bundle.study_energy) throw new Error("bundle has no energy study table");
  const tab = parseTable(bundle.study_energy);
  const t = numeric(column(tab, "t"));
  const kin = numeric(column(tab, "kinetic"));
  const pot = numeric(column(tab, "potential"));
  const err = numeric(column(tab, "normalized_error")).map(Math.abs);
  const w = opts.width ?? W;
  const h = opts.height ?? H;
  const svg = new Svg(w, h);
  const left = { x0: M.left, x1: w / 2 - 15, y0: h - M.bottom, y1: M.top };
  const dk = kin.map((v) => v - kin[0]);
  const dp = pot.map((v) => v - pot[0]);
  const lx = linearScale(extent(t), [left.x0, left.x1]);
  const ly = linearScale(extent([...dk, ...dp]), [left.y0, left.y1]);
  svg.polyline(t.map((v, i) => [lx(v), ly(dk[i])] as [number, number]), PALETTE[0]);
  svg.polyline(t.map((v, i) => [lx(v), ly(dp[i])] as [number, number]), PALETTE[1]);
  svg.axes(lx, ly, { xlabel: "t", ylabel: "energy variation", title: "kinetic (blue) / potential (red)" });
  const right = { x0: w / 2 + 45, x1: w - M.right, y0: h - M.bottom, y1: M.top };
  const pos = err.filter((v) => v > 0);
  const rx = linearScale(extent(t), [right.x0, right.x1]);
  const ry = logScale(pos.length > 0 ? extent(pos) : [1e-16, 1], [right.y0, right.y1]);
  const pts = t.flatMap((v, i) => (err[i] > 0 ? [[rx(v), ry(err[i])] as [number, number]] : []));
  if (pts.length > 1) svg.polyline(pts, PALETTE[2]);
  svg.axes(rx, ry, { xlabel: "t", title: "|normalized energy error|" });
  return svg.render();
}

function renderRatio(bundle: VizBundle, opts: FigureOptions): string {
  if (!bundle.study_ageostrophic) throw new Error("bundle has no ageostrophic study table");
  const tab = parseTable(bundle.study_ageostrophic);
  const t = numeric(column(tab, "t"));
  const ratio = numeric(column(tab, "ratio"));
  const { svg, plot } = frame(opts);
  const x = linearScale(extent(t), [plot.x0, plot.x1]);
  const y = linearScale([0, Math.max(...ratio, 0.01) * 1.1], [plot.y0, plot.y1]);
  svg.polyline(t.map((v, i) => [x(v), y(ratio[i])] as [number, number]), PALETTE[0]);
  t.forEach((v, i) => svg.circle(x(v), y(ratio[i]), 2.5, PALETTE[0]));
  svg.axes(x, y, { xlabel: "t", ylabel: "|U - Ug| / |Ug|", title: "ageostrophic ratio" });
  return svg.render();
}

function renderConvergence(bundle: VizBundle, opts: FigureOptions): string {
  const text = bundle.study_eps_convergence ?? bundle.study_pseudoconvergence;
  if (!text) throw new Error("bundle has no convergence study table");
  const tab = parseTable(text);
  const eps = numeric(column(tab, "eps"));
  const eh = numeric(column(tab, "e_h"));
  const modes = tab.columns.includes("mode") ? column(tab, "mode") : eps.map(() => "run");
  const { svg, plot } = frame(opts);
  const x = logScale(extent(eps), [plot.x0, plot.x1]);
  const y = logScale(extent(eh.filter((v) => v > 0)), [plot.y0, plot.y1]);
  const byMode = new Map<string, [number, number][]>();
  eps.forEach((e, i) => {
    if (!(eh[i] > 0)) return;
    const key = String(modes[i]);
    if (!byMode.has(key)) byMode.set(key, []);
    byMode.get(key)!.push([e, eh[i]]);
  });
  let k = 0;
  for (const [mode, pts] of byMode) {
    pts.sort((a, b) => a[0] - b[0]);
    const color = PALETTE[k++ % PALETTE.length];
    svg.polyline(pts.map(([e, v]) => [x(e), y(v)] as [number, number]), color);
    pts.forEach(([e, v]) => svg.circle(x(e), y(v), 2.5, color));
    svg.text(plot.x1 - 8, plot.y1 + 14 * k, mode, 10, "end");
  }
  svg.axes(x, y, { xlabel: "eps", ylabel: "height error", title: "convergence in eps" });
  return svg.render();
}

const RENDERERS: Record<FigureKind, (b: VizBundle, o: FigureOptions) => string> = {
  cloud: renderCloud,
  projection: renderProjection,
  height_surface: renderHeightSurface,
  residuals: renderResiduals,
  energy: renderEnergy,
  ratio: renderRatio,
  convergence: renderConvergence,
};

export function renderFigure(bundle: VizBundle, kind: FigureKind, opts: FigureOptions = {}): string {
  const fn = RENDERERS[kind];
  if (!fn) throw new Error(`unknown figure kind ${kind}; expected one of ${FIGURE_KINDS.join(", ")}`);
  return fn(bundle, opts);
}
