/**
 * Minimal SVG scene builder: linear/log scales, axes, polylines, markers.
 * Everything is plain string assembly; output is deterministic.
 */

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
  log: boolean;
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.range = range;
  f.log = false;
  return f;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  if (d0 <= 0 || d1 <= 0) throw new Error(`log scale needs positive domain, got [${d0}, ${d1}]`);
  const [r0, r1] = range;
  const span = Math.log(d1) - Math.log(d0) || 1;
  const f = ((v: number) => r0 + ((Math.log(v) - Math.log(d0)) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.range = range;
  f.log = true;
  return f;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) throw new Error("extent of empty or non-finite data");
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

const fmt = (v: number) => {
  const a = Math.abs(v);
  const s = a !== 0 && (a < 1e-3 || a >= 1e4) ? v.toExponential(2) : v.toPrecision(4);
  return s.replace(/\.?0+($|e)/, "$1");
};

export function ticks(scale: Scale, n = 5): number[] {
  const [d0, d1] = scale.domain;
  if (scale.log) {
    const lo = Math.ceil(Math.log10(d0));
    const hi = Math.floor(Math.log10(d1));
    const out: number[] = [];
    for (let e = lo; e <= hi; e++) out.push(10 ** e);
    return out.length >= 2 ? out : [d0, d1];
  }
  const step = (d1 - d0) / (n - 1);
  return Array.from({ length: n }, (_, i) => d0 + i * step);
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"];

/** Blue-to-yellow ramp for scalar coloring, u in [0, 1]. */
export function colorRamp(u: number): string {
  const t = Math.max(0, Math.min(1, u));
  const r = Math.round(40 + 215 * t);
  const g = Math.round(60 + 160 * t);
  const b = Math.round(160 - 120 * t);
  return `rgb(${r},${g},${b})`;
}

export class Svg {
  private parts: string[] = [];
  constructor(
    public readonly width: number,
    public readonly height: number,
  ) {}

  raw(s: string): this {
    this.parts.push(s);
    return this;
  }

  circle(cx: number, cy: number, r: number, fill: string, opacity = 1): this {
    return this.raw(
      `<circle cx="${cx.toFixed(2)}" cy="${cy.toFixed(2)}" r="${r}" fill="${fill}"` +
        (opacity < 1 ? ` fill-opacity="${opacity}"` : "") +
        "/>",
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): this {
    return this.raw(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(pts: [number, number][], stroke: string, width = 1.5): this {
    const d = pts.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    return this.raw(`<polyline points="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  polygon(pts: [number, number][], fill: string, stroke = "none"): this {
    const d = pts.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    return this.raw(`<polygon points="${d}" fill="${fill}" stroke="${stroke}" stroke-width="0.3"/>`);
  }

  text(x: number, y: number, s: string, size = 11, anchor = "middle"): this {
    return this.raw(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${size}" text-anchor="${anchor}" font-family="sans-serif">${s}</text>`,
    );
  }

  /** x and y axes with tick marks and labels for a plot area. */
  axes(
    x: Scale,
    y: Scale,
    opts: { xlabel?: string; ylabel?: string; title?: string } = {},
  ): this {
    const [x0, x1] = x.range;
    const [y0, y1] = y.range; // y0 is bottom (larger pixel value)
    this.line(x0, y0, x1, y0, "#333");
    this.line(x0, y0, x0, y1, "#333");
    for (const t of ticks(x)) {
      const px = x(t);
      this.line(px, y0, px, y0 + 4, "#333");
      this.text(px, y0 + 16, fmt(t), 9);
    }
    for (const t of ticks(y)) {
      const py = y(t);
      this.line(x0 - 4, py, x0, py, "#333");
      this.text(x0 - 6, py + 3, fmt(t), 9, "end");
    }
    if (opts.xlabel) this.text((x0 + x1) / 2, y0 + 30, opts.xlabel);
    if (opts.ylabel)
      this.raw(
        `<text x="12" y="${(y0 + y1) / 2}" font-size="11" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 12 ${(y0 + y1) / 2})">${opts.ylabel}</text>`,
      );
    if (opts.title) this.text((x0 + x1) / 2, 16, opts.title, 13);
    return this;
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>` +
      this.parts.join("") +
      "</svg>"
    );
  }
}
