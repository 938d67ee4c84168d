/**
 * Viz bundle schema and loader.
 *
 * The bundle is the JSON export of a run directory (`swsg render-data`):
 * config echo, per-snapshot particle/grid tables, residual traces, and any
 * study tables as embedded text. This module never writes anything.
 */

import { readFileSync } from "node:fs";

export interface SnapshotData {
  t: number;
  step_index: number;
  iterations: number[];
  x1: number[];
  x2: number[];
  weight: number[];
  psi: number[];
  psi_sym: (number | null)[];
  vx: (number | null)[];
  vy: (number | null)[];
  px: (number | null)[];
  py: (number | null)[];
  grid_x1?: number[];
  grid_x2?: number[];
  phi?: number[];
  h?: (number | null)[];
  /** rows of (solve index, iteration, residual) */
  residuals?: [number, number, number][];
}

export interface VizBundle {
  config: Record<string, unknown>;
  completed: boolean;
  step_log: { step_index: number; t: number; iterations: number[] }[];
  snapshots: SnapshotData[];
  study_energy?: string;
  study_ageostrophic?: string;
  study_eps_convergence?: string;
  study_pseudoconvergence?: string;
}

export function loadBundle(path: string): VizBundle {
  const bundle = JSON.parse(readFileSync(path, "utf-8")) as VizBundle;
  if (!Array.isArray(bundle.snapshots) || bundle.snapshots.length === 0) {
    throw new Error(`bundle ${path} has no snapshots`);
  }
  return bundle;
}

/** Snapshot at time t (within tolerance); error lists the available times. */
export function snapshotAt(bundle: VizBundle, t: number | undefined): SnapshotData {
  if (t === undefined) return bundle.snapshots[0];
  const hit = bundle.snapshots.find((s) => Math.abs(s.t - t) < 1e-9);
  if (!hit) {
    const times = bundle.snapshots.map((s) => s.t).join(", ");
    throw new Error(`no snapshot at t=${t}; available times: ${times}`);
  }
  return hit;
}

export interface Table {
  columns: string[];
  rows: (number | string | boolean | null)[][];
  comments: string[];
}

/** Parse a study table: '# columns: ...' header then space-separated rows. */
export function parseTable(text: string): Table {
  const comments: string[] = [];
  let columns: string[] = [];
  const rows: Table["rows"] = [];
  for (const line of text.split("\n")) {
    if (line.startsWith("# columns:")) {
      columns = line.slice("# columns:".length).trim().split(/\s+/);
    } else if (line.startsWith("#")) {
      comments.push(line.slice(1).trim());
    } else if (line.trim() !== "") {
      const parts = line.split(" ");
      if (columns.length > 0 && parts.length !== columns.length) continue;
      rows.push(
        parts.map((p) => {
          if (p === "") return null;
          if (p === "True") return true;
          if (p === "False") return false;
          const v = Number(p);
          return Number.isNaN(v) ? p : v;
        }),
      );
    }
  }
  return { columns, rows, comments };
}

export function column(table: Table, name: string): (number | string | boolean | null)[] {
  const i = table.columns.indexOf(name);
  if (i < 0) throw new Error(`table has no column ${name}; has ${table.columns.join(", ")}`);
  return table.rows.map((r) => r[i]);
}

/** Total Sinkhorn iterations spent by each time step of the run. */
export function iterationsPerStep(bundle: VizBundle): { step: number; iters: number }[] {
  return bundle.step_log.map((rec) => ({
    step: rec.step_index,
    iters: rec.iterations.reduce((a, b) => a + b, 0),
  }));
}
