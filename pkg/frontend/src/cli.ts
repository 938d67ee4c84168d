#!/usr/bin/env node
/**
 * Figure renderer CLI: one subcommand per figure kind.
 *
 *   swsg-viz <kind> --bundle runs/x/viz_bundle.json --out fig.svg [--time 2]
 *
 * Reads the bundle read-only and writes a single SVG file.
 */

import { writeFileSync } from "node:fs";
import { loadBundle } from "./bundle.js";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";

function usage(): string {
  return `usage: swsg-viz <${FIGURE_KINDS.join("|")}> --bundle <viz_bundle.json> [--out fig.svg] [--time t]`;
}

export function main(argv: string[]): number {
  const [kind, ...rest] = argv;
  if (!kind || kind === "-h" || kind === "--help") {
    console.log(usage());
    return kind ? 0 : 1;
  }
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    console.error(`unknown figure kind ${kind}\n${usage()}`);
    return 1;
  }
  const opts: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith("--") || i + 1 >= rest.length) {
      console.error(`bad argument ${key}\n${usage()}`);
      return 1;
    }
    opts[key.slice(2)] = rest[i + 1];
  }
  if (!opts.bundle) {
    console.error(`--bundle is required\n${usage()}`);
    return 1;
  }
  try {
    const bundle = loadBundle(opts.bundle);
    const svg = renderFigure(bundle, kind as FigureKind, {
      time: opts.time !== undefined ? Number(opts.time) : undefined,
    });
    const out = opts.out ?? `${kind}.svg`;
    writeFileSync(out, svg);
    console.log(`figure: ${out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
