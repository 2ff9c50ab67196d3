#!/usr/bin/env node
/** Embed an exported distance matrix with t-SNE and render per-window scatters.
 *
 * Usage:
 *   tracesim-viz --matrix out/matrix.bin --sidecar out/sidecar.tsv \
 *     --out-dir figures [--windows "2016-09;2017-04"] \
 *     [--perplexity 30] [--iterations 1000] [--seed 42]
 *
 * All rows are embedded into one joint space; panels only partition the
 * rendering by time window.
 */

import { mkdirSync, realpathSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { asSquare, readMatrixBinary, readMatrixCsv, readSidecar } from "./matrix.js";
import { coordinatesTsv, renderScatter, type LabeledPoint } from "./svg.js";
import { embed } from "./tsne.js";
import { parseWindows, windowTag, type TimeWindow } from "./windows.js";

interface CliOptions {
  matrix: string;
  sidecar: string;
  outDir: string;
  windows: TimeWindow[];
  perplexity: number;
  iterations: number;
  seed: number;
}

function parseArgs(argv: string[]): CliOptions {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`bad argument pair at ${key ?? "<end>"}`);
    }
    flags.set(key.slice(2), value);
  }
  const need = (name: string): string => {
    const v = flags.get(name);
    if (!v) {
      throw new Error(`missing required --${name}`);
    }
    return v;
  };
  return {
    matrix: need("matrix"),
    sidecar: need("sidecar"),
    outDir: need("out-dir"),
    windows: parseWindows(flags.get("windows") ?? ""),
    perplexity: Number(flags.get("perplexity") ?? 30),
    iterations: Number(flags.get("iterations") ?? 1000),
    seed: Number(flags.get("seed") ?? 42),
  };
}

export function run(argv: string[]): number {
  const opts = parseArgs(argv);
  const matrix = opts.matrix.endsWith(".csv")
    ? readMatrixCsv(opts.matrix)
    : readMatrixBinary(opts.matrix);
  const { n, d } = asSquare(matrix);
  const sidecar = readSidecar(opts.sidecar);
  if (sidecar.length !== n) {
    throw new Error(`sidecar has ${sidecar.length} rows, matrix has ${n}`);
  }
  console.error(`embedding ${n} items (perplexity=${opts.perplexity}, ` +
    `iterations=${opts.iterations}, seed=${opts.seed})`);
  const coords = embed(d, n, {
    perplexity: opts.perplexity,
    iterations: opts.iterations,
    seed: opts.seed,
  });
  const points: LabeledPoint[] = coords.map((p, i) => ({
    ...p,
    itemId: sidecar[i].itemId,
    label: sidecar[i].label,
    window: windowTag(sidecar[i].timestamp, opts.windows),
  }));

  mkdirSync(opts.outDir, { recursive: true });
  writeFileSync(join(opts.outDir, "coordinates.tsv"), coordinatesTsv(points));
  const tags = [...new Set(points.map((p) => p.window))].sort();
  for (const tag of tags) {
    const panel = points.filter((p) => p.window === tag);
    const svg = renderScatter(panel, { title: tag === "all" ? "" : tag });
    const name = `scatter_${tag.replace(/[^A-Za-z0-9_-]+/g, "-")}.svg`;
    writeFileSync(join(opts.outDir, name), svg);
    console.error(`wrote ${name} (${panel.length} points)`);
  }
  console.error(`wrote coordinates.tsv (${points.length} rows)`);
  return 0;
}

function invokedDirectly(): boolean {
  // realpath so the npm bin symlink still counts as direct invocation
  if (!process.argv[1]) {
    return false;
  }
  try {
    return fileURLToPath(import.meta.url) === realpathSync(process.argv[1]);
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  try {
    process.exit(run(process.argv.slice(2)));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(2);
  }
}
