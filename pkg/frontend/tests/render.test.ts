import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { run } from "../src/cli.js";
import { readSidecar } from "../src/matrix.js";
import { colorFor, coordinatesTsv, renderScatter, ROLE_COLORS } from "../src/svg.js";

const FIXTURES = join(__dirname, "fixtures");

function circleCount(svg: string): number {
  return (svg.match(/<circle class="pt"/g) ?? []).length;
}

describe("renderScatter", () => {
  const points = [
    { x: 0, y: 0, itemId: 1, label: "LeftTroll", window: "all" },
    { x: 1, y: 2, itemId: 2, label: "RightTroll", window: "all" },
    { x: -1, y: 0.5, itemId: 3, label: "NewsFeed", window: "all" },
  ];

  it("draws one marker per point", () => {
    const svg = renderScatter(points);
    expect(circleCount(svg)).toBe(3);
  });

  it("uses the fixed role colors", () => {
    const svg = renderScatter(points);
    for (const color of Object.values(ROLE_COLORS)) {
      expect(svg).toContain(color);
    }
    expect(colorFor("SomethingElse")).toBe("#7f7f7f");
  });

  it("includes a legend entry per seen label", () => {
    const svg = renderScatter(points.slice(0, 2));
    expect(svg).toContain(">LeftTroll<");
    expect(svg).toContain(">RightTroll<");
    expect(svg).not.toContain(">NewsFeed<");
  });

  it("refuses an empty embedding", () => {
    expect(() => renderScatter([])).toThrow(/empty/);
  });

  it("escapes markup in titles", () => {
    const svg = renderScatter(points, { title: "a<b&c" });
    expect(svg).toContain("a&lt;b&amp;c");
  });
});

describe("coordinatesTsv", () => {
  it("writes one line per point plus header", () => {
    const tsv = coordinatesTsv([
      { x: 1.23456789012, y: -2, itemId: 7, label: "LeftTroll", window: "2016-09" },
    ]);
    const lines = tsv.trimEnd().split("\n");
    expect(lines).toHaveLength(2);
    expect(lines[0]).toBe("item_id\twindow\tlabel\tx\ty");
    expect(lines[1].split("\t")[0]).toBe("7");
  });
});

describe("S2: end-to-end figure from an exported matrix", () => {
  it("renders a per-window scatter matching the sidecar", () => {
    const outDir = mkdtempSync(join(tmpdir(), "viz-e2e-"));
    const code = run([
      "--matrix", join(FIXTURES, "matrix.bin"),
      "--sidecar", join(FIXTURES, "sidecar.tsv"),
      "--out-dir", outDir,
      "--windows", "2016-09",
      "--iterations", "300",
      "--seed", "42",
    ]);
    expect(code).toBe(0);
    const sidecarRows = readSidecar(join(FIXTURES, "sidecar.tsv"));
    const svgPath = join(outDir, "scatter_2016-09.svg");
    expect(existsSync(svgPath)).toBe(true);
    const svg = readFileSync(svgPath, "utf8");
    expect(circleCount(svg)).toBe(sidecarRows.length);
    const labels = new Set(sidecarRows.map((r) => r.label));
    for (const label of labels) {
      expect(svg).toContain(`fill="${colorFor(label)}"`);
    }
    const coords = readFileSync(join(outDir, "coordinates.tsv"), "utf8")
      .trimEnd().split("\n");
    expect(coords).toHaveLength(sidecarRows.length + 1);
    console.log(`PASS S2: ${circleCount(svg)} markers == ${sidecarRows.length} ` +
      `sidecar rows, one color per role`);
  });

  it("splits two windows into two panels over one joint embedding", () => {
    const outDir = mkdtempSync(join(tmpdir(), "viz-2w-"));
    const code = run([
      "--matrix", join(FIXTURES, "matrix.bin"),
      "--sidecar", join(FIXTURES, "sidecar.tsv"),
      "--out-dir", outDir,
      "--windows", "2016-09-01,2016-09-15;2016-09-15,2016-10-01",
      "--iterations", "120",
      "--seed", "5",
    ]);
    expect(code).toBe(0);
    const early = readFileSync(join(outDir, "scatter_2016-09-01_2016-09-15.svg"), "utf8");
    const late = readFileSync(join(outDir, "scatter_2016-09-15_2016-10-01.svg"), "utf8");
    const total = circleCount(early) + circleCount(late);
    expect(circleCount(early)).toBeGreaterThan(0);
    expect(circleCount(late)).toBeGreaterThan(0);
    expect(total).toBe(readSidecar(join(FIXTURES, "sidecar.tsv")).length);
  });

  it("is reproducible across runs", () => {
    const args = (dir: string) => [
      "--matrix", join(FIXTURES, "matrix.bin"),
      "--sidecar", join(FIXTURES, "sidecar.tsv"),
      "--out-dir", dir, "--iterations", "120", "--seed", "9",
    ];
    const d1 = mkdtempSync(join(tmpdir(), "viz-r1-"));
    const d2 = mkdtempSync(join(tmpdir(), "viz-r2-"));
    expect(run(args(d1))).toBe(0);
    expect(run(args(d2))).toBe(0);
    expect(readFileSync(join(d1, "coordinates.tsv"), "utf8"))
      .toBe(readFileSync(join(d2, "coordinates.tsv"), "utf8"));
  });
});
