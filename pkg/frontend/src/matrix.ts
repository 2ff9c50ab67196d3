/** Readers for the distance-matrix exports produced by the tracesim CLI. */

import { readFileSync } from "node:fs";

export interface DistanceMatrix {
  rowIds: number[];
  colIds: number[];
  values: Float64Array; // row-major
}

export interface SidecarRow {
  itemId: number;
  accountId: string;
  label: string;
  timestamp: number;
}

const MATRIX_MAGIC = "TSDM";
const SUPPORTED_VERSION = 1;

/** Binary form: magic, u32 version, u64 rows, u64 cols, row-major f64 (all LE). */
export function readMatrixBinary(path: string): DistanceMatrix {
  const buf = readFileSync(path);
  if (buf.length < 24 || buf.toString("latin1", 0, 4) !== MATRIX_MAGIC) {
    throw new Error(`${path} is not a distance-matrix file`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== SUPPORTED_VERSION) {
    throw new Error(`unsupported matrix version ${version}`);
  }
  const rows = Number(buf.readBigUInt64LE(8));
  const cols = Number(buf.readBigUInt64LE(16));
  const expected = 24 + rows * cols * 8;
  if (buf.length < expected) {
    throw new Error(`matrix file truncated: ${buf.length} < ${expected} bytes`);
  }
  const values = new Float64Array(rows * cols);
  for (let i = 0; i < rows * cols; i++) {
    values[i] = buf.readDoubleLE(24 + i * 8);
  }
  return {
    rowIds: Array.from({ length: rows }, (_, i) => i),
    colIds: Array.from({ length: cols }, (_, i) => i),
    values,
  };
}

/** CSV form: header `item_id,<col ids>`, one row per item with its id first. */
export function readMatrixCsv(path: string): DistanceMatrix {
  const lines = readFileSync(path, "utf8").split("\n").filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new Error(`${path} has no matrix rows`);
  }
  const header = lines[0].split(",");
  if (header[0] !== "item_id") {
    throw new Error(`${path} missing item_id header`);
  }
  const colIds = header.slice(1).map(Number);
  const rowIds: number[] = [];
  const values = new Float64Array((lines.length - 1) * colIds.length);
  for (let r = 1; r < lines.length; r++) {
    const cells = lines[r].split(",");
    if (cells.length !== colIds.length + 1) {
      throw new Error(`${path} row ${r} has ${cells.length - 1} values, expected ${colIds.length}`);
    }
    rowIds.push(Number(cells[0]));
    for (let c = 0; c < colIds.length; c++) {
      values[(r - 1) * colIds.length + c] = Number(cells[c + 1]);
    }
  }
  return { rowIds, colIds, values };
}

/** Sidecar TSV: item_id, account_id, label, timestamp (tab separated, header row). */
export function readSidecar(path: string): SidecarRow[] {
  const lines = readFileSync(path, "utf8").split("\n").filter((l) => l.length > 0);
  const header = lines[0].split("\t");
  const expected = ["item_id", "account_id", "label", "timestamp"];
  if (expected.some((name, i) => header[i] !== name)) {
    throw new Error(`${path} header ${header} != ${expected}`);
  }
  return lines.slice(1).map((line) => {
    const [itemId, accountId, label, timestamp] = line.split("\t");
    return {
      itemId: Number(itemId),
      accountId,
      label,
      timestamp: Number(timestamp),
    };
  });
}

/** Square-matrix guard shared by the embedding entry points. */
export function asSquare(matrix: DistanceMatrix): { n: number; d: Float64Array } {
  const n = matrix.rowIds.length;
  if (matrix.colIds.length !== n) {
    throw new Error(`matrix is ${n}x${matrix.colIds.length}, need square`);
  }
  return { n, d: matrix.values };
}
