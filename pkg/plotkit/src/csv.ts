/**
 * Reader for the simulator's schema-versioned CSV files.
 *
 * Layout: leading comment lines (`# schema=...`), one header row, then data.
 * Columns are addressed by name only; order is never assumed.
 */

import { readFileSync } from "node:fs";

export interface Table {
  schema: string;
  columns: Map<string, Float64Array>;
  rows: number;
  path: string;
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  let schema = "";
  let i = 0;
  while (i < lines.length && lines[i].startsWith("#")) {
    const m = lines[i].match(/^#\s*schema=(\S+)/);
    if (m) schema = m[1];
    i += 1;
  }
  if (schema === "") {
    throw new Error(`${path}: missing '# schema=' line`);
  }
  if (i >= lines.length) {
    throw new Error(`${path}: missing header row`);
  }
  const names = lines[i].split(",");
  i += 1;
  const rows = lines.length - i;
  const data = names.map(() => new Float64Array(rows));
  for (let r = 0; r < rows; r += 1) {
    const parts = lines[i + r].split(",");
    if (parts.length !== names.length) {
      throw new Error(`${path}: row ${r + 1} has ${parts.length} fields, header has ${names.length}`);
    }
    for (let c = 0; c < names.length; c += 1) {
      data[c][r] = Number(parts[c]);
    }
  }
  const columns = new Map<string, Float64Array>();
  names.forEach((n, c) => columns.set(n, data[c]));
  return { schema, columns, rows, path };
}

export function column(table: Table, name: string): Float64Array {
  const col = table.columns.get(name);
  if (col === undefined) {
    throw new Error(`${table.path}: no column named '${name}'`);
  }
  return col;
}

/** Max-abs mismatch between two time grids; throws if lengths differ. */
export function gridMismatch(a: Float64Array, b: Float64Array): number {
  if (a.length !== b.length) return Infinity;
  let worst = 0;
  for (let i = 0; i < a.length; i += 1) {
    worst = Math.max(worst, Math.abs(a[i] - b[i]));
  }
  return worst;
}
