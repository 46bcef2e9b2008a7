/** CSV readers for the engine's draws/trace/marginal files. */
import Papa from "papaparse";
import { MissingSeries } from "./schemas.js";

export interface DrawsTable {
  names: string[];
  /** per-chain column-major values: chains[c][name] = number[] */
  chains: Map<number, Map<string, number[]>>;
}

function parseRows(text: string): string[][] {
  const res = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (res.errors.length > 0) {
    throw new Error(`CSV parse error: ${res.errors[0].message}`);
  }
  return res.data as string[][];
}

export function readDrawsCsv(text: string): DrawsTable {
  const rows = parseRows(text);
  const header = rows[0];
  if (header[0] !== "chain") {
    throw new Error("draws CSV must start with a chain column");
  }
  const names = header.slice(1);
  const chains = new Map<number, Map<string, number[]>>();
  for (const row of rows.slice(1)) {
    const c = Number(row[0]);
    let cols = chains.get(c);
    if (cols === undefined) {
      cols = new Map(names.map((n) => [n, []]));
      chains.set(c, cols);
    }
    for (let j = 0; j < names.length; j++) {
      cols.get(names[j])!.push(Number(row[j + 1]));
    }
  }
  return { names, chains };
}

export function seriesFromDraws(
  table: DrawsTable,
  chain: number,
  name: string,
): number[] {
  const cols = table.chains.get(chain);
  if (cols === undefined) {
    throw new MissingSeries(`chain ${chain} not present in draws file`);
  }
  const values = cols.get(name);
  if (values === undefined) {
    throw new MissingSeries(
      `series ${name} not found (have: ${table.names.slice(0, 8).join(", ")}…)`,
    );
  }
  return values;
}

export interface TraceRow {
  chain: number;
  iteration: number;
  warmup: boolean;
  logDensity: number;
}

export function readTraceCsv(text: string): TraceRow[] {
  const rows = parseRows(text);
  const header = rows[0].join(",");
  if (header !== "chain,iteration,warmup,log_density") {
    throw new Error(`unexpected trace CSV header: ${header}`);
  }
  return rows.slice(1).map((r) => ({
    chain: Number(r[0]),
    iteration: Number(r[1]),
    warmup: r[2] === "1",
    logDensity: Number(r[3]),
  }));
}

export interface XyTable {
  x: number[];
  y: number[];
}

/** Two-column numeric CSV with a header, e.g. the analytic marginal grid. */
export function readXyCsv(text: string): XyTable {
  const rows = parseRows(text);
  const x: number[] = [];
  const y: number[] = [];
  for (const r of rows.slice(1)) {
    x.push(Number(r[0]));
    y.push(Number(r[1]));
  }
  return { x, y };
}
