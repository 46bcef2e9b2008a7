#!/usr/bin/env node
/**
 * plotkit <spec.json>
 *
 * The spec file holds one figure spec or an array of them; input paths are
 * resolved relative to the spec file, output paths relative to the working
 * directory. Exits 1 on schema mismatches or missing series.
 */
import { readFileSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { FigureFileSchema, FigureSpec } from "./schemas.js";
import { renderFigure } from "./figures.js";

export function run(specPath: string): string[] {
  const raw = JSON.parse(readFileSync(specPath, "utf8"));
  const parsed = FigureFileSchema.parse(raw);
  const specs: FigureSpec[] = Array.isArray(parsed) ? parsed : [parsed];
  const base = dirname(resolve(specPath));
  const written: string[] = [];
  for (const spec of specs) {
    const load = (p: string) => readFileSync(resolve(base, p), "utf8");
    const svg = renderFigure(spec, load);
    writeFileSync(spec.out, svg);
    written.push(spec.out);
  }
  return written;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("plotkit")) {
  const specPath = process.argv[2];
  if (!specPath) {
    console.error("usage: plotkit <spec.json>");
    process.exit(1);
  }
  try {
    for (const out of run(specPath)) {
      console.log(`wrote ${out}`);
    }
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
}
