#!/usr/bin/env node
/**
 * plotkit <figure-spec.json>
 *
 * The spec file selects the figure kind, names the input CSV/JSON files
 * (campaign outputs) and the output SVG path.
 *
 * Exit codes: 0 ok, 1 usage, 2 schema/validation failure.
 */

import { readFileSync, writeFileSync } from "fs";
import path from "path";
import { FigureSpec, renderFigure } from "./figures.js";
import { SchemaError, parseCsv, requireKeys } from "./schema.js";

export function loadSpec(specPath: string): FigureSpec {
  const obj = JSON.parse(readFileSync(specPath, "utf-8")) as Record<string, unknown>;
  requireKeys(obj, ["kind", "inputs", "output"], specPath);
  const inputs = obj.inputs as Record<string, unknown>;
  requireKeys(inputs, ["csv"], `${specPath}:inputs`);
  return obj as unknown as FigureSpec;
}

export function runSpec(specPath: string): string {
  const spec = loadSpec(specPath);
  const base = path.dirname(specPath);
  const resolve = (p: string) => (path.isAbsolute(p) ? p : path.join(base, p));

  const csvPath = resolve(spec.inputs.csv);
  const csv = parseCsv(readFileSync(csvPath, "utf-8"), csvPath);
  const readJson = (p?: string) =>
    p === undefined ? undefined : (JSON.parse(readFileSync(resolve(p), "utf-8")) as unknown);

  const svg = renderFigure(spec, {
    csv,
    csvSource: csvPath,
    fit: readJson(spec.inputs.fit),
    collapse: readJson(spec.inputs.collapse),
  });
  const outPath = resolve(spec.output);
  writeFileSync(outPath, svg);
  return outPath;
}

export function main(argv: string[]): number {
  if (argv.length !== 1) {
    console.error("usage: plotkit <figure-spec.json>");
    return 1;
  }
  try {
    const out = runSpec(argv[0]);
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 2;
    }
    console.error(String(err));
    return 2;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("plotkit")) {
  process.exit(main(process.argv.slice(2)));
}
