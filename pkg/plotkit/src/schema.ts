/**
 * CSV / JSON input handling with column-level schema validation.
 *
 * Every figure kind declares the columns it needs; a mismatch fails fast
 * with an error that names the missing column and the offending file, so
 * campaign-output drift is caught before anything is drawn.
 */

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

/** Minimal strict CSV reader: header + comma-separated numeric/text cells. */
export function parseCsv(text: string, source: string): Table {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows: Record<string, string>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `${source}: row ${i + 1} has ${cells.length} cells, expected ${columns.length}`,
      );
    }
    const row: Record<string, string> = {};
    columns.forEach((c, j) => (row[c] = cells[j].trim()));
    rows.push(row);
  }
  return { columns, rows };
}

export function requireColumns(
  table: Table,
  required: string[],
  source: string,
): void {
  for (const col of required) {
    if (!table.columns.includes(col)) {
      throw new SchemaError(`${source}: missing required column '${col}'`);
    }
  }
  if (table.rows.length === 0) {
    throw new SchemaError(`${source}: no data rows`);
  }
}

export function numericColumn(
  table: Table,
  name: string,
  source: string,
): number[] {
  return table.rows.map((row, i) => {
    const v = Number(row[name]);
    if (!Number.isFinite(v)) {
      throw new SchemaError(
        `${source}: column '${name}' row ${i + 2} is not a finite number (got '${row[name]}')`,
      );
    }
    return v;
  });
}

export function requireKeys(
  obj: Record<string, unknown>,
  required: string[],
  source: string,
): void {
  for (const key of required) {
    if (!(key in obj) || obj[key] === null || obj[key] === undefined) {
      throw new SchemaError(`${source}: missing required key '${key}'`);
    }
  }
}
