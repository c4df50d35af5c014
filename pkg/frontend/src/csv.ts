import Papa from "papaparse";

/** One parsed CSV record; every cell stays a string until a figure needs it. */
export type Row = Record<string, string>;

/** Raised when a figure kind needs columns the CSV does not have. */
export class MissingColumnsError extends Error {
  readonly columns: string[];

  constructor(columns: string[]) {
    super(`missing required columns: ${columns.join(", ")}`);
    this.name = "MissingColumnsError";
    this.columns = columns;
  }
}

export function parseCsv(text: string): Row[] {
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`CSV parse error (row ${first.row}): ${first.message}`);
  }
  return parsed.data;
}

export function requireColumns(rows: Row[], required: string[]): void {
  const have = new Set(rows.length > 0 ? Object.keys(rows[0]) : []);
  const missing = required.filter((column) => !have.has(column));
  if (missing.length > 0) {
    throw new MissingColumnsError(missing);
  }
}

export function numeric(row: Row, column: string): number {
  const value = Number(row[column]);
  if (!Number.isFinite(value)) {
    throw new Error(`non-numeric value ${JSON.stringify(row[column])} in column ${column}`);
  }
  return value;
}
