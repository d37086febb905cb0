// Minimal CSV parsing for the service's tables (no quoting in these files).

export interface CsvTable {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): CsvTable {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    return { header: [], rows: [] };
  }
  const [head, ...rest] = lines;
  return {
    header: head.split(","),
    rows: rest.map((line) => line.split(",")),
  };
}

export function column(table: CsvTable, name: string): string[] {
  const index = table.header.indexOf(name);
  if (index < 0) {
    throw new Error(`no column named ${name}`);
  }
  return table.rows.map((row) => row[index]);
}
