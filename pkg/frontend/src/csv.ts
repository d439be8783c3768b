import { readFileSync } from 'node:fs';
import Papa from 'papaparse';

export interface DatasetRow {
  id: string;
  tweet: string;
}

export class DataFileError extends Error {}

const REQUIRED_COLUMNS = ['tweet', 'sarcasm', 'sentiment', 'dialect'];

/**
 * Reads a labeled tweet CSV (UTF-8, RFC 4180, header row). Only the text
 * and the record key matter here; the labels are validated structurally
 * (column presence) but not interpreted. When there is no `id` column the
 * 0-based row index becomes the key, matching the engine's loader.
 */
export function readDatasetCsv(path: string): DatasetRow[] {
  let text: string;
  try {
    text = readFileSync(path, 'utf-8');
  } catch (err) {
    throw new DataFileError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new DataFileError(`${path}: ${first.message} (row ${first.row})`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of REQUIRED_COLUMNS) {
    if (!fields.includes(column)) {
      throw new DataFileError(`${path}: missing required column '${column}'`);
    }
  }
  const hasId = fields.includes('id');
  const rows: DatasetRow[] = [];
  const seen = new Set<string>();
  parsed.data.forEach((record, index) => {
    const id = hasId ? record.id : String(index);
    if (seen.has(id)) {
      throw new DataFileError(`${path}: duplicate id '${id}' at row ${index}`);
    }
    seen.add(id);
    rows.push({ id, tweet: record.tweet ?? '' });
  });
  if (rows.length === 0) {
    throw new DataFileError(`${path}: no data rows`);
  }
  return rows;
}
