import { writeFileSync } from 'node:fs';
import { readDatasetCsv } from './csv.js';
import { Encoder, selectEncoder } from './encoder.js';
import { writeSeb1 } from './seb1.js';

export const DEFAULT_MODEL = 'UBC-NLP/MARBERTv2';
export const DEFAULT_MAX_TOKENS = 128;

export interface ExportJob {
  dataPath: string;
  outPath: string;
  model?: string;
  maxTokens?: number;
  batchSize?: number;
}

export interface ExportResult {
  count: number;
  dim: number;
  encoder: string;
}

/**
 * Runs the encoder over every dataset row (keyed like the engine's
 * loader: `id` column if present, else the row index) and writes the
 * SEB1 file plus a `<out>.meta` sidecar recording the encoder name,
 * pooling rule, and token limit.
 */
export async function exportEmbeddings(
  job: ExportJob,
  encoderOverride?: Encoder,
): Promise<ExportResult> {
  const maxTokens = job.maxTokens ?? DEFAULT_MAX_TOKENS;
  const batchSize = job.batchSize ?? 32;
  const encoder =
    encoderOverride ?? selectEncoder(job.model ?? DEFAULT_MODEL, maxTokens);

  const rows = readDatasetCsv(job.dataPath);
  const dim = await encoder.dim();
  const records: { key: string; values: Float32Array }[] = [];
  for (let start = 0; start < rows.length; start += batchSize) {
    const batch = rows.slice(start, start + batchSize);
    const vectors = await encoder.encodeBatch(batch.map((r) => r.tweet));
    batch.forEach((row, i) => records.push({ key: row.id, values: vectors[i] }));
  }

  const count = writeSeb1(job.outPath, dim, records);
  const meta = [
    `encoder = ${encoder.name}`,
    `pooling = ${encoder.pooling}`,
    `max_tokens = ${encoder.maxTokens}`,
    `dim = ${dim}`,
    `count = ${count}`,
  ].join('\n');
  writeFileSync(`${job.outPath}.meta`, meta + '\n', 'utf-8');
  return { count, dim, encoder: encoder.name };
}
