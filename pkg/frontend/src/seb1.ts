import { openSync, writeSync, closeSync, readFileSync } from 'node:fs';

export class FormatError extends Error {}

const MAGIC = Buffer.from('SEB1', 'ascii');

export interface Seb1Record {
  key: string;
  values: Float32Array;
}

/**
 * SEB1, little-endian: "SEB1" | u32 dim | u64 count | records, each a
 * u16 key byte-length, the UTF-8 key, then dim float32 values. No
 * padding or alignment.
 */
export function writeSeb1(
  path: string,
  dim: number,
  records: Iterable<Seb1Record>,
): number {
  const items = Array.from(records);
  const fd = openSync(path, 'w');
  try {
    const header = Buffer.alloc(16);
    MAGIC.copy(header, 0);
    header.writeUInt32LE(dim, 4);
    header.writeBigUInt64LE(BigInt(items.length), 8);
    writeSync(fd, header);
    for (const { key, values } of items) {
      if (values.length !== dim) {
        throw new FormatError(`record '${key}' has ${values.length} values, expected ${dim}`);
      }
      const keyBytes = Buffer.from(key, 'utf-8');
      if (keyBytes.length > 0xffff) {
        throw new FormatError(`key too long for SEB1: ${keyBytes.length} bytes`);
      }
      const record = Buffer.alloc(2 + keyBytes.length + 4 * dim);
      record.writeUInt16LE(keyBytes.length, 0);
      keyBytes.copy(record, 2);
      for (let i = 0; i < dim; i++) {
        record.writeFloatLE(values[i], 2 + keyBytes.length + 4 * i);
      }
      writeSync(fd, record);
    }
  } finally {
    closeSync(fd);
  }
  return items.length;
}

/** Strict reader used to validate exporter output. */
export function readSeb1(path: string): { dim: number; records: Seb1Record[] } {
  const data = readFileSync(path);
  if (!data.subarray(0, 4).equals(MAGIC)) {
    throw new FormatError(`${path}: bad magic ${JSON.stringify(data.subarray(0, 4).toString())}`);
  }
  if (data.length < 16) {
    throw new FormatError(`${path}: truncated header at byte offset ${data.length}`);
  }
  const dim = data.readUInt32LE(4);
  const count = Number(data.readBigUInt64LE(8));
  const records: Seb1Record[] = [];
  const seen = new Set<string>();
  let offset = 16;
  for (let i = 0; i < count; i++) {
    if (offset + 2 > data.length) {
      throw new FormatError(`${path}: truncated record at byte offset ${offset}`);
    }
    const keyLen = data.readUInt16LE(offset);
    offset += 2;
    if (offset + keyLen + 4 * dim > data.length) {
      throw new FormatError(`${path}: truncated record at byte offset ${offset}`);
    }
    const key = data.subarray(offset, offset + keyLen).toString('utf-8');
    offset += keyLen;
    const values = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      values[j] = data.readFloatLE(offset + 4 * j);
    }
    offset += 4 * dim;
    if (seen.has(key)) {
      throw new FormatError(`${path}: duplicate key '${key}'`);
    }
    seen.add(key);
    records.push({ key, values });
  }
  if (offset !== data.length) {
    throw new FormatError(`${path}: ${data.length - offset} trailing bytes at offset ${offset}`);
  }
  return { dim, records };
}
