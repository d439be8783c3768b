#!/usr/bin/env node
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { DataFileError } from './csv.js';
import { EnvironmentError } from './encoder.js';
import { DEFAULT_MAX_TOKENS, DEFAULT_MODEL, exportEmbeddings } from './exporter.js';
import { FormatError } from './seb1.js';

// Exit codes: 0 ok, 1 usage/config, 2 data, 4 environment (checkpoint or
// runtime unobtainable).
async function run(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .command('export', 'encode a dataset CSV into a SEB1 embedding file')
    .demandCommand(1)
    .option('data', { type: 'string', demandOption: true, describe: 'dataset CSV path' })
    .option('out', { type: 'string', demandOption: true, describe: 'output SEB1 path' })
    .option('model', {
      type: 'string',
      default: DEFAULT_MODEL,
      describe: 'encoder checkpoint name, or hash:<dim> for the offline test encoder',
    })
    .option('max-tokens', { type: 'number', default: DEFAULT_MAX_TOKENS })
    .option('batch-size', { type: 'number', default: 32 })
    .strict()
    .fail((msg, err) => {
      if (err) throw err;
      console.error(`error: ${msg}`);
      process.exit(1);
    })
    .parse();

  try {
    const result = await exportEmbeddings({
      dataPath: argv.data,
      outPath: argv.out,
      model: argv.model,
      maxTokens: argv['max-tokens'],
      batchSize: argv['batch-size'],
    });
    console.log(
      `wrote ${argv.out}: ${result.count} records, dim ${result.dim}, encoder ${result.encoder}`,
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    if (err instanceof EnvironmentError) return 4;
    if (err instanceof DataFileError || err instanceof FormatError) return 2;
    return 1;
  }
}

run().then((code) => {
  process.exitCode = code;
});
