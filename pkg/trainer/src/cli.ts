#!/usr/bin/env node
/**
 * Trainer command line.
 *
 *   train           --fragments F --vocab V --out W [--embeddings E]
 *                   [--d-model 64] [--n-layers 2] [--n-heads 4] [--max-len 512]
 *                   [--seed 0] [--epochs 10] [--lr 0.1]
 *   vocab-checksum  --vocab V
 *
 * `train` writes the interchange weight file plus a `<out>.meta.json` sidecar
 * carrying the config, the vocabulary checksum, and the loss history.
 */

import { writeFileSync } from 'fs';

import { formatEmbeddingTable } from './embeddings';
import { ingestFragments } from './fragments';
import { EncoderConfig, validateConfig } from './interchange';
import { exportWeights, fragmentEmbeddings, trainModel } from './model';
import { VOCAB_SIZE, loadVocabulary } from './vocab';

interface Args {
  flags: Map<string, string>;
  command: string;
}

function parseArgs(argv: string[]): Args {
  if (argv.length === 0) throw new Error('missing command (train | vocab-checksum)');
  const [command, ...rest] = argv;
  const flags = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith('--') || i + 1 >= rest.length) {
      throw new Error(`malformed option ${key}`);
    }
    flags.set(key.slice(2), rest[i + 1]);
  }
  return { command, flags };
}

function requireFlag(args: Args, name: string): string {
  const value = args.flags.get(name);
  if (value === undefined) throw new Error(`--${name} is required`);
  return value;
}

function intFlag(args: Args, name: string, fallback: number): number {
  const raw = args.flags.get(name);
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isInteger(value)) throw new Error(`--${name} must be an integer`);
  return value;
}

function floatFlag(args: Args, name: string, fallback: number): number {
  const raw = args.flags.get(name);
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isFinite(value)) throw new Error(`--${name} must be a number`);
  return value;
}

function runTrain(args: Args): void {
  const fragmentsPath = requireFlag(args, 'fragments');
  const vocabPath = requireFlag(args, 'vocab');
  const outPath = requireFlag(args, 'out');
  const config: EncoderConfig = {
    vocabSize: VOCAB_SIZE,
    dModel: intFlag(args, 'd-model', 64),
    nLayers: intFlag(args, 'n-layers', 2),
    nHeads: intFlag(args, 'n-heads', 4),
    maxLen: intFlag(args, 'max-len', 512),
  };
  validateConfig(config);
  const seed = intFlag(args, 'seed', 0);
  const epochs = intFlag(args, 'epochs', 10);
  const lr = floatFlag(args, 'lr', 0.1);

  const vocab = loadVocabulary(vocabPath);
  const { records, skipped } = ingestFragments(fragmentsPath);
  if (skipped > 0) console.error(`warning: skipped ${skipped} malformed fragment lines`);
  if (records.length === 0) throw new Error('no usable fragment records');

  const model = trainModel(records, vocab, config, { epochs, learningRate: lr, seed });
  writeFileSync(outPath, exportWeights(model));
  const meta = {
    format: 'encw1',
    config,
    seed,
    epochs,
    learning_rate: lr,
    n_fragments: records.length,
    skipped_lines: skipped,
    vocab_sha256: vocab.sha256,
    loss_history: model.lossHistory,
  };
  writeFileSync(outPath + '.meta.json', JSON.stringify(meta, null, 2) + '\n');

  const embeddingsPath = args.flags.get('embeddings');
  if (embeddingsPath !== undefined) {
    const table = formatEmbeddingTable(records, fragmentEmbeddings(model, records, vocab));
    writeFileSync(embeddingsPath, table);
  }
  const first = model.lossHistory[0];
  const last = model.lossHistory[model.lossHistory.length - 1];
  console.log(
    `trained on ${records.length} fragments: loss ${first.toFixed(4)} -> ${last.toFixed(4)}; wrote ${outPath}`,
  );
}

function runVocabChecksum(args: Args): void {
  const vocab = loadVocabulary(requireFlag(args, 'vocab'));
  console.log(vocab.sha256);
}

function main(): void {
  try {
    const args = parseArgs(process.argv.slice(2));
    if (args.command === 'train') {
      runTrain(args);
    } else if (args.command === 'vocab-checksum') {
      runVocabChecksum(args);
    } else {
      throw new Error(`unknown command ${args.command}`);
    }
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
}

main();
