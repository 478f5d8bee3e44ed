/**
 * Weight interchange format writer (the contract with the scanner core).
 *
 *   line   "encw1 <vocab_size> <d_model> <n_layers> <n_heads> <max_len>\n"
 *   then, per tensor in layout order:
 *   line   "<name> <element_count>\n"
 *   bytes  element_count * 4, float32 little-endian, row-major
 */

import { Rng } from './rng';

const MAGIC = 'encw1';
const FF_MULT = 4;
const INIT_RANGE = 0.05;

export interface EncoderConfig {
  vocabSize: number;
  dModel: number;
  nLayers: number;
  nHeads: number;
  maxLen: number;
}

export function validateConfig(config: EncoderConfig): void {
  if (config.dModel % config.nHeads !== 0) throw new Error('dModel must be divisible by nHeads');
  if (config.maxLen < 1) throw new Error('maxLen must be >= 1');
  if (config.nLayers < 0) throw new Error('nLayers must be >= 0');
}

export type TensorSpec = { name: string; shape: number[] };

export function tensorLayout(config: EncoderConfig): TensorSpec[] {
  const d = config.dModel;
  const f = FF_MULT * d;
  const layout: TensorSpec[] = [
    { name: 'token_embedding', shape: [config.vocabSize, d] },
    { name: 'position_embedding', shape: [config.maxLen, d] },
    { name: 'segment_embedding', shape: [2, d] },
  ];
  for (let i = 0; i < config.nLayers; i++) {
    const p = `layer${i}.`;
    layout.push(
      { name: p + 'attention.query_weight', shape: [d, d] },
      { name: p + 'attention.query_bias', shape: [d] },
      { name: p + 'attention.key_weight', shape: [d, d] },
      { name: p + 'attention.key_bias', shape: [d] },
      { name: p + 'attention.value_weight', shape: [d, d] },
      { name: p + 'attention.value_bias', shape: [d] },
      { name: p + 'attention.output_weight', shape: [d, d] },
      { name: p + 'attention.output_bias', shape: [d] },
      { name: p + 'attention_norm.scale', shape: [d] },
      { name: p + 'attention_norm.bias', shape: [d] },
      { name: p + 'feedforward.in_weight', shape: [d, f] },
      { name: p + 'feedforward.in_bias', shape: [f] },
      { name: p + 'feedforward.out_weight', shape: [f, d] },
      { name: p + 'feedforward.out_bias', shape: [d] },
      { name: p + 'feedforward_norm.scale', shape: [d] },
      { name: p + 'feedforward_norm.bias', shape: [d] },
    );
  }
  return layout;
}

export function numel(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/** Full tensor set: seeded uniform init in [-0.05, 0.05], layout order. */
export function initTensors(config: EncoderConfig, seed: number): Map<string, Float64Array> {
  const rng = new Rng(seed);
  const tensors = new Map<string, Float64Array>();
  for (const spec of tensorLayout(config)) {
    const data = new Float64Array(numel(spec.shape));
    for (let i = 0; i < data.length; i++) data[i] = rng.uniform(-INIT_RANGE, INIT_RANGE);
    tensors.set(spec.name, data);
  }
  return tensors;
}

export function serializeWeights(config: EncoderConfig, tensors: Map<string, Float64Array>): Buffer {
  validateConfig(config);
  const parts: Buffer[] = [];
  const header = `${MAGIC} ${config.vocabSize} ${config.dModel} ${config.nLayers} ${config.nHeads} ${config.maxLen}\n`;
  parts.push(Buffer.from(header, 'ascii'));
  for (const spec of tensorLayout(config)) {
    const data = tensors.get(spec.name);
    if (data === undefined) throw new Error(`missing tensor ${spec.name}`);
    const count = numel(spec.shape);
    if (data.length !== count) {
      throw new Error(`${spec.name}: expected ${count} elements, got ${data.length}`);
    }
    parts.push(Buffer.from(`${spec.name} ${count}\n`, 'ascii'));
    const raw = Buffer.alloc(4 * count);
    for (let i = 0; i < count; i++) raw.writeFloatLE(data[i], 4 * i);
    parts.push(raw);
  }
  return Buffer.concat(parts);
}
