/**
 * Embedding-layer fine-tuning on labeled fragments.
 *
 * The trainable parameters are the three embedding tables (token, position,
 * segment) plus a softmax head over the four vulnerability classes; a
 * fragment's representation is the mean over positions of the composite
 * embedding token + position + segment.  Encoder-layer tensors stay at their
 * seeded initialization and are exported alongside the tuned tables, so the
 * output is a complete, loadable weight set for the scanner.  Training is
 * plain seeded SGD with a shift-stabilized softmax cross-entropy.
 */

import { CLASSES, FragmentRecord } from './fragments';
import { EncoderConfig, initTensors, serializeWeights } from './interchange';
import { Rng } from './rng';
import { Vocabulary, tokenToId } from './vocab';

export interface TrainOptions {
  epochs: number;
  learningRate: number;
  seed: number;
}

export interface TrainedModel {
  config: EncoderConfig;
  tensors: Map<string, Float64Array>;
  headWeight: Float64Array; // [4 * dModel]
  headBias: Float64Array;   // [4]
  lossHistory: number[];
}

interface Encoded {
  ids: number[];
  label: number;
}

function encodeRecords(records: FragmentRecord[], vocab: Vocabulary, maxLen: number): Encoded[] {
  return records.map((rec) => ({
    ids: rec.tokens.slice(0, maxLen).map((tok) => tokenToId(vocab, tok)),
    label: CLASSES.indexOf(rec.cls),
  }));
}

function pooledEmbedding(
  ids: number[], d: number,
  token: Float64Array, position: Float64Array, segment: Float64Array,
): Float64Array {
  const v = new Float64Array(d);
  for (let p = 0; p < ids.length; p++) {
    const t = ids[p] * d;
    const q = p * d;
    for (let k = 0; k < d; k++) v[k] += token[t + k] + position[q + k] + segment[k];
  }
  for (let k = 0; k < d; k++) v[k] /= ids.length;
  return v;
}

function softmax(logits: Float64Array): Float64Array {
  let max = -Infinity;
  for (const x of logits) max = Math.max(max, x);
  const out = new Float64Array(logits.length);
  let total = 0;
  for (let i = 0; i < logits.length; i++) {
    out[i] = Math.exp(logits[i] - max);
    total += out[i];
  }
  for (let i = 0; i < out.length; i++) out[i] /= total;
  return out;
}

export function trainModel(
  records: FragmentRecord[], vocab: Vocabulary, config: EncoderConfig, options: TrainOptions,
): TrainedModel {
  if (records.length === 0) throw new Error('cannot train on an empty fragment set');
  const d = config.dModel;
  const nClasses = CLASSES.length;
  const tensors = initTensors(config, options.seed);
  const token = tensors.get('token_embedding')!;
  const position = tensors.get('position_embedding')!;
  const segment = tensors.get('segment_embedding')!;

  const headRng = new Rng(options.seed ^ 0x5eed);
  const headWeight = new Float64Array(nClasses * d);
  for (let i = 0; i < headWeight.length; i++) headWeight[i] = headRng.uniform(-0.05, 0.05);
  const headBias = new Float64Array(nClasses);

  const data = encodeRecords(records, vocab, config.maxLen);
  const order = data.map((_, i) => i);
  const shuffleRng = new Rng(options.seed ^ 0x0bf5);
  const lr = options.learningRate;
  const lossHistory: number[] = [];

  for (let epoch = 0; epoch < options.epochs; epoch++) {
    shuffleRng.shuffle(order);
    let epochLoss = 0;
    for (const idx of order) {
      const { ids, label } = data[idx];
      if (ids.length === 0) continue;
      const v = pooledEmbedding(ids, d, token, position, segment);

      const logits = new Float64Array(nClasses);
      for (let c = 0; c < nClasses; c++) {
        let acc = headBias[c];
        for (let k = 0; k < d; k++) acc += headWeight[c * d + k] * v[k];
        logits[c] = acc;
      }
      const probs = softmax(logits);
      epochLoss += -Math.log(Math.max(probs[label], 1e-12));

      // dL/dlogits = probs - onehot
      const dv = new Float64Array(d);
      for (let c = 0; c < nClasses; c++) {
        const g = probs[c] - (c === label ? 1 : 0);
        for (let k = 0; k < d; k++) {
          dv[k] += g * headWeight[c * d + k];
          headWeight[c * d + k] -= lr * g * v[k];
        }
        headBias[c] -= lr * g;
      }
      const scale = lr / ids.length;
      for (let p = 0; p < ids.length; p++) {
        const t = ids[p] * d;
        const q = p * d;
        for (let k = 0; k < d; k++) {
          token[t + k] -= scale * dv[k];
          position[q + k] -= scale * dv[k];
          segment[k] -= scale * dv[k];
        }
      }
    }
    lossHistory.push(epochLoss / data.length);
  }
  return { config, tensors, headWeight, headBias, lossHistory };
}

export function exportWeights(model: TrainedModel): Buffer {
  return serializeWeights(model.config, model.tensors);
}

/** Per-fragment learned representation, one table row per input record. */
export function fragmentEmbeddings(
  model: TrainedModel, records: FragmentRecord[], vocab: Vocabulary,
): Float64Array[] {
  const d = model.config.dModel;
  const token = model.tensors.get('token_embedding')!;
  const position = model.tensors.get('position_embedding')!;
  const segment = model.tensors.get('segment_embedding')!;
  return encodeRecords(records, vocab, model.config.maxLen).map(({ ids }) =>
    ids.length === 0 ? new Float64Array(d) : pooledEmbedding(ids, d, token, position, segment),
  );
}
