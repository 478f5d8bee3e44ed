import { describe, expect, it } from 'vitest';

import { EncoderConfig, initTensors, numel, serializeWeights, tensorLayout } from '../src/interchange';

const CONFIG: EncoderConfig = { vocabSize: 83, dModel: 8, nLayers: 2, nHeads: 2, maxLen: 16 };

/** Structural reader used only by tests: walks header, names, and byte counts. */
function parseWeightFile(buf: Buffer) {
  let offset = 0;
  const readLine = () => {
    const end = buf.indexOf(0x0a, offset);
    const line = buf.subarray(offset, end).toString('ascii');
    offset = end + 1;
    return line;
  };
  const header = readLine().split(' ');
  const tensors: { name: string; count: number; bytes: Buffer }[] = [];
  while (offset < buf.length) {
    const [name, countText] = readLine().split(' ');
    const count = Number(countText);
    const bytes = buf.subarray(offset, offset + 4 * count);
    offset += 4 * count;
    tensors.push({ name, count, bytes });
  }
  return { header, tensors };
}

describe('interchange writer', () => {
  it('emits the magic header with five decimal fields', () => {
    const buf = serializeWeights(CONFIG, initTensors(CONFIG, 1));
    const { header } = parseWeightFile(buf);
    expect(header).toEqual(['encw1', '83', '8', '2', '2', '16']);
  });

  it('emits every tensor in layout order with exact byte counts', () => {
    const buf = serializeWeights(CONFIG, initTensors(CONFIG, 1));
    const { tensors } = parseWeightFile(buf);
    const layout = tensorLayout(CONFIG);
    expect(tensors.map((t) => t.name)).toEqual(layout.map((t) => t.name));
    layout.forEach((spec, i) => {
      expect(tensors[i].count).toBe(numel(spec.shape));
      expect(tensors[i].bytes.length).toBe(4 * numel(spec.shape));
    });
  });

  it('writes float32 little-endian (init range check)', () => {
    const buf = serializeWeights(CONFIG, initTensors(CONFIG, 7));
    const { tensors } = parseWeightFile(buf);
    for (const t of tensors) {
      for (let i = 0; i < t.count; i++) {
        const x = t.bytes.readFloatLE(4 * i);
        expect(Math.abs(x)).toBeLessThanOrEqual(0.05);
      }
    }
  });

  it('is deterministic for a fixed seed', () => {
    const a = serializeWeights(CONFIG, initTensors(CONFIG, 9));
    const b = serializeWeights(CONFIG, initTensors(CONFIG, 9));
    expect(a.equals(b)).toBe(true);
  });

  it('differs across seeds', () => {
    const a = serializeWeights(CONFIG, initTensors(CONFIG, 1));
    const b = serializeWeights(CONFIG, initTensors(CONFIG, 2));
    expect(a.equals(b)).toBe(false);
  });

  it('rejects a head count mismatch', () => {
    expect(() => serializeWeights({ ...CONFIG, nHeads: 3 }, initTensors(CONFIG, 0))).toThrow();
  });
});
