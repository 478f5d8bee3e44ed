/**
 * Line-oriented embedding table: `contract_id class seed_block f0 .. f(d-1)`.
 *
 * Floats are rendered with JavaScript's shortest round-trip representation,
 * which is deterministic for a given value.
 */

import { FragmentRecord } from './fragments';

export function formatEmbeddingTable(records: FragmentRecord[], vectors: Float64Array[]): string {
  if (records.length !== vectors.length) {
    throw new Error('one embedding vector per fragment record is required');
  }
  const lines = records.map((rec, i) => {
    const floats = Array.from(vectors[i], (x) => String(x)).join(' ');
    return `${rec.contractId} ${rec.cls} ${rec.seedBlock} ${floats}`;
  });
  return lines.join('\n') + (lines.length ? '\n' : '');
}
