/**
 * Fragment dump ingestion.
 *
 * Each line is `contract_id class seed_block token token ...` as produced by
 * the scanner's dump-fragments command.  Malformed lines are skipped and
 * counted rather than aborting the run.
 */

import { readFileSync } from 'fs';

export const CLASSES = ['RV', 'AV', 'SD', 'TDV'] as const;
export type VulnClass = (typeof CLASSES)[number];

export interface FragmentRecord {
  contractId: string;
  cls: VulnClass;
  seedBlock: number;
  tokens: string[];
}

export interface IngestResult {
  records: FragmentRecord[];
  skipped: number;
}

export function parseFragmentLines(text: string): IngestResult {
  const records: FragmentRecord[] = [];
  let skipped = 0;
  for (const line of text.split('\n')) {
    if (line.trim().length === 0) continue;
    const fields = line.trim().split(/\s+/);
    if (fields.length < 4) {
      skipped += 1;
      continue;
    }
    const [contractId, cls, seedText, ...tokens] = fields;
    const seedBlock = Number(seedText);
    if (!(CLASSES as readonly string[]).includes(cls) || !Number.isInteger(seedBlock) || seedBlock < 0) {
      skipped += 1;
      continue;
    }
    records.push({ contractId, cls: cls as VulnClass, seedBlock, tokens });
  }
  return { records, skipped };
}

export function ingestFragments(path: string): IngestResult {
  return parseFragmentLines(readFileSync(path, 'ascii'));
}
