/**
 * Vocabulary table handling.
 *
 * The table file is the scanner's 80-symbol list, one symbol per line; token
 * ids are the line index, followed by PAD=80, SEP=81, UNK=82.  The sha256 of
 * the file bytes is the alignment contract with the scanner: both sides must
 * hash the identical file.
 */

import { createHash } from 'crypto';
import { readFileSync } from 'fs';

export const VOCAB_SYMBOLS = 80;
export const PAD_ID = VOCAB_SYMBOLS;
export const SEP_ID = VOCAB_SYMBOLS + 1;
export const UNK_ID = VOCAB_SYMBOLS + 2;
export const VOCAB_SIZE = VOCAB_SYMBOLS + 3;

export interface Vocabulary {
  symbols: string[];
  index: Map<string, number>;
  sha256: string;
}

export function loadVocabulary(path: string): Vocabulary {
  const raw = readFileSync(path);
  const symbols = raw.toString('ascii').split('\n').filter((line) => line.length > 0);
  if (symbols.length !== VOCAB_SYMBOLS) {
    throw new Error(`vocabulary table must hold ${VOCAB_SYMBOLS} symbols, found ${symbols.length}`);
  }
  const index = new Map<string, number>();
  symbols.forEach((sym, i) => {
    if (index.has(sym)) throw new Error(`duplicate vocabulary symbol ${sym}`);
    index.set(sym, i);
  });
  const sha256 = createHash('sha256').update(raw).digest('hex');
  return { symbols, index, sha256 };
}

export function tokenToId(vocab: Vocabulary, token: string): number {
  if (token === 'SEP') return SEP_ID;
  if (token === 'PAD') return PAD_ID;
  const id = vocab.index.get(token);
  return id === undefined ? UNK_ID : id;
}
