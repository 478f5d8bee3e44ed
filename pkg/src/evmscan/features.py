"""Opcode-statistics features: document frequencies and 80-dim TF-IDF vectors.

tf is the relative frequency of a symbol within one contract's normalized
opcode sequence; idf uses the smoothed form ln((1+N)/(1+df)) + 1 so symbols
unseen at fit time still get a finite weight.  Document frequencies are fitted
once on the training corpus and frozen for all later vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyCorpus
from .vocab import SYMBOL_INDEX, VOCAB_SIZE


@dataclass(frozen=True)
class CorpusStats:
    """Document count and per-symbol document frequency of a fitted corpus."""

    doc_count: int
    df: np.ndarray  # shape (VOCAB_SIZE,), int64

    def __post_init__(self) -> None:
        if self.df.shape != (VOCAB_SIZE,):
            raise ValueError(f"df must have shape ({VOCAB_SIZE},), got {self.df.shape}")
        if (self.df < 0).any() or (self.df > self.doc_count).any():
            raise ValueError("document frequencies must lie in [0, doc_count]")

    def to_dict(self) -> dict:
        return {"doc_count": self.doc_count, "df": self.df.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "CorpusStats":
        return cls(doc_count=int(payload["doc_count"]), df=np.asarray(payload["df"], dtype=np.int64))


def fit_corpus_stats(docs: Sequence[Iterable[str]]) -> CorpusStats:
    """Count, per vocabulary symbol, the number of documents containing it.

    Raises :class:`EmptyCorpus` when ``docs`` is empty.
    """
    n_docs = len(docs)
    if n_docs == 0:
        raise EmptyCorpus("cannot fit statistics on an empty corpus")
    df = np.zeros(VOCAB_SIZE, dtype=np.int64)
    for doc in docs:
        seen = {SYMBOL_INDEX[sym] for sym in doc}
        for k in seen:
            df[k] += 1
    return CorpusStats(doc_count=n_docs, df=df)


def tfidf_vector(doc: Sequence[str], stats: CorpusStats) -> np.ndarray:
    """80-dim tf-idf vector for one normalized opcode sequence.

    An empty document yields the all-zero vector.
    """
    values = np.zeros(VOCAB_SIZE, dtype=np.float64)
    if not doc:
        return values
    counts = np.zeros(VOCAB_SIZE, dtype=np.float64)
    for sym in doc:
        counts[SYMBOL_INDEX[sym]] += 1.0
    tf = counts / len(doc)
    idf = np.log((1.0 + stats.doc_count) / (1.0 + stats.df)) + 1.0
    np.multiply(tf, idf, out=values)
    return values
