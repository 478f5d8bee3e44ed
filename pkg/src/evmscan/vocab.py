"""Canonical 80-symbol opcode vocabulary and mnemonic normalization.

The vocabulary is frozen in ``data/vocabulary.txt`` (one symbol per line,
ordered by lowest opcode byte); that file is the single source of truth for
symbol indices and is shared verbatim with external tooling, so it must never
be reordered.  Instruction families that differ only in their operand slot
collapse onto one symbol: PUSH0..PUSH32 -> PUSH, DUP1..DUP16 -> DUP,
SWAP1..SWAP16 -> SWAP, LOG0..LOG4 -> LOG.
"""

from __future__ import annotations

import hashlib
from importlib import resources

from .disasm import InstructionStream

VOCAB_SIZE = 80

#: legacy / renamed mnemonics accepted by the normalizer
ALIASES = {
    "SUICIDE": "SELFDESTRUCT",
    "SHA3": "KECCAK256",
    "DIFFICULTY": "PREVRANDAO",
}

_FAMILY_RANGES = {
    "PUSH": (0, 32),
    "DUP": (1, 16),
    "SWAP": (1, 16),
    "LOG": (0, 4),
}


def _load_vocabulary() -> tuple[str, ...]:
    text = resources.files("evmscan").joinpath("data/vocabulary.txt").read_text(encoding="ascii")
    symbols = tuple(line for line in text.splitlines() if line)
    if len(symbols) != VOCAB_SIZE:
        raise AssertionError(f"vocabulary table must hold {VOCAB_SIZE} symbols, found {len(symbols)}")
    if len(set(symbols)) != len(symbols):
        raise AssertionError("vocabulary table contains duplicates")
    return symbols


#: index -> symbol, in file order
VOCABULARY: tuple[str, ...] = _load_vocabulary()

#: symbol -> index
SYMBOL_INDEX: dict[str, int] = {sym: i for i, sym in enumerate(VOCABULARY)}

INVALID_SYMBOL = "INVALID"


def vocabulary_sha256() -> str:
    """Checksum of the vocabulary file bytes; used to verify id alignment with external tools."""
    raw = resources.files("evmscan").joinpath("data/vocabulary.txt").read_bytes()
    return hashlib.sha256(raw).hexdigest()


def _family(mnemonic: str) -> str | None:
    for prefix, (lo, hi) in _FAMILY_RANGES.items():
        if mnemonic.startswith(prefix):
            suffix = mnemonic[len(prefix):]
            if suffix.isdigit() and lo <= int(suffix) <= hi:
                return prefix
    return None


def normalize(mnemonic: str) -> str:
    """Map a raw mnemonic to its vocabulary symbol.

    Total: family members collapse, known aliases resolve, vocabulary symbols
    map to themselves, and everything else becomes INVALID.  Idempotent.
    """
    if mnemonic in SYMBOL_INDEX:
        return mnemonic
    alias = ALIASES.get(mnemonic)
    if alias is not None:
        return alias
    family = _family(mnemonic)
    if family is not None:
        return family
    return INVALID_SYMBOL


def normalize_stream(stream: InstructionStream) -> list[str]:
    """Normalized symbol per instruction, order preserved."""
    return [normalize(ins.mnemonic) for ins in stream.instructions]
