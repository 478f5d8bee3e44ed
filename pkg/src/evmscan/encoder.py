"""Small transformer encoder turning fragment token sequences into embeddings.

The architecture is the standard additive embedding (token + position +
segment), a stack of post-norm encoder layers (multi-head self-attention and
a position-wise feed-forward, each with residual + layer norm), and mean
pooling over non-PAD positions.  Weights are plain float32 numpy arrays so
they can be seeded, saved, and reloaded bit-exactly, or produced by an
external trainer through the interchange format documented at the bottom of
this module.

Token ids: vocabulary symbols occupy 0..79 in vocabulary-file order, then
PAD=80, SEP=81, UNK=82.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np

from .errors import LengthError, VocabError, WeightFormatError
from .vocab import SYMBOL_INDEX, VOCAB_SIZE

PAD_ID = VOCAB_SIZE
SEP_ID = VOCAB_SIZE + 1
UNK_ID = VOCAB_SIZE + 2

PAD_TOKEN = "PAD"
SEP_TOKEN = "SEP"

_MAGIC = "encw1"
_FF_MULT = 4  # feed-forward width is always 4 * d_model
_LN_EPS = 1e-6


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int = VOCAB_SIZE + 3
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    max_len: int = 512
    seed: int = 0

    def __post_init__(self) -> None:
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")

    @property
    def d_ff(self) -> int:
        return _FF_MULT * self.d_model

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "d_model": self.d_model,
            "n_layers": self.n_layers,
            "n_heads": self.n_heads,
            "max_len": self.max_len,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EncoderConfig":
        return cls(**{k: int(v) for k, v in payload.items()})


def tensor_layout(config: EncoderConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Fixed (name, shape) order of every tensor in a weight set.

    This order is the interchange contract; external exporters must follow it
    exactly.
    """
    d, f = config.d_model, config.d_ff
    layout: list[tuple[str, tuple[int, ...]]] = [
        ("token_embedding", (config.vocab_size, d)),
        ("position_embedding", (config.max_len, d)),
        ("segment_embedding", (2, d)),
    ]
    for i in range(config.n_layers):
        p = f"layer{i}."
        layout += [
            (p + "attention.query_weight", (d, d)),
            (p + "attention.query_bias", (d,)),
            (p + "attention.key_weight", (d, d)),
            (p + "attention.key_bias", (d,)),
            (p + "attention.value_weight", (d, d)),
            (p + "attention.value_bias", (d,)),
            (p + "attention.output_weight", (d, d)),
            (p + "attention.output_bias", (d,)),
            (p + "attention_norm.scale", (d,)),
            (p + "attention_norm.bias", (d,)),
            (p + "feedforward.in_weight", (d, f)),
            (p + "feedforward.in_bias", (f,)),
            (p + "feedforward.out_weight", (f, d)),
            (p + "feedforward.out_bias", (d,)),
            (p + "feedforward_norm.scale", (d,)),
            (p + "feedforward_norm.bias", (d,)),
        ]
    return layout


@dataclass(frozen=True)
class EncoderWeights:
    """All model tensors, keyed by interchange name; float32 and finite."""

    config: EncoderConfig
    tensors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        expected = tensor_layout(self.config)
        names = [name for name, _ in expected]
        if list(self.tensors.keys()) != names:
            raise WeightFormatError("tensor set does not match the configured layout")
        for name, shape in expected:
            t = self.tensors[name]
            if t.shape != shape:
                raise WeightFormatError(f"{name}: expected shape {shape}, got {t.shape}")
            if t.dtype != np.float32:
                raise WeightFormatError(f"{name}: tensors must be float32")
            if not np.isfinite(t).all():
                raise WeightFormatError(f"{name}: non-finite values")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


def init_weights(config: EncoderConfig) -> EncoderWeights:
    """Seeded uniform[-0.05, 0.05] initialization of every tensor."""
    rng = np.random.default_rng(config.seed)
    tensors = {
        name: rng.uniform(-0.05, 0.05, size=shape).astype(np.float32)
        for name, shape in tensor_layout(config)
    }
    return EncoderWeights(config=config, tensors=tensors)


def tokens_to_ids(tokens: Sequence[str]) -> list[int]:
    """Map token names to encoder ids; unknown names become UNK."""
    ids = []
    for tok in tokens:
        if tok == SEP_TOKEN:
            ids.append(SEP_ID)
        elif tok == PAD_TOKEN:
            ids.append(PAD_ID)
        else:
            ids.append(SYMBOL_INDEX.get(tok, UNK_ID))
    return ids


def embed_tokens(token_ids: Sequence[int], weights: EncoderWeights, config: EncoderConfig) -> np.ndarray:
    """Composite embedding rows: token + position + segment (single segment 0)."""
    n = len(token_ids)
    if n > config.max_len:
        raise LengthError(f"sequence of {n} tokens exceeds max_len {config.max_len}")
    ids = np.asarray(token_ids, dtype=np.int64)
    if n and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise VocabError("token id out of vocabulary range")
    if n == 0:
        return np.zeros((0, config.d_model), dtype=np.float64)
    token = weights["token_embedding"].astype(np.float64)[ids]
    position = weights["position_embedding"].astype(np.float64)[:n]
    segment = weights["segment_embedding"].astype(np.float64)[0]
    return token + position + segment


def self_attention(Q: np.ndarray, K: np.ndarray, V: np.ndarray, key_mask: np.ndarray | None = None) -> np.ndarray:
    """softmax(Q K^T / sqrt(d_k)) V with row-wise, max-shifted softmax.

    ``key_mask`` marks keys to exclude (True = masked); neither queries nor
    values are dropped, so callers stay responsible for ignoring masked rows.
    """
    d_k = Q.shape[-1]
    scores = Q @ np.swapaxes(K, -1, -2) / np.sqrt(d_k)
    if key_mask is not None:
        scores = np.where(key_mask, -np.inf, scores)
    scores = scores - scores.max(axis=-1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=-1, keepdims=True)
    return weights @ V


def _layer_norm(x: np.ndarray, scale: np.ndarray, bias: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + _LN_EPS) * scale + bias


def _gelu(x: np.ndarray) -> np.ndarray:
    # tanh approximation, matching common transformer implementations
    return 0.5 * x * (1.0 + np.tanh(np.sqrt(2.0 / np.pi) * (x + 0.044715 * x**3)))


def _multi_head_attention(
    x: np.ndarray, weights: EncoderWeights, layer: int, n_heads: int, pad_mask: np.ndarray
) -> np.ndarray:
    n, d = x.shape
    d_k = d // n_heads
    p = f"layer{layer}.attention."
    q = x @ weights[p + "query_weight"].astype(np.float64) + weights[p + "query_bias"]
    k = x @ weights[p + "key_weight"].astype(np.float64) + weights[p + "key_bias"]
    v = x @ weights[p + "value_weight"].astype(np.float64) + weights[p + "value_bias"]
    # (heads, n, d_k)
    q = q.reshape(n, n_heads, d_k).transpose(1, 0, 2)
    k = k.reshape(n, n_heads, d_k).transpose(1, 0, 2)
    v = v.reshape(n, n_heads, d_k).transpose(1, 0, 2)
    attended = self_attention(q, k, v, key_mask=pad_mask[None, None, :])
    merged = attended.transpose(1, 0, 2).reshape(n, d)
    return merged @ weights[p + "output_weight"].astype(np.float64) + weights[p + "output_bias"]


def encode(tokens: Sequence[str] | Sequence[int], weights: EncoderWeights, config: EncoderConfig) -> np.ndarray:
    """Embedding vector (d_model,) for one fragment token sequence.

    Accepts token names or ids.  Empty input returns the zero vector.  PAD
    positions are masked out of attention keys and of the final mean pool, so
    appending padding never changes the result.
    """
    if len(tokens) == 0:
        return np.zeros(config.d_model, dtype=np.float64)
    if isinstance(tokens[0], str):
        token_ids = tokens_to_ids(tokens)  # type: ignore[arg-type]
    else:
        token_ids = list(tokens)  # type: ignore[arg-type]

    x = embed_tokens(token_ids, weights, config)
    pad_mask = np.asarray([tid == PAD_ID for tid in token_ids], dtype=bool)
    if pad_mask.all():
        return np.zeros(config.d_model, dtype=np.float64)

    for layer in range(config.n_layers):
        p = f"layer{layer}."
        attn = _multi_head_attention(x, weights, layer, config.n_heads, pad_mask)
        x = _layer_norm(x + attn, weights[p + "attention_norm.scale"], weights[p + "attention_norm.bias"])
        hidden = _gelu(x @ weights[p + "feedforward.in_weight"].astype(np.float64) + weights[p + "feedforward.in_bias"])
        ff = hidden @ weights[p + "feedforward.out_weight"].astype(np.float64) + weights[p + "feedforward.out_bias"]
        x = _layer_norm(x + ff, weights[p + "feedforward_norm.scale"], weights[p + "feedforward_norm.bias"])

    return x[~pad_mask].mean(axis=0)


# ---------------------------------------------------------------------------
# Weight interchange format
#
#   line   "encw1 <vocab_size> <d_model> <n_layers> <n_heads> <max_len>\n"
#   then, for each tensor in tensor_layout() order:
#   line   "<name> <element_count>\n"
#   bytes  element_count * 4 bytes, float32 little-endian, C row-major
#
# The header and name lines are ASCII.  Loading validates the magic, the
# tensor names and order, every element count, and finiteness.
# ---------------------------------------------------------------------------


def save_weights(weights: EncoderWeights, path_or_file: str | BinaryIO) -> None:
    """Write the interchange file; round-trips bit-exactly with load_weights."""
    cfg = weights.config
    header = f"{_MAGIC} {cfg.vocab_size} {cfg.d_model} {cfg.n_layers} {cfg.n_heads} {cfg.max_len}\n"
    own = isinstance(path_or_file, str)
    fh: BinaryIO = open(path_or_file, "wb") if own else path_or_file  # type: ignore[arg-type]
    try:
        fh.write(header.encode("ascii"))
        for name, _ in tensor_layout(cfg):
            tensor = weights[name]
            fh.write(f"{name} {tensor.size}\n".encode("ascii"))
            fh.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    finally:
        if own:
            fh.close()


def _read_line(fh: BinaryIO) -> str:
    raw = bytearray()
    while True:
        b = fh.read(1)
        if not b:
            raise WeightFormatError("unexpected end of file in header")
        if b == b"\n":
            break
        raw += b
        if len(raw) > 256:
            raise WeightFormatError("header line too long")
    return raw.decode("ascii", errors="replace")


def load_weights(path_or_file: str | BinaryIO, seed: int = 0) -> EncoderWeights:
    """Read an interchange file back into an EncoderWeights.

    ``seed`` only fills the config field (the file does not carry one).
    Raises :class:`WeightFormatError` on any structural mismatch.
    """
    own = isinstance(path_or_file, str)
    fh: BinaryIO = open(path_or_file, "rb") if own else path_or_file  # type: ignore[arg-type]
    try:
        parts = _read_line(fh).split()
        if len(parts) != 6 or parts[0] != _MAGIC:
            raise WeightFormatError("bad magic or header field count")
        try:
            vocab_size, d_model, n_layers, n_heads, max_len = (int(p) for p in parts[1:])
            config = EncoderConfig(
                vocab_size=vocab_size, d_model=d_model, n_layers=n_layers,
                n_heads=n_heads, max_len=max_len, seed=seed,
            )
        except ValueError as exc:
            raise WeightFormatError(f"invalid header: {exc}") from None
        tensors: dict[str, np.ndarray] = {}
        for name, shape in tensor_layout(config):
            fields = _read_line(fh).split()
            if len(fields) != 2 or fields[0] != name:
                raise WeightFormatError(f"expected tensor {name!r}, found {fields!r}")
            count = int(np.prod(shape))
            if fields[1] != str(count):
                raise WeightFormatError(f"{name}: expected {count} elements, header says {fields[1]}")
            raw = fh.read(4 * count)
            if len(raw) != 4 * count:
                raise WeightFormatError(f"{name}: file truncated")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32)
        if fh.read(1):
            raise WeightFormatError("trailing bytes after final tensor")
        return EncoderWeights(config=config, tensors=tensors)
    finally:
        if own:
            fh.close()
