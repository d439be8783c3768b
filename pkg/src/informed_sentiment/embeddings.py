"""Sentence-embedding providers and the SEB1 on-disk format.

Two providers implement one interface: a frozen table loaded from a SEB1
file, and a trainable toy encoder (hashed token counts through a tanh
projection) standing in for a fine-tuned transformer. SEB1 is
little-endian: magic "SEB1", u32 dim, u64 count, then per record a u16
key byte-length, the UTF-8 key, and dim float32 values. Values are
widened to float64 on load; the rest of the engine is double precision.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError

SEB1_MAGIC = b"SEB1"
MAX_TOKENS = 128

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for key, vec in self.entries.items():
            if vec.shape != (self.dim,):
                raise FormatError(f"entry '{key}' has shape {vec.shape}, expected ({self.dim},)")


def save_embedding_table(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(SEB1_MAGIC)
        fh.write(struct.pack("<I", table.dim))
        fh.write(struct.pack("<Q", len(table.entries)))
        for key, vec in table.entries.items():
            raw = key.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise FormatError(f"key too long for SEB1: {len(raw)} bytes")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(vec.astype("<f4").tobytes())


def load_embedding_table(path: str | Path) -> EmbeddingTable:
    data = Path(path).read_bytes()
    if data[:4] != SEB1_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {SEB1_MAGIC!r}")
    if len(data) < 16:
        raise FormatError(f"{path}: truncated header at byte offset {len(data)}")
    dim = struct.unpack_from("<I", data, 4)[0]
    count = struct.unpack_from("<Q", data, 8)[0]

    entries: dict[str, np.ndarray] = {}
    offset = 16
    vec_bytes = 4 * dim
    for _ in range(count):
        if offset + 2 > len(data):
            raise FormatError(f"{path}: truncated record at byte offset {offset}")
        (key_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + key_len + vec_bytes > len(data):
            raise FormatError(f"{path}: truncated record at byte offset {offset}")
        key = data[offset : offset + key_len].decode("utf-8")
        offset += key_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += vec_bytes
        if key in entries:
            raise FormatError(f"{path}: duplicate key '{key}'")
        entries[key] = vec
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes at offset {offset}")
    return EmbeddingTable(dim=dim, entries=entries)


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U64
    return h


def sparse_features(text: str, vocab_size: int) -> tuple[np.ndarray, np.ndarray]:
    """(bucket indices, L2-normalized counts) over the first MAX_TOKENS
    whitespace tokens and their adjacent bigrams, FNV-1a hashed. Indices
    are ascending; the pair is the canonical feature representation (the
    occupied buckets are a tiny fraction of the vocabulary)."""
    counts: dict[int, float] = {}
    tokens = text.split()[:MAX_TOKENS]
    for tok in tokens:
        bucket = fnv1a64(tok.encode("utf-8")) % vocab_size
        counts[bucket] = counts.get(bucket, 0.0) + 1.0
    for a, b in zip(tokens, tokens[1:]):
        bucket = fnv1a64(f"{a} {b}".encode("utf-8")) % vocab_size
        counts[bucket] = counts.get(bucket, 0.0) + 1.0
    if not counts:
        return np.empty(0, dtype=np.int64), np.empty(0)
    idx = np.array(sorted(counts), dtype=np.int64)
    vals = np.array([counts[i] for i in idx])
    vals /= np.linalg.norm(vals)
    return idx, vals


def hashed_features(text: str, vocab_size: int) -> np.ndarray:
    """Dense view of :func:`sparse_features`."""
    dense = np.zeros(vocab_size, dtype=np.float64)
    idx, vals = sparse_features(text, vocab_size)
    dense[idx] = vals
    return dense


@dataclass
class ToyEncoderParams:
    vocab_size: int
    projection: np.ndarray  # (vocab_size, dim)
    trainable: bool = True
    projection_grad: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ValueError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if self.projection.shape[0] != self.vocab_size:
            raise ValueError("projection rows must equal vocab_size")
        if self.projection_grad is None:
            self.projection_grad = np.zeros_like(self.projection)

    @property
    def dim(self) -> int:
        return self.projection.shape[1]


def init_toy_encoder(vocab_size: int, dim: int, seed: int, trainable: bool = True) -> ToyEncoderParams:
    rng = np.random.default_rng(seed)
    projection = rng.normal(0.0, 1.0, size=(vocab_size, dim))
    return ToyEncoderParams(vocab_size=vocab_size, projection=projection, trainable=trainable)


def _encode_sparse(params: ToyEncoderParams, idx: np.ndarray, vals: np.ndarray) -> np.ndarray:
    if idx.size == 0:
        return np.zeros(params.dim)
    return np.tanh(vals @ params.projection[idx])


def toy_encode(params: ToyEncoderParams, text: str) -> np.ndarray:
    """tanh(projection^T f) over the hashed feature vector f. Deterministic;
    an empty text maps to the zero vector."""
    return _encode_sparse(params, *sparse_features(text, params.vocab_size))


class TableProvider:
    """Frozen embeddings looked up by example id."""

    trainable = False

    def __init__(self, table: EmbeddingTable):
        self.table = table

    @property
    def dim(self) -> int:
        return self.table.dim

    def vector(self, example) -> np.ndarray:
        vec = self.table.entries.get(example.id)
        if vec is None:
            raise DataError(f"no embedding for key '{example.id}'")
        return vec

    def param_slots(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return []

    def accumulate_grad(self, example, grad: np.ndarray) -> None:
        pass


class ToyEncoderProvider:
    """Gradient-bearing encoder; sparse feature vectors are cached per text
    since hashing dominates and features are parameter-independent."""

    def __init__(self, params: ToyEncoderParams):
        self.params = params
        self._features: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def dim(self) -> int:
        return self.params.dim

    @property
    def trainable(self) -> bool:
        return self.params.trainable

    def _feat(self, text: str) -> tuple[np.ndarray, np.ndarray]:
        cached = self._features.get(text)
        if cached is None:
            cached = sparse_features(text, self.params.vocab_size)
            self._features[text] = cached
        return cached

    def vector(self, example) -> np.ndarray:
        idx, vals = self._feat(example.text)
        return _encode_sparse(self.params, idx, vals)

    def param_slots(self) -> list[tuple[np.ndarray, np.ndarray]]:
        if not self.params.trainable:
            return []
        return [(self.params.projection, self.params.projection_grad)]

    def accumulate_grad(self, example, grad: np.ndarray) -> None:
        """d loss/d projection for one example given d loss/d embedding;
        only the occupied buckets' rows receive contributions."""
        if not self.params.trainable:
            return
        idx, vals = self._feat(example.text)
        if idx.size == 0:
            return
        e = _encode_sparse(self.params, idx, vals)
        du = grad * (1.0 - e * e)
        self.params.projection_grad[idx] += np.outer(vals, du)
