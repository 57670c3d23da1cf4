"""Word vectors and sentence vectors.

The trainable table is a skip-gram-with-negative-sampling model over
tokens plus hashed character n-gram buckets, so out-of-vocabulary tokens
still compose a vector from their subwords. Loaded text-format tables
have no subword buckets and fall back to a zero vector.

A sentence vector is the mean of its token vectors with the five
structural flags (begin/end-of-document, begin/end-of-paragraph,
is-list-item) appended as binary dimensions.
"""

from __future__ import annotations

import numpy as np

from . import serialization
from .corpus import Sentence
from .errors import EmptyInputError, ParseError

N_FLAGS = 5

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def char_ngrams(token: str, min_n: int, max_n: int) -> list[str]:
    """Distinct boundary-marked character n-grams, in first-seen order."""
    wrapped = f"<{token}>"
    seen = []
    seen_set = set()
    for n in range(min_n, max_n + 1):
        for i in range(0, len(wrapped) - n + 1):
            gram = wrapped[i : i + n]
            if gram not in seen_set:
                seen_set.add(gram)
                seen.append(gram)
    return seen


class WordEmbeddingTable:
    """Token -> vector lookup with optional subword composition.

    With buckets, a token's vector is the mean of its word row (when in
    vocabulary) and its n-gram bucket rows; without buckets, unknown
    tokens map to the zero vector.
    """

    def __init__(self, dimension, tokens, word_vectors, bucket_vectors=None, min_n=3, max_n=6, meta=None):
        self.dimension = dimension
        self.tokens = list(tokens)
        self.vocab = {tok: i for i, tok in enumerate(self.tokens)}
        self.word_vectors = np.asarray(word_vectors, dtype=float)
        self.bucket_vectors = None if bucket_vectors is None else np.asarray(bucket_vectors, dtype=float)
        self.min_n = min_n
        self.max_n = max_n
        self.meta = dict(meta or {})

    @property
    def n_buckets(self) -> int:
        return 0 if self.bucket_vectors is None else self.bucket_vectors.shape[0]

    def bucket_of(self, gram: str) -> int:
        return _fnv1a(gram.encode("utf-8")) % self.n_buckets

    def _component_rows(self, token: str):
        rows = []
        idx = self.vocab.get(token)
        if idx is not None:
            rows.append(self.word_vectors[idx])
        if self.bucket_vectors is not None:
            for gram in char_ngrams(token, self.min_n, self.max_n):
                rows.append(self.bucket_vectors[self.bucket_of(gram)])
        return rows

    def lookup(self, token: str) -> np.ndarray:
        """Unit-norm composed vector (zero for a fully unknown token).

        Downstream consumers compare and pool by direction, and the
        recurrent encoders need a stable input scale, so the raw training
        magnitudes (which grow with corpus size) are normalized away here.
        """
        rows = self._component_rows(token)
        if not rows:
            return np.zeros(self.dimension)
        vec = np.mean(rows, axis=0)
        norm = np.linalg.norm(vec)
        return vec if norm == 0.0 else vec / norm

    def embed_tokens(self, tokens) -> np.ndarray:
        """(N, d) matrix of per-token vectors."""
        if not tokens:
            raise EmptyInputError("cannot embed an empty token sequence")
        return np.stack([self.lookup(t) for t in tokens])

    # --- persistence ------------------------------------------------------

    def to_bytes(self) -> bytes:
        meta = {
            "kind": "word_table",
            "dimension": self.dimension,
            "tokens": self.tokens,
            "min_n": self.min_n,
            "max_n": self.max_n,
            "has_buckets": self.bucket_vectors is not None,
            "extra": self.meta,
        }
        tensors = {"word_vectors": self.word_vectors}
        if self.bucket_vectors is not None:
            tensors["bucket_vectors"] = self.bucket_vectors
        return serialization.dump_bytes(meta, tensors)

    def save(self, path) -> str:
        data = self.to_bytes()
        with open(path, "wb") as fh:
            fh.write(data)
        return serialization.fingerprint_bytes(data)

    def fingerprint(self) -> str:
        return serialization.fingerprint_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "WordEmbeddingTable":
        meta, tensors = serialization.load_bytes(data)
        return cls(
            dimension=meta["dimension"],
            tokens=meta["tokens"],
            word_vectors=tensors["word_vectors"],
            bucket_vectors=tensors.get("bucket_vectors"),
            min_n=meta["min_n"],
            max_n=meta["max_n"],
            meta=meta.get("extra"),
        )

    @classmethod
    def load(cls, path) -> "WordEmbeddingTable":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def load_word_vectors(path) -> WordEmbeddingTable:
    """Parse the text format ``token v1 v2 ... vd``, one token per line."""
    tokens = []
    rows = []
    dim = None
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise ParseError("vector line without values", path, line_no)
            elif len(values) != dim:
                raise ParseError(
                    f"inconsistent dimension: expected {dim}, got {len(values)}", path, line_no
                )
            if token in seen:
                raise ParseError(f"duplicate token {token!r}", path, line_no)
            seen.add(token)
            try:
                rows.append([float(v) for v in values])
            except ValueError as exc:
                raise ParseError(f"non-numeric vector value: {exc}", path, line_no) from exc
            tokens.append(token)
    if dim is None:
        raise ParseError("empty word-vector file", path)
    return WordEmbeddingTable(dim, tokens, np.array(rows), meta={"source": "text"})


def sigma_avg(sentence: Sentence, table: WordEmbeddingTable) -> np.ndarray:
    """Mean token vector with the 5 structural flags appended."""
    if not sentence.tokens:
        raise EmptyInputError("sentence has no tokens")
    content = table.embed_tokens(sentence.tokens).mean(axis=0)
    return np.concatenate([content, np.array(sentence.flag_vector(), dtype=float)])


def train_skipgram(
    sentences,
    dim: int = 32,
    window: int = 4,
    negatives: int = 5,
    epochs: int = 5,
    seed: int = 0,
    min_count: int = 1,
    min_n: int = 3,
    max_n: int = 6,
    buckets: int = 200_000,
    lr: float = 0.025,
) -> WordEmbeddingTable:
    """Skip-gram with negative sampling over tokens and subword buckets.

    ``sentences`` is an iterable of token lists. Deterministic under
    ``seed``; the learning rate decays linearly over all updates.
    """
    sents = [list(s) for s in sentences if s]
    if not sents:
        raise EmptyInputError("cannot train embeddings on an empty corpus")

    counts: dict[str, int] = {}
    for s in sents:
        for tok in s:
            counts[tok] = counts.get(tok, 0) + 1
    tokens = sorted(t for t, c in counts.items() if c >= min_count)
    if not tokens:
        raise EmptyInputError(f"no token reaches min_count={min_count}")
    vocab = {t: i for i, t in enumerate(tokens)}

    rng = np.random.default_rng(seed)
    V = len(tokens)
    word_vectors = (rng.random((V, dim)) - 0.5) / dim
    bucket_vectors = (rng.random((buckets, dim)) - 0.5) / dim
    out_vectors = np.zeros((V, dim))
    M = np.vstack([word_vectors, bucket_vectors])  # rows: words then buckets

    table = WordEmbeddingTable(dim, tokens, M[:V], M[V:], min_n, max_n)
    comp_ids = []
    for i, tok in enumerate(tokens):
        ids = [i] + [V + table.bucket_of(g) for g in char_ngrams(tok, min_n, max_n)]
        comp_ids.append(np.array(ids, dtype=np.int64))

    freq = np.array([counts[t] for t in tokens], dtype=float)
    noise = freq**0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    encoded = [np.array([vocab[t] for t in s if t in vocab], dtype=np.int64) for s in sents]
    encoded = [e for e in encoded if e.size > 0]

    total_centers = sum(e.size for e in encoded) * epochs
    done = 0
    for _epoch in range(epochs):
        for sent in encoded:
            n = sent.size
            for pos in range(n):
                alpha = max(lr * (1.0 - done / max(total_centers, 1)), lr * 1e-4)
                done += 1
                center = sent[pos]
                lo = max(0, pos - window)
                hi = min(n, pos + window + 1)
                ctxs = np.concatenate([sent[lo:pos], sent[pos + 1 : hi]])
                if ctxs.size == 0:
                    continue
                negs = np.searchsorted(noise_cdf, rng.random((ctxs.size, negatives)))
                targets = np.concatenate([ctxs[:, None], negs], axis=1)
                labels = np.zeros_like(targets, dtype=float)
                labels[:, 0] = 1.0
                # a negative that re-draws the context word carries no signal
                weights = np.ones_like(labels)
                weights[:, 1:] = negs != ctxs[:, None]
                flat = targets.reshape(-1)
                ids = comp_ids[center]
                x = M[ids].mean(axis=0)
                U = out_vectors[flat]
                scores = 1.0 / (1.0 + np.exp(-(U @ x)))
                g = (labels.reshape(-1) - scores) * weights.reshape(-1) * alpha
                grad_x = g @ U
                np.add.at(out_vectors, flat, g[:, None] * x[None, :])
                M[ids] += grad_x / ids.size
    table.meta = {
        "seed": seed,
        "window": window,
        "negatives": negatives,
        "epochs": epochs,
        "min_count": min_count,
        "lr": lr,
    }
    return table
