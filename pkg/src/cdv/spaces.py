"""Entity and aspect embedding spaces and structured query vectors.

Both spaces share one architecture: a BLSTM over frozen word vectors,
pooled as the average of the forward scan's last state and the backward
scan's first state, a tanh embedding layer (the space's vectors live
here), and a sigmoid output layer trained with the pairwise ranking loss
to light up the bloom bits of the label id. Stored vectors are the mean
embedding over an id's context sentences; unseen ids fall back to
encoding their surface string on the fly.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass

import numpy as np

from . import serialization
from .corpus import ABSTRACT_ASPECT, Document, heading_normalize, tokenize
from .embeddings import WordEmbeddingTable
from .errors import (
    EmptyInputError,
    IntegrityError,
    ParseError,
    UnresolvableEntityError,
)
from .nn import AdamState, Blstm, Dense, bpmll_loss_grad, dropout_mask

logger = logging.getLogger(__name__)


# --- bloom encoding ---------------------------------------------------------


class BloomEncoder:
    """k seeded hash positions over an m-bit signature."""

    def __init__(self, n_bits: int = 1024, n_hashes: int = 5, seed: int = 0):
        if n_hashes < 1:
            raise ValueError("need at least one hash")
        if n_bits < n_hashes:
            raise ValueError(f"n_bits={n_bits} must be >= n_hashes={n_hashes}")
        self.n_bits = n_bits
        self.n_hashes = n_hashes
        self.seed = seed

    def positions(self, identifier: str) -> list[int]:
        """Sorted distinct bit positions for an id; between 1 and k bits."""
        if not identifier:
            raise EmptyInputError("cannot bloom-encode an empty id")
        out = set()
        data = identifier.encode("utf-8")
        for i in range(self.n_hashes):
            key = f"{self.seed}:{i}".encode("ascii")
            digest = hashlib.blake2b(data, digest_size=8, key=key).digest()
            out.add(int.from_bytes(digest, "little") % self.n_bits)
        return sorted(out)

    def encode(self, identifier: str) -> np.ndarray:
        bits = np.zeros(self.n_bits, dtype=np.uint8)
        bits[self.positions(identifier)] = 1
        return bits

    def spec(self) -> dict:
        return {"n_bits": self.n_bits, "n_hashes": self.n_hashes, "seed": self.seed}


def bloom_encode(identifier: str, encoder: BloomEncoder) -> np.ndarray:
    return encoder.encode(identifier)


# --- knowledge base ---------------------------------------------------------


@dataclass
class KbEntry:
    entity_id: str
    name: str
    descriptions: list[str]


def load_kb(path) -> dict[str, KbEntry]:
    """Line-delimited JSON records {entity_id, name, descriptions}."""
    out: dict[str, KbEntry] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path, line_no) from exc
            eid = rec.get("entity_id")
            if not isinstance(eid, str) or not eid:
                raise ParseError("record missing entity_id", path, line_no)
            if eid in out:
                raise IntegrityError(f"duplicate entity_id {eid!r} at line {line_no}")
            descs = rec.get("descriptions", [])
            if not isinstance(descs, list):
                raise ParseError("descriptions must be a list", path, line_no)
            out[eid] = KbEntry(eid, rec.get("name", ""), [str(d) for d in descs])
    return out


# --- sequence encoder -------------------------------------------------------


@dataclass
class EncoderHyper:
    """Encoder training settings.

    The embedding dim defaults to the hidden dim (a square projection):
    narrower bottlenecks visibly distort the cosine geometry that nearest
    neighbor lookups depend on. The short schedule and small step size
    are deliberate: at small-corpus scale, aggressive optimization of
    this loss measurably degrades the mean-embedding geometry even as
    the loss itself falls. Raise lr toward 1e-3 for corpus-scale runs.
    """

    hidden: int = 32
    embed_dim: int = 32
    epochs: int = 5
    batch_size: int = 128
    lr: float = 1e-4
    lr_decay: float = 0.975
    weight_decay: float = 1e-4
    dropout: float = 0.5


class SequenceEncoder:
    """BLSTM + standardized pooling + tanh embedding layer + sigmoid output.

    ``center``/``scale`` standardize the pooled state with statistics of
    the training corpus (frozen, checkpointed). LSTM end states carry a
    large input-independent component (gate biases plus forget-gate
    accumulation) and, at small corpus scale, only faint input-driven
    variation; standardizing keeps the embedding's cosine geometry driven
    by content at a usable magnitude. The embedding layer is bias-free
    for the same reason: a bias would put a shared offset back into every
    embedding and flatten the contrast.
    """

    def __init__(self, word_dim: int, hidden: int, embed_dim: int, out_bits: int, seed: int):
        rng = np.random.default_rng(seed)
        self.blstm = Blstm(word_dim, hidden, rng, name="blstm")
        self.embed_layer = Dense(
            hidden, embed_dim, activation="tanh", rng=rng, name="embed", use_bias=False
        )
        self.out_layer = Dense(embed_dim, out_bits, activation="sigmoid", rng=rng, name="out")
        self.center = np.zeros(hidden)
        self.scale = np.ones(hidden)
        self.word_dim = word_dim
        self.hidden = hidden
        self.embed_dim = embed_dim
        self.out_bits = out_bits
        self.seed = seed

    @property
    def params(self):
        return {**self.blstm.params, **self.embed_layer.params, **self.out_layer.params}

    @property
    def grads(self):
        return {**self.blstm.grads, **self.embed_layer.grads, **self.out_layer.grads}

    def zero_grads(self):
        self.blstm.zero_grads()
        self.embed_layer.zero_grads()
        self.out_layer.zero_grads()

    def _pool(self, X: np.ndarray) -> np.ndarray:
        """Average of the forward scan's last and backward scan's first state."""
        H = self.blstm.forward(X)
        return 0.5 * (H[-1, : self.hidden] + H[0, self.hidden :])

    def _unpool_grad(self, dpooled: np.ndarray, T: int) -> np.ndarray:
        dH = np.zeros((T, 2 * self.hidden))
        dH[-1, : self.hidden] = 0.5 * dpooled
        dH[0, self.hidden :] = 0.5 * dpooled
        return dH

    def _standardize(self, pooled: np.ndarray) -> np.ndarray:
        return (pooled - self.center) / self.scale

    def fit_standardization(self, pooled_rows) -> None:
        rows = np.asarray(pooled_rows)
        self.center = rows.mean(axis=0)
        std = rows.std(axis=0)
        self.scale = np.where(std < 1e-8, 1.0, std)

    def embed_vectors(self, X: np.ndarray) -> np.ndarray:
        """Embedding of a word-vector sequence (inference path)."""
        if X.shape[0] == 0:
            raise EmptyInputError("cannot embed an empty sequence")
        return self.embed_layer.forward(self._standardize(self._pool(X)))

    def train_step(self, X: np.ndarray, positive_bits, drop_mask=None, scale: float = 1.0):
        """Forward + backward for one labeled sentence; returns the loss."""
        pooled = self._standardize(self._pool(X))
        dropped = pooled * drop_mask if drop_mask is not None else pooled
        emb = self.embed_layer.forward(dropped)
        scores = self.out_layer.forward(emb)
        loss, dscores = bpmll_loss_grad(scores, positive_bits)
        demb = self.out_layer.backward(dscores * scale)
        dpooled = self.embed_layer.backward(demb)
        if drop_mask is not None:
            dpooled = dpooled * drop_mask
        self.blstm.backward(self._unpool_grad(dpooled / self.scale, X.shape[0]))
        return loss


def embed_sentence_epsilon(encoder: SequenceEncoder, table: WordEmbeddingTable, tokens) -> np.ndarray:
    """Embedding of a token sequence through the trained encoder."""
    if not tokens:
        raise EmptyInputError("cannot embed an empty sentence")
    return encoder.embed_vectors(table.embed_tokens(tokens))


def _train_encoder(examples, table, bloom, hyper, seed):
    """Shared trainer: examples are (tokens, label_ids) pairs.

    The positive bits of an example are the union of its labels' bloom
    positions. Returns the encoder and the per-epoch mean loss curve.
    """
    if not examples:
        raise EmptyInputError("no training examples for the encoder")
    encoder = SequenceEncoder(table.dimension, hyper.hidden, hyper.embed_dim, bloom.n_bits, seed)
    prepared = []
    for tokens, label_ids in examples:
        positions = sorted({p for lid in label_ids for p in bloom.positions(lid)})
        X = table.embed_tokens(tokens)
        prepared.append((X, positions))
    encoder.fit_standardization([encoder._pool(X) for X, _ in prepared])
    adam = AdamState(
        encoder.params,
        lr=hyper.lr,
        weight_decay=hyper.weight_decay,
        lr_decay=hyper.lr_decay,
    )
    rng = np.random.default_rng(seed + 1)
    curve = []
    params = encoder.params
    for _epoch in range(hyper.epochs):
        order = rng.permutation(len(prepared))
        total = 0.0
        for start in range(0, len(order), hyper.batch_size):
            batch = order[start : start + hyper.batch_size]
            encoder.zero_grads()
            scale = 1.0 / len(batch)
            for idx in batch:
                X, positions = prepared[idx]
                mask = (
                    dropout_mask(rng, encoder.hidden, hyper.dropout)
                    if hyper.dropout > 0
                    else None
                )
                total += encoder.train_step(X, positions, mask, scale)
            adam.step(params, encoder.grads)
        adam.advance_epoch()
        curve.append(total / len(prepared))
    # the pooled distribution drifts during training; refit on the trained
    # weights so inference embeddings stay standardized over the corpus
    encoder.fit_standardization([encoder._pool(X) for X, _ in prepared])
    return encoder, curve


# --- spaces -----------------------------------------------------------------


class _Space:
    """Shared storage/lookup/serialization for both embedding spaces."""

    kind = "space"

    def __init__(self, encoder, table, bloom, ids, vectors, counts, meta=None):
        self.encoder = encoder
        self.word_table = table
        self.bloom = bloom
        self.ids = list(ids)
        self.vectors = np.asarray(vectors, dtype=float)
        self.counts = dict(counts)
        self.meta = dict(meta or {})
        self._index = {i: row for row, i in enumerate(self.ids)}

    @property
    def dimension(self) -> int:
        return self.encoder.embed_dim

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def vector_of(self, key: str) -> np.ndarray:
        return self.vectors[self._index[key]]

    def encode_text(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise EmptyInputError(f"no usable tokens in {text!r}")
        return embed_sentence_epsilon(self.encoder, self.word_table, tokens)

    # --- persistence ---

    def _meta_payload(self) -> dict:
        return {}

    def to_bytes(self) -> bytes:
        meta = {
            "kind": self.kind,
            "ids": self.ids,
            "counts": [self.counts.get(i, 0) for i in self.ids],
            "bloom": self.bloom.spec(),
            "encoder": {
                "word_dim": self.encoder.word_dim,
                "hidden": self.encoder.hidden,
                "embed_dim": self.encoder.embed_dim,
                "out_bits": self.encoder.out_bits,
                "seed": self.encoder.seed,
            },
            "word_table_fingerprint": self.word_table.fingerprint(),
            "extra": self.meta,
        }
        meta.update(self._meta_payload())
        tensors = {
            "vectors": self.vectors,
            "pool_center": self.encoder.center,
            "pool_scale": self.encoder.scale,
        }
        for name, arr in self.encoder.params.items():
            tensors[f"param.{name}"] = arr
        return serialization.dump_bytes(meta, tensors)

    def fingerprint(self) -> str:
        return serialization.fingerprint_bytes(self.to_bytes())

    def save(self, path) -> str:
        data = self.to_bytes()
        with open(path, "wb") as fh:
            fh.write(data)
        return serialization.fingerprint_bytes(data)

    @classmethod
    def _restore(cls, meta, tensors, table, **extra_kwargs):
        if meta["word_table_fingerprint"] != table.fingerprint():
            raise IntegrityError(
                "word table fingerprint does not match the one this space was built with"
            )
        enc_meta = meta["encoder"]
        encoder = SequenceEncoder(
            enc_meta["word_dim"],
            enc_meta["hidden"],
            enc_meta["embed_dim"],
            enc_meta["out_bits"],
            enc_meta["seed"],
        )
        params = encoder.params
        for name, arr in tensors.items():
            if name.startswith("param."):
                params[name[len("param.") :]][...] = arr
        encoder.center = tensors["pool_center"]
        encoder.scale = tensors["pool_scale"]
        bloom = BloomEncoder(**meta["bloom"])
        counts = dict(zip(meta["ids"], meta["counts"]))
        return cls(
            encoder=encoder,
            table=table,
            bloom=bloom,
            ids=meta["ids"],
            vectors=tensors["vectors"],
            counts=counts,
            meta=meta.get("extra"),
            **extra_kwargs,
        )


class EntitySpace(_Space):
    kind = "entity_space"

    def __init__(self, encoder, table, bloom, ids, vectors, counts, kb=None, meta=None):
        super().__init__(encoder, table, bloom, ids, vectors, counts, meta)
        self.kb: dict[str, KbEntry] = kb or {}

    def _meta_payload(self):
        return {
            "kb": [
                {"entity_id": e.entity_id, "name": e.name, "descriptions": e.descriptions}
                for e in (self.kb[i] for i in self.ids if i in self.kb)
            ]
        }

    def embed(self, entity: dict) -> np.ndarray:
        """Resolve {id, mention}: stored vector first, mention fallback second."""
        eid = entity.get("id") or ""
        mention = entity.get("mention") or ""
        if eid and eid in self:
            return self.vector_of(eid)
        if mention and tokenize(mention):
            return self.encode_text(mention)
        raise UnresolvableEntityError(
            f"entity id {eid!r} unknown and mention {mention!r} unusable"
        )

    @classmethod
    def load(cls, path, table) -> "EntitySpace":
        meta, tensors = serialization.load(path)
        if meta.get("kind") != cls.kind:
            raise ParseError(f"not an entity space checkpoint: kind={meta.get('kind')!r}", path)
        kb = {e["entity_id"]: KbEntry(e["entity_id"], e["name"], e["descriptions"]) for e in meta["kb"]}
        return cls._restore(meta, tensors, table, kb=kb)


class AspectSpace(_Space):
    kind = "aspect_space"

    def embed(self, aspect: str) -> np.ndarray:
        """Mean embedding of the normalized fragments; unseen fragments are
        encoded from their surface string."""
        fragments = heading_normalize(aspect)
        if not fragments:
            if aspect.strip() == "":
                fragments = [ABSTRACT_ASPECT]
            else:
                return self.encode_text(aspect)
        parts = []
        for frag in fragments:
            parts.append(self.vector_of(frag) if frag in self else self.encode_text(frag))
        return np.mean(parts, axis=0)

    @classmethod
    def load(cls, path, table) -> "AspectSpace":
        meta, tensors = serialization.load(path)
        if meta.get("kind") != cls.kind:
            raise ParseError(f"not an aspect space checkpoint: kind={meta.get('kind')!r}", path)
        return cls._restore(meta, tensors, table)


# --- training entry points --------------------------------------------------


def train_entity_encoder(
    kb: dict[str, KbEntry],
    table: WordEmbeddingTable,
    bloom: BloomEncoder,
    hyper: EncoderHyper | None = None,
    seed: int = 0,
):
    """Train the entity encoder on description sentences.

    Entities without any tokenizable description (and no usable name) are
    skipped with a logged count. Returns (encoder, loss_curve, n_skipped).
    """
    hyper = hyper or EncoderHyper()
    examples = []
    skipped = 0
    for entry in kb.values():
        texts = entry.descriptions if entry.descriptions else [entry.name]
        usable = [tokenize(t) for t in texts]
        usable = [t for t in usable if t]
        if not usable:
            skipped += 1
            continue
        for tokens in usable:
            examples.append((tokens, [entry.entity_id]))
    if skipped:
        logger.warning("skipped %d entities without usable descriptions", skipped)
    encoder, curve = _train_encoder(examples, table, bloom, hyper, seed)
    return encoder, curve, skipped


def build_entity_space(
    encoder: SequenceEncoder,
    kb: dict[str, KbEntry],
    table: WordEmbeddingTable,
    bloom: BloomEncoder,
) -> EntitySpace:
    """Mean description embedding per entity (name used when empty)."""
    ids, rows, counts = [], [], {}
    for entry in kb.values():
        texts = entry.descriptions if entry.descriptions else [entry.name]
        embeddings = []
        for text in texts:
            tokens = tokenize(text)
            if tokens:
                embeddings.append(embed_sentence_epsilon(encoder, table, tokens))
        if not embeddings:
            continue
        ids.append(entry.entity_id)
        rows.append(np.mean(embeddings, axis=0))
        counts[entry.entity_id] = len(embeddings)
    vectors = np.stack(rows) if rows else np.zeros((0, encoder.embed_dim))
    return EntitySpace(encoder, table, bloom, ids, vectors, counts, kb=kb)


def embed_entity(space: EntitySpace, entity: dict) -> np.ndarray:
    return space.embed(entity)


def heading_context_pairs(docs: list[Document]):
    """(normalized heading fragments, sentence tokens) pairs from sections."""
    pairs = []
    for doc in docs:
        for sec in doc.sections:
            fragments = heading_normalize(sec.heading) or [ABSTRACT_ASPECT]
            for sent in sec.sentences:
                pairs.append((fragments, sent.tokens))
    return pairs


def train_aspect_space(
    pairs,
    table: WordEmbeddingTable,
    bloom: BloomEncoder,
    hyper: EncoderHyper | None = None,
    seed: int = 0,
) -> AspectSpace:
    """Train the aspect encoder and build the per-aspect mean table.

    ``pairs`` is an iterable of (heading fragments, sentence tokens); a
    sentence under a multi-fragment heading targets the union of the
    fragments' bloom bits.
    """
    hyper = hyper or EncoderHyper()
    pairs = [(list(frags), list(tokens)) for frags, tokens in pairs if tokens and frags]
    if not pairs:
        raise EmptyInputError("no heading-context pairs to train on")
    examples = [(tokens, frags) for frags, tokens in pairs]
    encoder, curve = _train_encoder(examples, table, bloom, hyper, seed)

    by_aspect: dict[str, list] = {}
    for frags, tokens in pairs:
        emb = embed_sentence_epsilon(encoder, table, tokens)
        for frag in frags:
            by_aspect.setdefault(frag, []).append(emb)
    ids = sorted(by_aspect)
    vectors = np.stack([np.mean(by_aspect[a], axis=0) for a in ids])
    counts = {a: len(by_aspect[a]) for a in ids}
    space = AspectSpace(encoder, table, bloom, ids, vectors, counts)
    space.meta["train_loss"] = curve
    return space


def embed_aspect(space: AspectSpace, aspect: str) -> np.ndarray:
    return space.embed(aspect)


# --- query representation ---------------------------------------------------


@dataclass
class QueryVector:
    entity_part: np.ndarray
    aspect_part: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([self.entity_part, self.aspect_part])

    @property
    def dimension(self) -> int:
        return self.entity_part.shape[0] + self.aspect_part.shape[0]


def build_query(espace: EntitySpace, aspace: AspectSpace, entity: dict, aspect: str) -> QueryVector:
    """Concatenated entity and aspect embeddings for a structured query."""
    if not aspect or not aspect.strip():
        raise EmptyInputError("query aspect string is empty")
    return QueryVector(entity_part=espace.embed(entity), aspect_part=aspace.embed(aspect))
