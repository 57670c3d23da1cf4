"""Sentence-vector index with exact cosine search over passages.

Entries hold the decoded entity+aspect concatenation per sentence
(float32, the on-disk record width); the passage registry maps passage
ids to contiguous sentence ranges. The index is immutable after build.
Scores are computed in float64; a passage's score is the mean of its
sentences' cosine scores against the query.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, IntegrityError, NotFoundError, ParseError, ShapeError

MAGIC = b"CDVIDX1\n"


@dataclass
class ScoredPassage:
    passage_id: str
    score: float
    sentence_scores: np.ndarray
    doc_id: str = ""
    heading: str = ""


class VectorIndex:
    def __init__(self, dimension, d_eps, doc_ids, doc_lengths, vectors, registry, meta=None):
        self.dimension = dimension
        self.d_eps = d_eps
        self.doc_ids = list(doc_ids)
        self.doc_lengths = list(doc_lengths)
        arr = np.asarray(vectors, dtype=np.float32)
        self.vectors = arr.reshape(-1, dimension) if dimension else arr.reshape(0, 0)
        # registry: passage_id -> {doc, start, end, heading}; doc is an index
        # into doc_ids, start/end are sentence positions within the document
        self.registry = dict(registry)
        self.meta = dict(meta or {})

        self.doc_offsets = {}
        offset = 0
        for i, length in enumerate(self.doc_lengths):
            self.doc_offsets[i] = offset
            offset += length
        if offset != self.vectors.shape[0]:
            raise IntegrityError(
                f"doc lengths sum to {offset} but index holds {self.vectors.shape[0]} vectors"
            )
        self._doc_index = {d: i for i, d in enumerate(self.doc_ids)}
        for pid, entry in self.registry.items():
            length = self.doc_lengths[entry["doc"]]
            if not (0 <= entry["start"] < entry["end"] <= length):
                raise IntegrityError(
                    f"passage {pid!r} range [{entry['start']}, {entry['end']}) "
                    f"outside document of {length} sentences"
                )
        self._v64 = self.vectors.astype(np.float64)
        norms = np.linalg.norm(self._v64, axis=1)
        self._inv_norms = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
        # passage order for deterministic iteration and tie-breaking
        self.passage_order = sorted(
            self.registry, key=lambda pid: (self.registry[pid]["doc"], self.registry[pid]["start"])
        )

    # --- properties ---

    @property
    def entry_count(self) -> int:
        return self.vectors.shape[0]

    @property
    def passage_count(self) -> int:
        return len(self.registry)

    def entry_vector(self, doc_id: str, sentence_index: int) -> np.ndarray:
        if doc_id not in self._doc_index:
            raise NotFoundError(f"document {doc_id!r} not in index")
        d = self._doc_index[doc_id]
        if not (0 <= sentence_index < self.doc_lengths[d]):
            raise NotFoundError(f"sentence {sentence_index} not in document {doc_id!r}")
        return self._v64[self.doc_offsets[d] + sentence_index]

    def _passage_rows(self, passage_id: str):
        if passage_id not in self.registry:
            raise NotFoundError(f"passage {passage_id!r} not registered")
        entry = self.registry[passage_id]
        base = self.doc_offsets[entry["doc"]]
        return base + entry["start"], base + entry["end"], entry

    def content_fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.vectors).tobytes())
        h.update(
            json.dumps(
                {
                    "docs": self.doc_ids,
                    "lengths": self.doc_lengths,
                    "registry": {k: self.registry[k] for k in sorted(self.registry)},
                    "dimension": self.dimension,
                    "d_eps": self.d_eps,
                },
                sort_keys=True,
                separators=(",", ":"),
            ).encode("ascii")
        )
        return h.hexdigest()

    # --- scoring ---

    def _query_array(self, query) -> np.ndarray:
        values = np.asarray(getattr(query, "values", query), dtype=float)
        if values.shape[0] != self.dimension:
            raise ShapeError(
                f"query has dim {values.shape[0]} but index stores dim {self.dimension}"
            )
        return values

    def _sentence_scores_all(self, q: np.ndarray) -> np.ndarray:
        qn = np.linalg.norm(q)
        if qn == 0:
            return np.zeros(self.entry_count)
        return (self._v64 @ q) * self._inv_norms / qn

    def score_passage(self, query, passage_id: str) -> ScoredPassage:
        q = self._query_array(query)
        lo, hi, entry = self._passage_rows(passage_id)
        sims = self._sentence_scores_all(q)[lo:hi]
        return ScoredPassage(
            passage_id=passage_id,
            score=float(sims.mean()),
            sentence_scores=sims,
            doc_id=self.doc_ids[entry["doc"]],
            heading=entry.get("heading", ""),
        )

    def rank_candidates(self, query, candidate_ids) -> list[ScoredPassage]:
        """Descending by score; ties broken by corpus order (doc, start)."""
        candidates = list(candidate_ids)
        if not candidates:
            raise EmptyInputError("no candidate passages to rank")
        q = self._query_array(query)
        sims = self._sentence_scores_all(q)
        scored = []
        for pid in candidates:
            lo, hi, entry = self._passage_rows(pid)
            part = sims[lo:hi]
            scored.append(
                ScoredPassage(
                    passage_id=pid,
                    score=float(part.mean()),
                    sentence_scores=part,
                    doc_id=self.doc_ids[entry["doc"]],
                    heading=entry.get("heading", ""),
                )
            )
        scored.sort(
            key=lambda sp: (
                -sp.score,
                self.registry[sp.passage_id]["doc"],
                self.registry[sp.passage_id]["start"],
            )
        )
        return scored

    def search_all(self, query, top_k: int) -> list[ScoredPassage]:
        """Exact top-k over every registered passage."""
        if top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not self.registry:
            return []
        ranked = self.rank_candidates(query, self.passage_order)
        return ranked[:top_k]

    def sentence_histogram(self, query, doc_id: str):
        """(combined, entity-only, aspect-only) score curves over a document.

        The combined curve is the cosine of the full concatenations; the
        sub-curves are cosines of the entity and aspect slices. The
        combined value is NOT the mean of the two sub-scores.
        """
        if doc_id not in self._doc_index:
            raise NotFoundError(f"document {doc_id!r} not in index")
        q = self._query_array(query)
        d = self._doc_index[doc_id]
        lo = self.doc_offsets[d]
        hi = lo + self.doc_lengths[d]
        block = self._v64[lo:hi]
        de = self.d_eps

        def curve(vecs, qpart):
            qn = np.linalg.norm(qpart)
            norms = np.linalg.norm(vecs, axis=1)
            inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
            if qn == 0:
                return np.zeros(vecs.shape[0])
            return (vecs @ qpart) * inv / qn

        return (
            curve(block, q),
            curve(block[:, :de], q[:de]),
            curve(block[:, de:], q[de:]),
        )

    def nearest_sentences(self, query, k: int, backend=None):
        """Top-k sentence entries by cosine; optionally pre-filtered by an
        approximate backend, re-ranked exactly within its candidates."""
        q = self._query_array(query)
        if backend is None:
            sims = self._sentence_scores_all(q)
            order = np.argsort(-sims, kind="stable")[:k]
        else:
            cand = backend.query(q, k)
            if len(cand) == 0:
                return []
            sims_c = (self._v64[cand] @ q) * self._inv_norms[cand] / max(np.linalg.norm(q), 1e-300)
            order = np.asarray(cand)[np.argsort(-sims_c, kind="stable")[:k]]
        return [int(i) for i in order]

    # --- persistence ---

    def save(self, path) -> str:
        header = {
            "dimension": self.dimension,
            "entry_count": self.entry_count,
            "passage_count": self.passage_count,
            "build_fingerprint": self.content_fingerprint(),
            "d_eps": self.d_eps,
            "meta": self.meta,
        }
        registry_block = {
            "docs": self.doc_ids,
            "lengths": self.doc_lengths,
            "registry": {k: self.registry[k] for k in sorted(self.registry)},
        }
        header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("ascii")
        registry_bytes = json.dumps(registry_block, sort_keys=True, separators=(",", ":")).encode(
            "ascii"
        )
        vec = np.ascontiguousarray(self.vectors, dtype="<f4").tobytes()
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<QQQ", len(header_bytes), len(vec), len(registry_bytes)))
            fh.write(header_bytes)
            fh.write(vec)
            fh.write(registry_bytes)
        return header["build_fingerprint"]

    @classmethod
    def load(cls, path) -> "VectorIndex":
        data = Path(path).read_bytes()
        if data[: len(MAGIC)] != MAGIC:
            raise ParseError("not an index file (bad magic)", path)
        pos = len(MAGIC)
        h_len, v_len, r_len = struct.unpack_from("<QQQ", data, pos)
        pos += 24
        header = json.loads(data[pos : pos + h_len].decode("ascii"))
        pos += h_len
        vectors = np.frombuffer(data[pos : pos + v_len], dtype="<f4").reshape(
            header["entry_count"], header["dimension"]
        )
        pos += v_len
        registry_block = json.loads(data[pos : pos + r_len].decode("ascii"))
        index = cls(
            dimension=header["dimension"],
            d_eps=header["d_eps"],
            doc_ids=registry_block["docs"],
            doc_lengths=registry_block["lengths"],
            vectors=vectors.copy(),
            registry=registry_block["registry"],
            meta=header.get("meta"),
        )
        if index.content_fingerprint() != header["build_fingerprint"]:
            raise IntegrityError("index content does not match its build fingerprint")
        return index


def build_index(matrices, passages, meta=None) -> VectorIndex:
    """Assemble the index from per-document discourse matrices.

    One entry per sentence (decoded entity+aspect concatenation); every
    passage must fall inside its document's matrix range.
    """
    by_doc = {}
    doc_ids = []
    for mat in matrices:
        if mat.doc_id in by_doc:
            raise IntegrityError(f"duplicate discourse matrix for doc {mat.doc_id!r}")
        by_doc[mat.doc_id] = mat
        doc_ids.append(mat.doc_id)
    if not doc_ids:
        return VectorIndex(0, 0, [], [], np.zeros((0, 0), dtype=np.float32), {}, meta)
    first = by_doc[doc_ids[0]]
    d_eps = first.eps_hat.shape[1]
    dim = d_eps + first.alpha_hat.shape[1]
    blocks = []
    lengths = []
    for did in doc_ids:
        mat = by_doc[did]
        blocks.append(np.concatenate([mat.eps_hat, mat.alpha_hat], axis=1))
        lengths.append(len(mat))
    vectors = np.concatenate(blocks, axis=0).astype(np.float32)
    doc_index = {d: i for i, d in enumerate(doc_ids)}
    registry = {}
    for p in passages:
        if p.doc_id not in doc_index:
            raise IntegrityError(f"passage {p.passage_id!r} references unknown doc {p.doc_id!r}")
        length = lengths[doc_index[p.doc_id]]
        if not (0 <= p.start < p.end <= length):
            raise IntegrityError(
                f"passage {p.passage_id!r} range [{p.start}, {p.end}) outside "
                f"document {p.doc_id!r} of {length} sentences"
            )
        if p.passage_id in registry:
            raise IntegrityError(f"duplicate passage id {p.passage_id!r}")
        registry[p.passage_id] = {
            "doc": doc_index[p.doc_id],
            "start": p.start,
            "end": p.end,
            "heading": p.heading,
        }
    return VectorIndex(dim, d_eps, doc_ids, lengths, vectors, registry, meta)


def score_sentence(query, entry_vector) -> float:
    """Cosine between the query concatenation and one entry vector."""
    from .nn import cosine

    values = np.asarray(getattr(query, "values", query), dtype=float)
    return cosine(values, np.asarray(entry_vector, dtype=float))


class CosineLsh:
    """Random-hyperplane LSH over the index's sentence vectors.

    Approximate candidate generation only; callers re-rank candidates
    exactly. Union of matches across tables.
    """

    def __init__(self, vectors, n_tables: int = 32, n_bits: int = 6, seed: int = 0):
        vectors = np.asarray(vectors, dtype=float)
        self.n_tables = n_tables
        self.n_bits = n_bits
        rng = np.random.default_rng(seed)
        self.planes = rng.normal(size=(n_tables, n_bits, vectors.shape[1]))
        self.tables: list[dict[int, list[int]]] = []
        for t in range(n_tables):
            signs = (vectors @ self.planes[t].T) > 0
            keys = np.packbits(signs, axis=1, bitorder="little")[:, 0]
            table: dict[int, list[int]] = {}
            for row, key in enumerate(keys):
                table.setdefault(int(key), []).append(row)
            self.tables.append(table)

    def query(self, q, k: int) -> list[int]:
        q = np.asarray(q, dtype=float)
        out: set[int] = set()
        for t in range(self.n_tables):
            signs = (self.planes[t] @ q) > 0
            key = int(np.packbits(signs, bitorder="little")[0])
            out.update(self.tables[t].get(key, ()))
        return sorted(out)
