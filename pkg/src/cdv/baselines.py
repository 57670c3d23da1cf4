"""Term-based baselines over an inverted passage index: Okapi BM25 and
log-scaled TF-IDF cosine."""

from __future__ import annotations

import math
from collections import Counter

from .errors import NotFoundError


class InvertedIndex:
    """Postings over passages with the statistics both scorers need."""

    def __init__(self, passages: dict[str, list[str]]):
        """``passages`` maps passage_id -> token list, in corpus order."""
        self.order = list(passages)
        self.position = {pid: i for i, pid in enumerate(self.order)}
        self.lengths = {pid: len(tokens) for pid, tokens in passages.items()}
        self.term_freqs = {pid: Counter(tokens) for pid, tokens in passages.items()}
        self.postings: dict[str, list[tuple[str, int]]] = {}
        for pid in self.order:
            for term, tf in self.term_freqs[pid].items():
                self.postings.setdefault(term, []).append((pid, tf))
        self.df = {term: len(plist) for term, plist in self.postings.items()}
        self.n_passages = len(self.order)
        total = sum(self.lengths.values())
        self.avg_length = total / self.n_passages if self.n_passages else 0.0

    def _check(self, passage_id):
        if passage_id not in self.term_freqs:
            raise NotFoundError(f"passage {passage_id!r} not indexed")

    def idf_bm25(self, term: str) -> float:
        df = self.df.get(term, 0)
        return math.log(1.0 + (self.n_passages - df + 0.5) / (df + 0.5))

    def idf_ln(self, term: str) -> float:
        df = self.df.get(term, 0)
        if df == 0:
            return 0.0
        return math.log(self.n_passages / df)

    def bm25_score(self, query_terms, passage_id: str, k1: float = 1.2, b: float = 0.75) -> float:
        self._check(passage_id)
        tf = self.term_freqs[passage_id]
        length = self.lengths[passage_id]
        norm = k1 * (1.0 - b + b * length / self.avg_length) if self.avg_length else k1
        score = 0.0
        for term in query_terms:
            f = tf.get(term, 0)
            if f == 0:
                continue
            score += self.idf_bm25(term) * f * (k1 + 1.0) / (f + norm)
        return score

    def _tfidf_weights(self, counts: Counter) -> dict[str, float]:
        out = {}
        for term, tf in counts.items():
            idf = self.idf_ln(term)
            if idf > 0.0 and tf > 0:
                out[term] = (1.0 + math.log(tf)) * idf
        return out

    def tfidf_score(self, query_terms, passage_id: str) -> float:
        """Cosine of (1 + ln tf) * ln(N/df) weight vectors."""
        self._check(passage_id)
        qw = self._tfidf_weights(Counter(query_terms))
        pw = self._tfidf_weights(self.term_freqs[passage_id])
        if not qw or not pw:
            return 0.0
        dot = sum(w * pw[t] for t, w in qw.items() if t in pw)
        nq = math.sqrt(sum(w * w for w in qw.values()))
        np_ = math.sqrt(sum(w * w for w in pw.values()))
        if nq == 0.0 or np_ == 0.0:
            return 0.0
        return dot / (nq * np_)

    def rank(self, query_terms, candidate_ids=None, scorer: str = "bm25") -> list[tuple[str, float]]:
        """Candidates ranked by score descending; ties keep candidate order
        (corpus order when candidates are not given)."""
        candidates = list(candidate_ids) if candidate_ids is not None else list(self.order)
        if scorer == "bm25":
            fn = self.bm25_score
        elif scorer == "tfidf":
            fn = self.tfidf_score
        else:
            raise ValueError(f"unknown scorer {scorer!r}")
        scored = [(pid, fn(query_terms, pid)) for pid in candidates]
        scored.sort(key=lambda item: -item[1])  # stable: ties keep input order
        return scored
