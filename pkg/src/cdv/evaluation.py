"""Re-ranking evaluation protocol: candidate prefilter with true-answer
injection, R@K / MAP metrics, and the experiment runner."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import InvertedIndex
from .corpus import tokenize
from .errors import EmptyInputError, ParseError
from .spaces import build_query

logger = logging.getLogger(__name__)


@dataclass
class EvalQuery:
    query_id: str
    entity_id: str
    mention: str
    aspect: str
    relevant: set[str]

    @property
    def text(self) -> str:
        """Flat form for term baselines, e.g. "IgA nephropathy symptoms"."""
        return f"{self.mention} {self.aspect}"

    @property
    def entity(self) -> dict:
        return {"id": self.entity_id, "mention": self.mention}


def load_queries(path) -> list[EvalQuery]:
    """Tab-separated: entity_id, mention, aspect, comma-separated relevant ids."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ParseError(
                    f"expected 4 tab-separated fields, got {len(parts)}", path, line_no
                )
            entity_id, mention, aspect, relevant = parts
            ids = {r for r in relevant.split(",") if r}
            out.append(EvalQuery(f"q{line_no}", entity_id, mention, aspect, ids))
    return out


def recall_at_k(ranked_ids, relevant: set, k: int) -> float:
    if not relevant:
        raise EmptyInputError("recall undefined for an empty relevant set")
    top = set(ranked_ids[:k])
    return len(top & relevant) / len(relevant)


def average_precision(ranked_ids, relevant: set) -> float:
    """Mean over all relevant items of precision at their rank; relevant
    items missing from the ranking contribute zero."""
    if not relevant:
        raise EmptyInputError("average precision undefined for an empty relevant set")
    hits = 0
    total = 0.0
    for rank, pid in enumerate(ranked_ids, start=1):
        if pid in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def query_rng(run_seed: int, query_id: str) -> np.random.Generator:
    """Per-query generator: parallel and serial runs shuffle identically."""
    digest = hashlib.blake2b(
        f"{run_seed}:{query_id}".encode("utf-8"), digest_size=8
    ).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def prefilter_candidates(
    query: EvalQuery, inv: InvertedIndex, n: int = 64, rng: np.random.Generator | None = None
) -> list[str]:
    """BM25 top-n, then missing true answers overwrite the lowest-ranked
    false answers, then the per-query shuffle."""
    if n < len(query.relevant):
        raise ValueError(
            f"candidate budget {n} is smaller than the relevant set ({len(query.relevant)})"
        )
    rng = rng if rng is not None else query_rng(0, query.query_id)
    ranked = inv.rank(tokenize(query.text), scorer="bm25")
    candidates = [pid for pid, _ in ranked[:n]]
    present = set(candidates)
    missing = sorted(r for r in query.relevant if r not in present)
    if missing:
        slots = [i for i in range(len(candidates) - 1, -1, -1) if candidates[i] not in query.relevant]
        for pid, slot in zip(missing, slots):
            candidates[slot] = pid
    rng.shuffle(candidates)
    return candidates


@dataclass
class QueryResult:
    query_id: str
    entity_id: str
    aspect: str
    n_candidates: int
    ranked: list[str]
    rank_of_first_relevant: int
    r_at_1: float
    r_at_10: float
    ap: float
    latency_ms: float


@dataclass
class EvalReport:
    model: str
    dataset: str
    r_at_1: float        # percent; recall formula |rel & top1| / |rel|
    r_at_10: float       # percent
    map_score: float     # percent
    n_queries: int
    hit_at_1: float = 0.0  # percent of queries whose top-1 is relevant
    n_dropped_missing: int = 0
    n_dropped_empty: int = 0
    per_query: list[QueryResult] = field(default_factory=list)
    mean_latency_ms: float = 0.0
    max_latency_ms: float = 0.0

    def summary_row(self) -> str:
        return (
            f"{self.model}\t{self.dataset}\t{self.r_at_1:.2f}\t{self.r_at_10:.2f}"
            f"\t{self.map_score:.2f}\t{self.n_queries}"
        )

    def write(self, out_dir, stem: str | None = None) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or f"report_{self.model}"
        summary = out / f"{stem}.tsv"
        detail = out / f"{stem}.jsonl"
        summary.write_text(
            "model\tdataset\tR@1\tR@10\tMAP\tn_queries\n" + self.summary_row() + "\n",
            encoding="utf-8",
        )
        with open(detail, "w", encoding="utf-8") as fh:
            for r in self.per_query:
                fh.write(
                    json.dumps(
                        {
                            "query_id": r.query_id,
                            "entity_id": r.entity_id,
                            "aspect": r.aspect,
                            "n_candidates": r.n_candidates,
                            "ranked": r.ranked,
                            "rank_of_first_relevant": r.rank_of_first_relevant,
                            "r_at_1": r.r_at_1,
                            "r_at_10": r.r_at_10,
                            "ap": r.ap,
                            "latency_ms": r.latency_ms,
                        }
                    )
                    + "\n"
                )
        return {"summary": str(summary), "detail": str(detail)}


def make_ranker(model: str, inv: InvertedIndex, cdv_artifacts=None):
    """Ranking callables share one signature: (query, candidate_ids) -> ids."""
    if model in ("bm25", "tfidf"):

        def ranker(query: EvalQuery, candidates: list[str]) -> list[str]:
            ranked = inv.rank(tokenize(query.text), candidates, scorer=model)
            return [pid for pid, _ in ranked]

        return ranker
    if model == "cdv":
        if cdv_artifacts is None:
            raise ValueError("cdv ranking needs (index, espace, aspace)")
        vindex, espace, aspace = cdv_artifacts

        def ranker(query: EvalQuery, candidates: list[str]) -> list[str]:
            qv = build_query(espace, aspace, query.entity, query.aspect)
            return [sp.passage_id for sp in vindex.rank_candidates(qv, candidates)]

        return ranker
    raise ValueError(f"unknown model {model!r}")


def run_experiment(
    ranker,
    inv: InvertedIndex,
    queries: list[EvalQuery],
    seed: int = 0,
    n_candidates: int = 64,
    model_name: str = "model",
    dataset: str = "dataset",
) -> EvalReport:
    """Per-query candidate generation, ranking, and metric aggregation.

    ``ranker`` is a callable (query, candidate_ids) -> ranked ids (use
    :func:`make_ranker` for the built-in models). Queries whose relevant
    passages are missing from the corpus are dropped with a logged count;
    queries with an empty relevant set are excluded with a counter.
    """
    known = set(inv.order)
    usable = []
    dropped_missing = dropped_empty = 0
    for q in queries:
        if not q.relevant:
            dropped_empty += 1
            continue
        if not q.relevant <= known:
            dropped_missing += 1
            continue
        usable.append(q)
    if dropped_missing:
        logger.warning("dropped %d queries with relevant passages missing from the corpus", dropped_missing)
    results = []
    for q in usable:
        rng = query_rng(seed, q.query_id)
        candidates = prefilter_candidates(q, inv, n=min(n_candidates, inv.n_passages), rng=rng)
        t0 = time.perf_counter()
        ranked = list(ranker(q, candidates))
        latency = (time.perf_counter() - t0) * 1000.0
        first = next((i + 1 for i, pid in enumerate(ranked) if pid in q.relevant), 0)
        results.append(
            QueryResult(
                query_id=q.query_id,
                entity_id=q.entity_id,
                aspect=q.aspect,
                n_candidates=len(candidates),
                ranked=ranked,
                rank_of_first_relevant=first,
                r_at_1=recall_at_k(ranked, q.relevant, 1),
                r_at_10=recall_at_k(ranked, q.relevant, 10),
                ap=average_precision(ranked, q.relevant),
                latency_ms=latency,
            )
        )
    if not results:
        raise EmptyInputError("no usable queries after filtering")
    latencies = [r.latency_ms for r in results]
    return EvalReport(
        model=model_name,
        dataset=dataset,
        r_at_1=100.0 * float(np.mean([r.r_at_1 for r in results])),
        r_at_10=100.0 * float(np.mean([r.r_at_10 for r in results])),
        map_score=100.0 * float(np.mean([r.ap for r in results])),
        n_queries=len(results),
        hit_at_1=100.0 * float(np.mean([r.rank_of_first_relevant == 1 for r in results])),
        n_dropped_missing=dropped_missing,
        n_dropped_empty=dropped_empty,
        per_query=results,
        mean_latency_ms=float(np.mean(latencies)),
        max_latency_ms=float(np.max(latencies)),
    )


def passages_token_map(docs, passages_by_doc) -> dict[str, list[str]]:
    """passage_id -> token list, in corpus order (for the inverted index)."""
    out = {}
    for doc in docs:
        sentences = doc.sentences
        for p in passages_by_doc[doc.doc_id]:
            tokens = []
            for s in sentences[p.start : p.end]:
                tokens.extend(s.tokens)
            out[p.passage_id] = tokens
    return out
