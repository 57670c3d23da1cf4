"""Synthetic retrieval corpus with controlled vocabulary structure.

The construction separates the signals a retriever can exploit:

- entity content tokens appear in every sentence of that entity's
  documents (document-wide signal);
- aspect content tokens appear only inside sections carrying that
  aspect's heading (section-local signal);
- query strings (entity mention + heading word) never appear in any
  passage sentence, so term matching carries zero signal;
- each section contains one shared filler-only sentence whose topic is
  recoverable only from the surrounding context.

All tokens are random letter strings drawn per group, so vocabularies
stay disjoint in both word and subword space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HEADING_POOL = [
    "treatment", "symptoms", "diagnosis", "causes", "prognosis", "prevention",
    "epidemiology", "genetics", "management", "screening", "history", "research",
]

_LETTERS = np.array(list("abcdefghijklmnopqrstuvwxyz"))


@dataclass
class SyntheticSpec:
    n_docs: int = 40
    sections_per_doc: int = 5
    n_entities: int = 8
    n_aspects: int = 6
    sentences_per_section: tuple[int, int] = (3, 5)  # content sentences, inclusive
    entity_tokens: int = 6
    aspect_tokens: int = 6
    filler_tokens: int = 20
    kb_sentences: int = 6
    seed: int = 0


@dataclass
class SyntheticData:
    corpus_records: list[dict]
    kb_records: list[dict]
    queries: list[dict]  # {query_id, entity_id, mention, aspect, relevant}
    neutral_text: str
    spec: SyntheticSpec = field(repr=False, default=None)

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "corpus": out / "corpus.jsonl",
            "kb": out / "kb.jsonl",
            "queries": out / "queries.tsv",
        }
        with open(paths["corpus"], "w", encoding="utf-8") as fh:
            for rec in self.corpus_records:
                fh.write(json.dumps(rec) + "\n")
        with open(paths["kb"], "w", encoding="utf-8") as fh:
            for rec in self.kb_records:
                fh.write(json.dumps(rec) + "\n")
        with open(paths["queries"], "w", encoding="utf-8") as fh:
            for q in self.queries:
                fh.write(
                    f"{q['entity_id']}\t{q['mention']}\t{q['aspect']}\t{','.join(q['relevant'])}\n"
                )
        return {k: str(v) for k, v in paths.items()}


def _word(rng: np.random.Generator, lo=6, hi=10) -> str:
    return "".join(rng.choice(_LETTERS, size=int(rng.integers(lo, hi))))


def _word_pool(rng, count, taken: set, lo=6, hi=10) -> list[str]:
    out = []
    while len(out) < count:
        w = _word(rng, lo, hi)
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def generate(spec: SyntheticSpec | None = None) -> SyntheticData:
    spec = spec or SyntheticSpec()
    if spec.n_aspects > len(HEADING_POOL):
        raise ValueError(f"at most {len(HEADING_POOL)} aspects supported")
    rng = np.random.default_rng(spec.seed)
    headings = HEADING_POOL[: spec.n_aspects]

    taken: set[str] = set(HEADING_POOL)
    entity_vocab = [_word_pool(rng, spec.entity_tokens, taken) for _ in range(spec.n_entities)]
    aspect_vocab = [_word_pool(rng, spec.aspect_tokens, taken) for _ in range(spec.n_aspects)]
    filler = _word_pool(rng, spec.filler_tokens, taken)
    mentions = _word_pool(rng, spec.n_entities, taken)

    neutral_tokens = [filler[i % len(filler)] for i in range(5)]
    neutral_text = " ".join(neutral_tokens) + "."

    def sentence(entity_idx: int, aspect_idx: int) -> str:
        toks = list(rng.choice(entity_vocab[entity_idx], size=2, replace=False))
        toks += list(rng.choice(aspect_vocab[aspect_idx], size=3, replace=False))
        toks += list(rng.choice(filler, size=2, replace=False))
        rng.shuffle(toks)
        return " ".join(toks) + "."

    corpus_records = []
    relevant: dict[tuple[int, int], list[str]] = {}
    for d in range(spec.n_docs):
        entity_idx = d % spec.n_entities
        aspect_ids = rng.permutation(spec.n_aspects)[: spec.sections_per_doc]
        sections = []
        for s_idx, aspect_idx in enumerate(aspect_ids):
            lo, hi = spec.sentences_per_section
            n_sents = int(rng.integers(lo, hi + 1))
            sents = [sentence(entity_idx, int(aspect_idx)) for _ in range(n_sents)]
            insert_at = n_sents // 2
            sents.insert(insert_at, neutral_text)
            sections.append({"heading": headings[int(aspect_idx)], "paragraphs": [sents]})
            relevant.setdefault((entity_idx, int(aspect_idx)), []).append(f"doc{d}:{s_idx}")
        corpus_records.append(
            {
                "id": f"doc{d}",
                "title": f"document {d}",
                "entity_id": f"E{entity_idx}",
                "source": "synthetic",
                "sections": sections,
            }
        )

    kb_records = []
    for i in range(spec.n_entities):
        descs = []
        for k in range(spec.kb_sentences):
            toks = list(rng.choice(entity_vocab[i], size=int(rng.integers(5, 8)), replace=True))
            toks += list(rng.choice(filler, size=2, replace=False))
            rng.shuffle(toks)
            if k < 2:
                toks.insert(0, mentions[i])
            descs.append(" ".join(toks) + ".")
        kb_records.append({"entity_id": f"E{i}", "name": mentions[i], "descriptions": descs})

    queries = []
    qid = 0
    for (entity_idx, aspect_idx), passages in sorted(relevant.items()):
        queries.append(
            {
                "query_id": f"q{qid}",
                "entity_id": f"E{entity_idx}",
                "mention": mentions[entity_idx],
                "aspect": headings[aspect_idx],
                "relevant": sorted(passages),
            }
        )
        qid += 1

    return SyntheticData(
        corpus_records=corpus_records,
        kb_records=kb_records,
        queries=queries,
        neutral_text=neutral_text,
        spec=spec,
    )
