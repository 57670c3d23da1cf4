"""End-to-end orchestration shared by the CLI and tests: each stage reads
its input artifacts from the run directory and writes its own."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .baselines import InvertedIndex
from .config import Config
from .corpus import build_passages, load_corpus, tokenize
from .embeddings import WordEmbeddingTable, train_skipgram
from .errors import ConfigError
from .evaluation import load_queries, make_ranker, passages_token_map, run_experiment
from .index import VectorIndex, build_index
from .model import CdvModel, document_sigmas, encode_document, train_cdv
from .spaces import (
    AspectSpace,
    BloomEncoder,
    EntitySpace,
    build_entity_space,
    build_query,
    heading_context_pairs,
    load_kb,
    train_entity_encoder,
    train_aspect_space,
)

logger = logging.getLogger(__name__)

ARTIFACTS = {
    "word_table": "word_vectors.ckpt",
    "entity_space": "entity_space.ckpt",
    "aspect_space": "aspect_space.ckpt",
    "cdv_model": "cdv_model.ckpt",
    "cdv_log": "cdv_train_log.jsonl",
    "index": "index.bin",
}


def artifact_path(cfg: Config, name: str) -> Path:
    out = Path(cfg.paths.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / ARTIFACTS[name]


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise ConfigError(f"missing artifact {path} (run `{hint}` first)")
    return path


def _corpus(cfg: Config):
    if not cfg.paths.corpus:
        raise ConfigError("paths.corpus is not set")
    return load_corpus(cfg.paths.corpus)


def _kb(cfg: Config):
    if not cfg.paths.kb:
        raise ConfigError("paths.kb is not set")
    return load_kb(cfg.paths.kb)


def load_word_table(cfg: Config) -> WordEmbeddingTable:
    return WordEmbeddingTable.load(_require(artifact_path(cfg, "word_table"), "cdv train-embeddings"))


def load_spaces(cfg: Config, table: WordEmbeddingTable):
    espace = EntitySpace.load(_require(artifact_path(cfg, "entity_space"), "cdv train-entity"), table)
    aspace = AspectSpace.load(_require(artifact_path(cfg, "aspect_space"), "cdv train-aspect"), table)
    return espace, aspace


def cmd_train_embeddings(cfg: Config) -> Path:
    docs = _corpus(cfg)
    sentences = [s.tokens for d in docs for s in d.sentences]
    if cfg.embeddings.include_kb_text and cfg.paths.kb:
        for entry in _kb(cfg).values():
            sentences.append(tokenize(entry.name))
            sentences.extend(tokenize(d) for d in entry.descriptions)
    e = cfg.embeddings
    table = train_skipgram(
        sentences,
        dim=e.dim,
        window=e.window,
        negatives=e.negatives,
        epochs=e.epochs,
        seed=cfg.seed,
        min_count=e.min_count,
        min_n=e.min_n,
        max_n=e.max_n,
        buckets=e.buckets,
        lr=e.lr,
    )
    path = artifact_path(cfg, "word_table")
    table.save(path)
    logger.info("word table: %d tokens, dim %d -> %s", len(table.tokens), table.dimension, path)
    return path


def cmd_train_entity(cfg: Config) -> Path:
    table = load_word_table(cfg)
    kb = _kb(cfg)
    bloom = BloomEncoder(cfg.bloom.bits, cfg.bloom.hashes, seed=cfg.seed)
    encoder, curve, skipped = train_entity_encoder(kb, table, bloom, cfg.entity_encoder, seed=cfg.seed)
    space = build_entity_space(encoder, kb, table, bloom)
    space.meta["train_loss"] = curve
    space.meta["skipped_entities"] = skipped
    path = artifact_path(cfg, "entity_space")
    space.save(path)
    logger.info("entity space: %d entities -> %s", len(space.ids), path)
    return path


def cmd_train_aspect(cfg: Config) -> Path:
    table = load_word_table(cfg)
    docs = _corpus(cfg)
    bloom = BloomEncoder(cfg.bloom.bits, cfg.bloom.hashes, seed=cfg.seed + 1)
    space = train_aspect_space(
        heading_context_pairs(docs), table, bloom, cfg.aspect_encoder, seed=cfg.seed
    )
    path = artifact_path(cfg, "aspect_space")
    space.save(path)
    logger.info("aspect space: %d aspects -> %s", len(space.ids), path)
    return path


def cmd_train_cdv(cfg: Config) -> Path:
    table = load_word_table(cfg)
    espace, aspace = load_spaces(cfg, table)
    docs = _corpus(cfg)
    log_path = artifact_path(cfg, "cdv_log")
    model, records = train_cdv(
        docs, table, espace, aspace, cfg.cdv, seed=cfg.seed, log_path=log_path
    )
    path = artifact_path(cfg, "cdv_model")
    model.save(path)
    logger.info(
        "cdv model: loss %.4f -> %.4f over %d epochs -> %s",
        records[0]["mean_loss"], records[-1]["mean_loss"], len(records), path,
    )
    return path


def cmd_index(cfg: Config) -> Path:
    table = load_word_table(cfg)
    espace, aspace = load_spaces(cfg, table)
    model = CdvModel.load(_require(artifact_path(cfg, "cdv_model"), "cdv train-cdv"))
    docs = _corpus(cfg)
    matrices = [encode_document(model, document_sigmas(d, table), d.doc_id) for d in docs]
    passages = [p for d in docs for p in build_passages(d)]
    meta = {
        "model_fingerprint": model.fingerprint(),
        "espace_fingerprint": espace.fingerprint(),
        "aspace_fingerprint": aspace.fingerprint(),
        "corpus": str(cfg.paths.corpus),
    }
    index = build_index(matrices, passages, meta=meta)
    path = artifact_path(cfg, "index")
    index.save(path)
    logger.info("index: %d entries, %d passages -> %s", index.entry_count, index.passage_count, path)
    return path


def load_retrieval_artifacts(cfg: Config):
    table = load_word_table(cfg)
    espace, aspace = load_spaces(cfg, table)
    index = VectorIndex.load(_require(artifact_path(cfg, "index"), "cdv index"))
    expected = {
        "espace_fingerprint": espace.fingerprint(),
        "aspace_fingerprint": aspace.fingerprint(),
    }
    for key, value in expected.items():
        if index.meta.get(key) != value:
            raise ConfigError(
                f"index {key} does not match the loaded artifact; rebuild the index"
            )
    return table, espace, aspace, index


def build_inverted_index(docs) -> InvertedIndex:
    passages_by_doc = {d.doc_id: build_passages(d) for d in docs}
    return InvertedIndex(passages_token_map(docs, passages_by_doc))


def cmd_evaluate(cfg: Config, models=None) -> list:
    docs = _corpus(cfg)
    if not cfg.paths.queries:
        raise ConfigError("paths.queries is not set")
    queries = load_queries(cfg.paths.queries)
    inv = build_inverted_index(docs)
    models = models or cfg.eval.models
    reports = []
    cdv_artifacts = None
    for model_name in models:
        if model_name == "cdv":
            table, espace, aspace, index = load_retrieval_artifacts(cfg)
            cdv_artifacts = (index, espace, aspace)
        ranker = make_ranker(model_name, inv, cdv_artifacts)
        report = run_experiment(
            ranker,
            inv,
            queries,
            seed=cfg.seed,
            n_candidates=cfg.eval.candidates,
            model_name=model_name,
            dataset=cfg.eval.dataset,
        )
        report.write(cfg.paths.out)
        reports.append(report)
    return reports


def cmd_query(cfg: Config, entity_id: str, mention: str, aspect: str, top_k: int = 10):
    table, espace, aspace, index = load_retrieval_artifacts(cfg)
    qv = build_query(espace, aspace, {"id": entity_id, "mention": mention}, aspect)
    return index.search_all(qv, top_k=top_k)
