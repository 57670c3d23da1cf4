"""Shared fixtures: a small trained pipeline over a synthetic corpus.

Training happens once per session; several test modules reuse the
artifacts (model tests, index tests, service tests, acceptance).
"""

from dataclasses import dataclass

import pytest

from cdv.corpus import parse_document
from cdv.embeddings import train_skipgram
from cdv.model import CdvHyper, train_cdv
from cdv.spaces import (
    BloomEncoder,
    EncoderHyper,
    KbEntry,
    build_entity_space,
    train_aspect_space,
    train_entity_encoder,
)
from cdv.corpus import tokenize, heading_normalize, ABSTRACT_ASPECT
from cdv.synthetic import SyntheticSpec, generate


@dataclass
class SmallPipeline:
    data: object
    docs: list
    kb: dict
    table: object
    espace: object
    aspace: object
    model: object
    train_log: list


def build_pipeline(spec: SyntheticSpec, cdv_hyper: CdvHyper, seed: int = 0) -> SmallPipeline:
    data = generate(spec)
    docs = [parse_document(rec) for rec in data.corpus_records]
    kb = {
        rec["entity_id"]: KbEntry(rec["entity_id"], rec["name"], rec["descriptions"])
        for rec in data.kb_records
    }
    sentences = [s.tokens for d in docs for s in d.sentences]
    sentences += [tokenize(t) for e in kb.values() for t in [e.name, *e.descriptions]]
    table = train_skipgram(
        sentences, dim=24, window=3, negatives=4, epochs=3, seed=seed, buckets=4096
    )
    bloom = BloomEncoder(1024, 5, seed=seed)
    enc_hyper = EncoderHyper(hidden=48, embed_dim=48, epochs=5, batch_size=64, dropout=0.0)
    encoder, _, _ = train_entity_encoder(kb, table, bloom, enc_hyper, seed=seed)
    espace = build_entity_space(encoder, kb, table, bloom)
    pairs = []
    for d in docs:
        for sec in d.sections:
            frags = heading_normalize(sec.heading) or [ABSTRACT_ASPECT]
            for s in sec.sentences:
                pairs.append((frags, s.tokens))
    aspace = train_aspect_space(pairs, table, bloom, enc_hyper, seed=seed + 1)
    model, log = train_cdv(docs, table, espace, aspace, cdv_hyper, seed=seed + 2)
    return SmallPipeline(data, docs, kb, table, espace, aspace, model, log)


@pytest.fixture(scope="session")
def small_pipeline():
    spec = SyntheticSpec(n_docs=12, sections_per_doc=4, n_entities=4, n_aspects=5, seed=3)
    hyper = CdvHyper(hidden=64, discourse_dim=32, epochs=80, batch_docs=8)
    return build_pipeline(spec, hyper, seed=0)


@dataclass
class AcceptanceRun:
    cfg: object
    data: object
    paths: dict


def acceptance_config(root, data):
    """The desk-scale configuration the acceptance criteria run at."""
    from cdv.config import Config

    paths = data.write(root / "data")
    cfg = Config()
    cfg.seed = 0
    cfg.paths.corpus = paths["corpus"]
    cfg.paths.kb = paths["kb"]
    cfg.paths.queries = paths["queries"]
    cfg.paths.out = str(root / "run")
    cfg.embeddings.dim = 32
    cfg.embeddings.epochs = 3
    cfg.embeddings.buckets = 20_000
    for enc in (cfg.entity_encoder, cfg.aspect_encoder):
        enc.hidden = 64
        enc.embed_dim = 64
        enc.epochs = 5
        enc.batch_size = 64
        enc.lr = 1e-4
        enc.dropout = 0.0
    cfg.cdv = CdvHyper(
        hidden=64,
        discourse_dim=128,
        epochs=50,
        batch_docs=1,
        lr=2e-2,
        decoder_only_epochs=50,
    )
    cfg.eval.candidates = 16
    cfg.eval.dataset = "synthetic"
    return cfg, paths


@pytest.fixture(scope="session")
def acceptance_run(tmp_path_factory):
    """Full pipeline over the 40-doc synthetic corpus, trained once."""
    from cdv import pipeline

    root = tmp_path_factory.mktemp("acceptance")
    data = generate(SyntheticSpec(seed=0))
    cfg, paths = acceptance_config(root, data)
    pipeline.cmd_train_embeddings(cfg)
    pipeline.cmd_train_entity(cfg)
    pipeline.cmd_train_aspect(cfg)
    pipeline.cmd_train_cdv(cfg)
    pipeline.cmd_index(cfg)
    return AcceptanceRun(cfg=cfg, data=data, paths=paths)
