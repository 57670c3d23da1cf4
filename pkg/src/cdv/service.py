"""HTTP query service over trained artifacts.

Endpoints (JSON bodies; errors carry {code, message}):

    GET  /health
    GET  /entities?q=&limit=
    GET  /aspects?q=&limit=
    POST /query                 {"entity": {"id", "mention"}, "aspect", "top_k"}
    GET  /documents/{doc_id}/histogram?entity=&aspect=

State is read-only after startup; every response is a deterministic
function of (artifacts, request) except the latency field.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .config import Config
from .corpus import load_corpus
from .errors import CdvError, NotFoundError, UnresolvableEntityError
from .nn import backend_name
from .pipeline import load_retrieval_artifacts
from .spaces import build_query


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _match_rank(name: str, needle: str):
    pos = name.lower().find(needle)
    return None if pos < 0 else (pos, name.lower())


@dataclass
class ServiceState:
    table: object
    espace: object
    aspace: object
    index: object
    doc_sentences: dict  # doc_id -> list of sentence texts

    @classmethod
    def load(cls, cfg: Config) -> "ServiceState":
        table, espace, aspace, index = load_retrieval_artifacts(cfg)
        docs = load_corpus(cfg.paths.corpus)
        doc_sentences = {d.doc_id: [s.text for s in d.sentences] for d in docs}
        return cls(table, espace, aspace, index, doc_sentences)

    # --- operations ---

    def autocomplete_entities(self, prefix: str, limit: int) -> list[dict]:
        needle = prefix.strip().lower()
        rows = [(eid, self.espace.kb[eid].name) for eid in self.espace.ids if eid in self.espace.kb]
        if not needle:
            ranked = sorted(rows, key=lambda r: (-self.espace.counts.get(r[0], 0), r[1].lower()))
        else:
            hits = []
            for eid, name in rows:
                rank = _match_rank(name, needle)
                if rank is not None:
                    hits.append((rank, eid, name))
            hits.sort(key=lambda h: h[0])
            ranked = [(eid, name) for _, eid, name in hits]
        return [{"id": eid, "name": name} for eid, name in ranked[:limit]]

    def autocomplete_aspects(self, prefix: str, limit: int) -> list[str]:
        needle = prefix.strip().lower()
        if not needle:
            ranked = sorted(self.aspace.ids, key=lambda a: (-self.aspace.counts.get(a, 0), a))
        else:
            hits = []
            for aspect in self.aspace.ids:
                rank = _match_rank(aspect, needle)
                if rank is not None:
                    hits.append((rank, aspect))
            hits.sort(key=lambda h: h[0])
            ranked = [a for _, a in hits]
        return ranked[:limit]

    def passage_payload(self, scored) -> dict:
        entry = self.index.registry[scored.passage_id]
        texts = self.doc_sentences.get(scored.doc_id, [])
        sentences = texts[entry["start"] : entry["end"]]
        return {
            "passage_id": scored.passage_id,
            "doc_id": scored.doc_id,
            "score": scored.score,
            "heading": scored.heading,
            "text": " ".join(sentences),
            "sentences": sentences,
            "sentence_scores": [float(s) for s in scored.sentence_scores],
        }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="cdv query service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "backend": backend_name(),
            "entries": state.index.entry_count,
            "passages": state.index.passage_count,
            "index_fingerprint": state.index.meta.get("model_fingerprint", ""),
        }

    @app.get("/entities")
    def entities(q: str = "", limit: int = 10):
        return {"results": state.autocomplete_entities(q, max(limit, 0))}

    @app.get("/aspects")
    def aspects(q: str = "", limit: int = 10):
        return {"results": state.autocomplete_aspects(q, max(limit, 0))}

    @app.post("/query")
    async def query(request: Request):
        body = await request.json()
        entity = body.get("entity") or {}
        aspect = body.get("aspect") or ""
        top_k = int(body.get("top_k", 10))
        started = time.perf_counter()
        try:
            qv = build_query(state.espace, state.aspace, entity, aspect)
        except (UnresolvableEntityError, CdvError) as exc:
            return _error(400, "unresolvable_query", str(exc))
        results = state.index.search_all(qv, top_k=max(top_k, 1))
        payload = {
            "results": [state.passage_payload(sp) for sp in results],
            "latency_ms": (time.perf_counter() - started) * 1000.0,
        }
        if state.index.entry_count == 0:
            payload["warning"] = "index is empty"
        return payload

    @app.get("/documents/{doc_id}/histogram")
    def histogram(doc_id: str, entity: str = "", aspect: str = ""):
        ent = {"id": entity, "mention": entity}
        try:
            qv = build_query(state.espace, state.aspace, ent, aspect)
        except (UnresolvableEntityError, CdvError) as exc:
            return _error(400, "unresolvable_query", str(exc))
        try:
            combined, entity_curve, aspect_curve = state.index.sentence_histogram(qv, doc_id)
        except NotFoundError as exc:
            return _error(404, "unknown_document", str(exc))
        return {
            "doc_id": doc_id,
            "sentences": state.doc_sentences.get(doc_id, []),
            "combined": [float(x) for x in combined],
            "entity": [float(x) for x in entity_curve],
            "aspect": [float(x) for x in aspect_curve],
        }

    return app


def run_service(cfg: Config):  # pragma: no cover - exercised manually
    import uvicorn

    app = create_app(ServiceState.load(cfg))
    uvicorn.run(app, host=cfg.service.host, port=cfg.service.port)
