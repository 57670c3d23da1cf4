"""Query service endpoints against the trained synthetic artifacts."""

import pytest
from fastapi.testclient import TestClient

from cdv.service import ServiceState, create_app


@pytest.fixture(scope="module")
def client(acceptance_run):
    state = ServiceState.load(acceptance_run.cfg)
    return TestClient(create_app(state)), state, acceptance_run


def test_health(client):
    c, state, _ = client
    body = c.get("/health").json()
    assert body["status"] == "ok"
    assert body["passages"] == state.index.passage_count


class TestAutocomplete:
    def test_entity_prefix(self, client):
        c, state, run = client
        name = run.data.kb_records[0]["name"]
        body = c.get("/entities", params={"q": name[:4], "limit": 5}).json()
        assert any(r["name"] == name for r in body["results"])

    def test_aspect_prefix(self, client):
        c, *_ = client
        body = c.get("/aspects", params={"q": "trea", "limit": 5}).json()
        assert "treatment" in body["results"]

    def test_no_match(self, client):
        c, *_ = client
        assert c.get("/entities", params={"q": "zzzzzzz"}).json()["results"] == []

    def test_limit_one(self, client):
        c, *_ = client
        assert len(c.get("/aspects", params={"q": "t", "limit": 1}).json()["results"]) == 1

    def test_empty_prefix_top_frequency(self, client):
        c, state, _ = client
        results = c.get("/aspects", params={"q": "", "limit": 3}).json()["results"]
        counts = [state.aspace.counts[a] for a in results]
        assert counts == sorted(counts, reverse=True)


class TestQueryEndpoint:
    def test_planted_passage_first(self, client):
        c, _, run = client
        q = run.data.queries[0]
        body = c.post(
            "/query",
            json={"entity": {"id": q["entity_id"]}, "aspect": q["aspect"], "top_k": 5},
        ).json()
        assert body["results"][0]["passage_id"] in set(q["relevant"])
        assert "latency_ms" in body

    def test_top_k_bound(self, client):
        c, _, run = client
        q = run.data.queries[1]
        body = c.post(
            "/query",
            json={"entity": {"id": q["entity_id"]}, "aspect": q["aspect"], "top_k": 10},
        ).json()
        assert len(body["results"]) <= 10

    def test_response_fields(self, client):
        c, _, run = client
        q = run.data.queries[2]
        body = c.post(
            "/query",
            json={"entity": {"id": q["entity_id"]}, "aspect": q["aspect"], "top_k": 3},
        ).json()
        top = body["results"][0]
        assert {"passage_id", "doc_id", "score", "heading", "text", "sentence_scores"} <= set(top)
        assert len(top["sentence_scores"]) == len(top["sentences"])

    def test_deterministic_modulo_latency(self, client):
        c, _, run = client
        q = run.data.queries[3]
        payload = {"entity": {"id": q["entity_id"]}, "aspect": q["aspect"], "top_k": 5}
        a = c.post("/query", json=payload).json()
        b = c.post("/query", json=payload).json()
        a.pop("latency_ms")
        b.pop("latency_ms")
        assert a == b

    def test_unresolvable_entity_400(self, client):
        c, *_ = client
        resp = c.post("/query", json={"entity": {"id": "NOPE"}, "aspect": "treatment"})
        assert resp.status_code == 400
        body = resp.json()
        assert set(body) == {"code", "message"}


class TestHistogramEndpoint:
    def test_lengths_match_sentence_count(self, client):
        c, state, run = client
        q = run.data.queries[0]
        doc_id = q["relevant"][0].split(":")[0]
        body = c.get(
            f"/documents/{doc_id}/histogram",
            params={"entity": q["entity_id"], "aspect": q["aspect"]},
        ).json()
        n = len(state.doc_sentences[doc_id])
        assert len(body["combined"]) == len(body["entity"]) == len(body["aspect"]) == n
        assert len(body["sentences"]) == n

    def test_matches_index_histogram(self, client):
        c, state, run = client
        q = run.data.queries[0]
        doc_id = q["relevant"][0].split(":")[0]
        body = c.get(
            f"/documents/{doc_id}/histogram",
            params={"entity": q["entity_id"], "aspect": q["aspect"]},
        ).json()
        from cdv.spaces import build_query

        qv = build_query(state.espace, state.aspace, {"id": q["entity_id"]}, q["aspect"])
        combined, _, _ = state.index.sentence_histogram(qv, doc_id)
        assert body["combined"] == [float(x) for x in combined]

    def test_unknown_document_404(self, client):
        c, *_ = client
        resp = c.get("/documents/nope/histogram", params={"entity": "E0", "aspect": "treatment"})
        assert resp.status_code == 404


def test_state_immutable_under_request_storm(client):
    c, state, run = client
    before = state.index.content_fingerprint()
    for q in run.data.queries[:10]:
        c.post("/query", json={"entity": {"id": q["entity_id"]}, "aspect": q["aspect"]})
        c.get("/entities", params={"q": "a"})
    assert state.index.content_fingerprint() == before
