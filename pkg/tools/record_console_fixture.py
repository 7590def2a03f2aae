"""Record a real API session for the web console's contract tests.

Runs the HTTP service in-process against the bundled demo corpus with stub
providers (seed 1 yields a four-node walk: three follow-up acceptances end
in complete coverage), captures every request/response pair the console
will replay, and writes them to frontend/fixtures/walkthrough.json.

Usage: python tools/record_console_fixture.py
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from fastapi.testclient import TestClient

from lexguide.corpus import fragment_document, ingest_documents
from lexguide.engine import Engine, LogicalClock, SessionConfig
from lexguide.providers import StubChat, StubEmbedding
from lexguide.retrieval import build_index
from lexguide.service import create_app

QUERY = "How does the EU support patients seeking healthcare abroad?"
SEED = 1


class Recorder:
    def __init__(self, client: TestClient):
        self.client = client
        self.exchanges: list[dict] = []

    def call(self, method: str, path: str, body: dict | None = None):
        response = self.client.request(method, path, json=body)
        self.exchanges.append(
            {
                "method": method,
                "path": path,
                "body": body,
                "status": response.status_code,
                "response": response.json(),
            }
        )
        return response.json(), response.status_code


def make_client() -> TestClient:
    corpus = resources.files("lexguide").joinpath("resources/fixtures/corpus_mini.json")
    docs = ingest_documents(str(corpus))
    fragments = [f for doc in docs for f in fragment_document(doc)]
    embedder = StubEmbedding(seed=SEED)
    index = build_index(fragments, embedder.embed_texts([f.text for f in fragments]))
    engine = Engine(index, fragments, embedder, StubChat(seed=SEED), clock=LogicalClock())
    config = SessionConfig(min_cluster_size=2, levels=1)
    return TestClient(create_app(engine, default_config=config))


def record_walkthrough(client: TestClient) -> dict:
    rec = Recorder(client)
    created, status = rec.call("POST", "/sessions", {"query": QUERY})
    assert status == 201
    sid = created["session_id"]
    rec.call("GET", f"/sessions/{sid}/tree")
    rec.call("GET", f"/sessions/{sid}/state")

    followup = created["first_turn"]["followup"]
    for step in range(3):
        assert followup, f"walkthrough needs a follow-up at step {step}"
        envelope, status = rec.call("POST", f"/sessions/{sid}/turns", {"utterance": followup})
        assert status == 200
        rec.call("GET", f"/sessions/{sid}/tree")
        rec.call("GET", f"/sessions/{sid}/state")
        followup = envelope["turn"]["followup"]
    assert envelope["status"] == "terminated", "third acceptance must complete coverage"
    assert envelope["termination_reason"] == "complete-coverage"
    return {"query": QUERY, "exchanges": rec.exchanges}


def record_ascend_at_root(client: TestClient) -> dict:
    rec = Recorder(client)
    created, status = rec.call("POST", "/sessions", {"query": QUERY})
    assert status == 201
    sid = created["session_id"]
    rec.call("GET", f"/sessions/{sid}/tree")
    rec.call("GET", f"/sessions/{sid}/state")
    _, status = rec.call("POST", f"/sessions/{sid}/navigate", {"operation": "ascend"})
    assert status == 400
    return {"query": QUERY, "exchanges": rec.exchanges}


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "frontend" / "fixtures" / "walkthrough.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    client = make_client()
    payload = {
        "walkthrough": record_walkthrough(client),
        "ascend_at_root": record_ascend_at_root(make_client()),
    }
    out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    turns = sum(1 for e in payload["walkthrough"]["exchanges"] if e["path"].endswith("/turns")) + 1
    print(f"wrote {out} ({turns} turns recorded)")


if __name__ == "__main__":
    main()
