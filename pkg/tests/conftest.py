from __future__ import annotations

from importlib import resources

import pytest

from lexguide.corpus import fragment_document, ingest_documents
from lexguide.engine import Engine, LogicalClock
from lexguide.providers import StubChat, StubEmbedding
from lexguide.retrieval import build_index

MINI_CORPUS = str(resources.files("lexguide").joinpath("resources/fixtures/corpus_mini.json"))


class RecordingChat:
    """Wraps a chat provider and keeps every request for inspection."""

    def __init__(self, inner):
        self.inner = inner
        self.requests = []

    def complete(self, req):
        self.requests.append(req)
        return self.inner.complete(req)


@pytest.fixture(scope="session")
def mini_docs():
    return ingest_documents(MINI_CORPUS)


@pytest.fixture(scope="session")
def mini_fragments(mini_docs):
    return [f for doc in mini_docs for f in fragment_document(doc)]


@pytest.fixture(scope="session")
def stub_embedder():
    return StubEmbedding(seed=7)


@pytest.fixture(scope="session")
def mini_index(mini_fragments, stub_embedder):
    vectors = stub_embedder.embed_texts([f.text for f in mini_fragments])
    return build_index(mini_fragments, vectors)


@pytest.fixture
def stub_chatter():
    return StubChat(seed=7)


@pytest.fixture
def engine(mini_index, mini_fragments, stub_embedder, stub_chatter):
    return Engine(mini_index, mini_fragments, stub_embedder, stub_chatter, clock=LogicalClock())


@pytest.fixture
def recording_engine(mini_index, mini_fragments, stub_embedder, stub_chatter):
    recorder = RecordingChat(stub_chatter)
    eng = Engine(mini_index, mini_fragments, stub_embedder, recorder, clock=LogicalClock())
    return eng, recorder
