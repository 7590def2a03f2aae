from __future__ import annotations

import numpy as np
import httpx
import pytest

from lexguide import prompts
from lexguide.errors import DimensionMismatch, EmptyCompletion, ProviderUnavailable
from lexguide.providers import (
    ChatRequest,
    HttpChat,
    HttpEmbedding,
    ProviderConfig,
    StubChat,
    StubEmbedding,
)
from lexguide.retrieval import cosine_similarity


def cos(u, v):
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


# -- stub embedding -----------------------------------------------------------

def test_stub_same_text_identical_vectors():
    emb = StubEmbedding(seed=3)
    a, b = emb.embed_texts(["tax law", "tax law"])
    assert np.array_equal(a, b)


def test_stub_shared_tokens_raise_similarity():
    emb = StubEmbedding(seed=3)
    law, code, marine = emb.embed_texts(["tax law", "tax code", "marine biology"])
    assert cos(law, code) > cos(law, marine)


def test_stub_unit_norm_and_finite():
    emb = StubEmbedding(seed=1)
    vecs = emb.embed_texts(["one", "two words here", "2025"])
    for vec in vecs:
        assert np.isfinite(vec).all()
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-12)


def test_stub_permutation_invariant_over_tokens():
    emb = StubEmbedding(seed=3)
    a, b = emb.embed_texts(["alpha beta gamma", "gamma alpha beta"])
    assert np.allclose(a, b)


def test_stub_deterministic_across_instances():
    a = StubEmbedding(seed=9).embed_texts(["cross-border healthcare"])[0]
    b = StubEmbedding(seed=9).embed_texts(["cross-border healthcare"])[0]
    assert np.array_equal(a, b)
    c = StubEmbedding(seed=10).embed_texts(["cross-border healthcare"])[0]
    assert not np.array_equal(a, c)


def test_embed_rejects_empty_inputs():
    emb = StubEmbedding()
    with pytest.raises(ValueError):
        emb.embed_texts([])
    with pytest.raises(ValueError):
        emb.embed_texts(["ok", ""])


# -- stub chat ------------------------------------------------------------------

def test_stub_chat_answer_template_leads_with_top_fragment():
    system, user = prompts.build_answer_prompt(
        [("f1", "Lead sentence of the winner. Second sentence follows."),
         ("f2", "Other passage text.")],
        "What is this?",
    )
    out = StubChat().complete(ChatRequest(system_prompt=system, user_prompt=user))
    assert out.startswith("Lead sentence of the winner.")


def test_stub_chat_followup_template():
    system, user = prompts.build_followup_prompt(["fisheries", "quota"], [])
    out = StubChat().complete(ChatRequest(system_prompt=system, user_prompt=user))
    assert out == "Would you like to learn more about fisheries and quota?"


def test_stub_chat_byte_identical():
    system, user = prompts.build_followup_prompt(["alpha"], [("u", "r")])
    req = ChatRequest(system_prompt=system, user_prompt=user)
    assert StubChat(seed=4).complete(req) == StubChat(seed=4).complete(req)


def test_stub_chat_unknown_template_echoes():
    req = ChatRequest(system_prompt="No sentinel here", user_prompt="just these words")
    assert StubChat().complete(req) == "just these words"


def test_chat_request_validation():
    with pytest.raises(ValueError):
        ChatRequest(system_prompt="", user_prompt="x")
    with pytest.raises(ValueError):
        ChatRequest(system_prompt="x", user_prompt="y", temperature=3.0)


# -- provider config ---------------------------------------------------------------

def test_http_config_requires_url_and_model():
    with pytest.raises(ValueError):
        ProviderConfig(kind="http")
    ProviderConfig(kind="http", base_url="http://svc", model_name="m")


# -- http clients -------------------------------------------------------------------

def make_transport(handler):
    return httpx.MockTransport(handler)


def test_http_embedding_happy_path():
    def handler(request):
        assert request.url.path == "/embed"
        return httpx.Response(200, json={"vectors": [[1.0, 0.0], [0.0, 1.0]]})

    cfg = ProviderConfig(kind="http", base_url="http://svc", model_name="m")
    client = HttpEmbedding(cfg, transport=make_transport(handler))
    vectors = client.embed_texts(["a", "b"])
    assert len(vectors) == 2
    assert client.dim == 2


def test_http_embedding_dim_mismatch():
    def handler(request):
        return httpx.Response(200, json={"vectors": [[1.0, 0.0], [0.0, 1.0, 2.0]]})

    cfg = ProviderConfig(kind="http", base_url="http://svc", model_name="m")
    client = HttpEmbedding(cfg, transport=make_transport(handler))
    with pytest.raises(DimensionMismatch):
        client.embed_texts(["a", "b"])


def test_http_retry_contract_three_failures():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500, json={"error": "boom"})

    cfg = ProviderConfig(kind="http", base_url="http://svc", model_name="m", max_retries=2)
    client = HttpEmbedding(cfg, transport=make_transport(handler), sleep=lambda s: None)
    with pytest.raises(ProviderUnavailable):
        client.embed_texts(["a"])
    assert len(calls) == 3  # max_retries + 1 attempts


def test_http_retry_recovers_after_transient_error():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(503, json={"error": "later"})
        return httpx.Response(200, json={"text": "fine"})

    cfg = ProviderConfig(kind="http", base_url="http://svc", model_name="m", max_retries=2)
    client = HttpChat(cfg, transport=make_transport(handler), sleep=lambda s: None)
    req = ChatRequest(system_prompt="s", user_prompt="u")
    assert client.complete(req) == "fine"
    assert len(calls) == 3


def test_http_deadline_caps_total_blocking():
    # budget = timeout * (max_retries + 1); backoff consumes it, so once the
    # clock runs past the deadline no further attempts are made
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500)

    now = [0.0]

    def fake_sleep(seconds):
        now[0] += 100.0  # each backoff burns far more than the whole budget

    cfg = ProviderConfig(kind="http", base_url="http://svc", model_name="m",
                         timeout=1.0, max_retries=5)
    client = HttpEmbedding(
        cfg, transport=make_transport(handler), sleep=fake_sleep, monotonic=lambda: now[0]
    )
    with pytest.raises(ProviderUnavailable):
        client.embed_texts(["a"])
    assert len(calls) == 1  # remaining attempts were skipped, not slept through


def test_http_chat_empty_completion():
    def handler(request):
        return httpx.Response(200, json={"text": "   "})

    cfg = ProviderConfig(kind="http", base_url="http://svc", model_name="m", max_retries=0)
    client = HttpChat(cfg, transport=make_transport(handler))
    with pytest.raises(EmptyCompletion):
        client.complete(ChatRequest(system_prompt="s", user_prompt="u"))


def test_http_sends_api_key_from_env(monkeypatch):
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("Authorization")
        return httpx.Response(200, json={"text": "ok"})

    monkeypatch.setenv("LEXGUIDE_CHAT_API_KEY", "sekret")
    cfg = ProviderConfig(
        kind="http", base_url="http://svc", model_name="m", api_key_env="LEXGUIDE_CHAT_API_KEY"
    )
    client = HttpChat(cfg, transport=make_transport(handler))
    client.complete(ChatRequest(system_prompt="s", user_prompt="u"))
    assert seen["auth"] == "Bearer sekret"


def test_stub_relevance_of_token_disjoint_texts_is_small():
    # random unit-vector sums at dim 64 stay well under the 0.2 band
    emb = StubEmbedding(seed=0)
    values = []
    for s in range(100):
        e = StubEmbedding(seed=s)
        a, b = e.embed_texts(["alpha beta gamma delta", "omega psi chi phi"])
        values.append(abs(cosine_similarity(a, b)))
    assert max(values) < 0.75
    assert sum(values) / len(values) < 0.2
