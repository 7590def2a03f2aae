"""Embedding and chat providers: an HTTP client and deterministic offline stubs.

Both provider kinds share the same call surface, so the whole engine runs
against either. Stub outputs are pure functions of (seed, inputs), which
makes full engine runs reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass

import httpx
import numpy as np

from . import prompts
from .corpus import split_sentences, tokenize
from .errors import DimensionMismatch, EmptyCompletion, ProviderUnavailable

STUB_DIM = 64
DEFAULT_TEMPERATURE = 0.3
_BACKOFF_INITIAL = 0.25

_INTERROGATIVE_STARTERS = {
    "what", "how", "why", "when", "where", "who", "which", "whose",
    "can", "could", "does", "do", "is", "are", "should", "will", "would",
}


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_prompt: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = 256

    def __post_init__(self):
        if not self.system_prompt or not self.user_prompt:
            raise ValueError("prompts must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "stub"  # "http" | "stub"
    base_url: str | None = None
    model_name: str | None = None
    api_key_env: str = ""
    timeout: float = 30.0
    max_retries: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("http", "stub"):
            raise ValueError(f"unknown provider kind: {self.kind}")
        if self.kind == "http" and (not self.base_url or not self.model_name):
            raise ValueError("http provider requires base_url and model_name")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def _check_texts(texts: list[str]) -> None:
    if not texts:
        raise ValueError("texts must be non-empty")
    if any(not t for t in texts):
        raise ValueError("every text must be non-empty")


class StubEmbedding:
    """Deterministic embedding: normalized sum of per-token unit vectors.

    Each token's vector comes from a PRNG keyed by (seed, token), so the
    embedding is permutation-invariant over tokens and stable across runs.
    """

    def __init__(self, seed: int = 0, dim: int = STUB_DIM):
        self.seed = seed
        self.dim = dim
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            key = hashlib.blake2b(
                f"{self.seed}:{token}".encode("utf-8"), digest_size=8
            ).digest()
            rng = np.random.default_rng(int.from_bytes(key, "big"))
            raw = rng.standard_normal(self.dim)
            vec = raw / np.linalg.norm(raw)
            self._token_cache[token] = vec
        return vec

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        _check_texts(texts)
        out = []
        for text in texts:
            tokens = tokenize(text) or [""]
            total = np.zeros(self.dim)
            for token in tokens:
                total += self._token_vector(token)
            norm = np.linalg.norm(total)
            if norm == 0.0:
                total = self._token_vector("")
                norm = 1.0
            out.append(total / norm)
        return out


class StubChat:
    """Deterministic chat stub keyed on the prompt template sentinels.

    answer    -> verbatim leading sentences of the top-ranked context passage
    followup  -> "Would you like to learn more about ...?" from the topic words
    question  -> a question derived from the Title line
    unknown   -> echo of the user prompt's first 60 words
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def complete(self, req: ChatRequest) -> str:
        sentinel = req.system_prompt.splitlines()[0].strip()
        if sentinel == prompts.ANSWER_SENTINEL:
            return self._answer(req.user_prompt)
        if sentinel == prompts.FOLLOWUP_SENTINEL:
            return self._followup(req.user_prompt)
        if sentinel == prompts.QUESTION_SENTINEL:
            return self._question(req.user_prompt)
        return " ".join(req.user_prompt.split()[:60]) or "(empty)"

    def _answer(self, user_prompt: str) -> str:
        top_text = None
        for line in user_prompt.splitlines():
            if line.startswith("[") and "] " in line:
                top_text = line.split("] ", 1)[1]
                break
        if top_text is None:
            return "I could not find relevant context."
        picked: list[str] = []
        words = 0
        for sentence in split_sentences(top_text):
            n = len(sentence.split())
            if picked and words + n > 60:
                break
            picked.append(sentence)
            words += n
        return " ".join(picked) if picked else top_text

    def _followup(self, user_prompt: str) -> str:
        words: list[str] = []
        for line in user_prompt.splitlines():
            if line.startswith(prompts.TOPIC_WORDS_PREFIX):
                raw = line[len(prompts.TOPIC_WORDS_PREFIX):].strip()
                words = [w.strip() for w in raw.split(",") if w.strip()]
                break
        words = words[:3] or ["this topic"]
        if len(words) == 1:
            phrase = words[0]
        else:
            phrase = ", ".join(words[:-1]) + " and " + words[-1]
        return f"Would you like to learn more about {phrase}?"

    def _question(self, user_prompt: str) -> str:
        title = ""
        for line in user_prompt.splitlines():
            if line.startswith(prompts.TITLE_PREFIX):
                title = line[len(prompts.TITLE_PREFIX):].strip().strip('"')
                break
        title = title.rstrip(".?! ")
        if not title:
            return "N/A"
        first = tokenize(title)
        if first and first[0] in _INTERROGATIVE_STARTERS:
            return f"{title}?"
        return f"What should citizens know about {title.lower()}?"


class _HttpBase:
    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None,
                 sleep=time.sleep, monotonic=time.monotonic):
        self.config = config
        self._sleep = sleep
        self._monotonic = monotonic
        self._client = httpx.Client(transport=transport)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "") if self.config.api_key_env else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post(self, path: str, payload: dict) -> dict:
        """POST with retries; never blocks longer than timeout * (max_retries + 1)."""
        cfg = self.config
        url = cfg.base_url.rstrip("/") + path
        deadline = self._monotonic() + cfg.timeout * (cfg.max_retries + 1)
        backoff = _BACKOFF_INITIAL
        last_error: Exception | None = None
        for attempt in range(cfg.max_retries + 1):
            remaining = deadline - self._monotonic()
            if remaining <= 0:
                break
            try:
                response = self._client.post(
                    url,
                    json=payload,
                    headers=self._headers(),
                    timeout=min(cfg.timeout, remaining),
                )
                response.raise_for_status()
                return response.json()
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
            if attempt < cfg.max_retries:
                pause = min(backoff, max(deadline - self._monotonic(), 0.0))
                if pause > 0:
                    self._sleep(pause)
                backoff *= 2
        raise ProviderUnavailable(
            f"{url} failed after {cfg.max_retries + 1} attempts: {last_error}"
        )


class HttpEmbedding(_HttpBase):
    """Client for POST {base_url}/embed with {model, texts[]} -> {vectors[][]}."""

    def __init__(self, config: ProviderConfig, transport=None, sleep=time.sleep,
                 monotonic=time.monotonic):
        super().__init__(config, transport, sleep, monotonic)
        self.dim: int | None = None

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        _check_texts(texts)
        data = self._post("/embed", {"model": self.config.model_name, "texts": texts})
        vectors = data.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderUnavailable("embedding service returned a malformed payload")
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise DimensionMismatch("embedding service returned a non-flat vector")
            if self.dim is None:
                self.dim = int(arr.shape[0])
            if arr.shape[0] != self.dim:
                raise DimensionMismatch(
                    f"inconsistent dims from service: {arr.shape[0]} != {self.dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise ProviderUnavailable("embedding service returned non-finite values")
            out.append(arr)
        return out


class HttpChat(_HttpBase):
    """Client for POST {base_url}/chat with {model, system, user, temperature, max_tokens}."""

    def complete(self, req: ChatRequest) -> str:
        data = self._post(
            "/chat",
            {
                "model": self.config.model_name,
                "system": req.system_prompt,
                "user": req.user_prompt,
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
            },
        )
        text = data.get("text")
        if not isinstance(text, str) or not text.strip():
            raise EmptyCompletion("chat service returned empty text")
        return text


def make_embedding_provider(config: ProviderConfig, transport=None):
    if config.kind == "stub":
        return StubEmbedding(seed=config.seed)
    return HttpEmbedding(config, transport=transport)


def make_chat_provider(config: ProviderConfig, transport=None):
    if config.kind == "stub":
        return StubChat(seed=config.seed)
    return HttpChat(config, transport=transport)
