"""Session orchestration: first-turn tree construction, per-turn routing,
response and follow-up generation, baseline modes, and transcripts.

A session embeds the user's opening query, retrieves a diversity-aware
fragment set, organizes it into a topic tree, and then walks the tree turn
by turn: accepted follow-ups advance by strategy, fresh queries are routed
by centroid similarity, and out-of-scope queries rebuild the tree.
"""

from __future__ import annotations

import copy
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import json

from . import navigator, prompts, topics
from .corpus import Fragment, stopwords, tokenize
from .errors import SessionBusy, SessionTerminated
from .providers import ChatRequest
from .retrieval import (
    DEFAULT_K_ANSWER,
    DEFAULT_K_TOPIC,
    DEFAULT_LAMBDA,
    VectorIndex,
    mmr_retrieve,
    rank_by_similarity,
    top_k_retrieve,
)

MODE_LEXGUIDE = "lexguide"
MODE_RAG_BASIC = "rag-basic"
MODE_RAG_MMR = "rag-mmr"
MODE_CONV_RAG = "conv-rag"
MODES = (MODE_LEXGUIDE, MODE_RAG_BASIC, MODE_RAG_MMR, MODE_CONV_RAG)

NO_RESULTS_MESSAGE = "No relevant information found"
COVERAGE_MESSAGE = "All relevant topics explored"
NO_CONTEXT_MESSAGE = (
    "I could not find relevant information in the indexed legal sources for this question."
)

HISTORY_WINDOW = 3


@dataclass(frozen=True)
class SessionConfig:
    mode: str = MODE_LEXGUIDE
    k_topic: int = DEFAULT_K_TOPIC
    k_answer: int = DEFAULT_K_ANSWER
    mmr_lambda: float = DEFAULT_LAMBDA
    tau: float = navigator.DEFAULT_TAU
    strategy: str = navigator.STRATEGY_BFS
    l_topic_words: int = topics.DEFAULT_TOP_WORDS
    temperature: float = 0.3
    min_cluster_size: int = topics.DEFAULT_MIN_CLUSTER_SIZE
    levels: int = topics.DEFAULT_LEVELS

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode: {self.mode}")
        if self.k_answer > self.k_topic:
            raise ValueError("k_answer must be <= k_topic")
        if self.k_answer < 1 or self.k_topic < 1:
            raise ValueError("k values must be >= 1")
        if not 0.0 <= self.mmr_lambda <= 1.0:
            raise ValueError("mmr_lambda must be in [0, 1]")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1)")
        if self.strategy not in (navigator.STRATEGY_BFS, navigator.STRATEGY_DFS):
            raise ValueError("strategy must be BFS or DFS")
        if self.l_topic_words < 1:
            raise ValueError("l_topic_words must be >= 1")


@dataclass
class DialogueTurn:
    user_utterance: str
    response: str
    followup: str | None
    node_id: str | None
    supporting_fragment_ids: tuple[str, ...]
    turn_index: int
    started_at: str
    completed_at: str


@dataclass
class Session:
    id: str
    config: SessionConfig
    tree: topics.TopicTree | None = None
    state: navigator.NavigationState | None = None
    transcript: list[DialogueTurn] = field(default_factory=list)
    status: str = "active"
    termination_reason: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def active(self) -> bool:
        return self.status == "active"


class LogicalClock:
    """Deterministic clock for stub runs: fixed epoch, one second per tick."""

    def __init__(self, epoch: datetime | None = None):
        self._now = epoch or datetime(2024, 1, 1, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        current = self._now
        self._now = current + timedelta(seconds=1)
        return current


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class Engine:
    """Binds an index, its fragments, and providers into a dialogue engine."""

    def __init__(
        self,
        index: VectorIndex,
        fragments: list[Fragment],
        embedder,
        chatter,
        clock=None,
    ):
        self.index = index
        self.fragments = {f.id: f for f in fragments}
        self.embedder = embedder
        self.chatter = chatter
        self.clock = clock or _utc_now

    # -- generation ----------------------------------------------------

    def generate_response(
        self, query: str, fragments: list[Fragment], temperature: float = 0.3
    ) -> str:
        if not fragments:
            return NO_CONTEXT_MESSAGE
        system, user = prompts.build_answer_prompt(
            [(f.id, f.text) for f in fragments], query
        )
        return self.chatter.complete(
            ChatRequest(system_prompt=system, user_prompt=user, temperature=temperature)
        )

    def generate_followup(
        self,
        next_words: list[str],
        history: list[navigator.HistoryEntry],
        temperature: float = 0.3,
    ) -> str:
        if not next_words:
            raise ValueError("next_words must be non-empty")
        window = [(h.user, h.response) for h in history[-HISTORY_WINDOW:]]
        system, user = prompts.build_followup_prompt(next_words, window)
        text = self.chatter.complete(
            ChatRequest(system_prompt=system, user_prompt=user, temperature=temperature)
        ).strip()
        return text if text.endswith("?") else text + "?"

    def _embed(self, text: str):
        return self.embedder.embed_texts([text])[0]

    # -- session lifecycle ----------------------------------------------

    def start_session(
        self, query: str, config: SessionConfig | None = None, session_id: str | None = None
    ) -> Session:
        if not query or not query.strip():
            raise ValueError("query must be non-empty")
        config = config or SessionConfig()
        session = Session(id=session_id or uuid.uuid4().hex, config=config)
        started = self._stamp()

        if config.mode == MODE_LEXGUIDE:
            self._first_turn_lexguide(session, query, started)
        else:
            self._baseline_turn(session, query, started)
        return session

    def _first_turn_lexguide(self, session: Session, query: str, started: str) -> None:
        config = session.config
        query_vec = self._embed(query)
        scored = mmr_retrieve(query_vec, self.index, config.k_topic, config.mmr_lambda)
        if not scored:
            self._append_turn(session, query, NO_RESULTS_MESSAGE, None, None, (), started)
            session.status = "terminated"
            session.termination_reason = "no-results"
            return

        tree = self._build_tree(scored, config)
        state = navigator.init_state(tree, config.strategy)

        node = tree.root
        ranked = rank_by_similarity(query_vec, self.index, list(node.fragment_ids), config.k_answer)
        support = [self.fragments[s.fragment_id] for s in ranked]
        response = self.generate_response(query, support, config.temperature)

        entry = navigator.HistoryEntry(user=query, response=response)
        state.history.append(entry)
        followup = None
        target = navigator.next_node(state, tree)
        if target is not None:
            followup = self.generate_followup(
                self._node_words(tree, target), state.history, config.temperature
            )
        entry.followup = followup

        session.tree = tree
        session.state = state
        self._append_turn(
            session, query, response, followup, node.id,
            tuple(f.id for f in support), started,
        )
        self._check_and_apply_termination(session)

    def _baseline_turn(self, session: Session, utterance: str, started: str) -> None:
        config = session.config
        query_vec = self._embed(utterance)
        if config.mode == MODE_RAG_BASIC:
            scored = top_k_retrieve(query_vec, self.index, config.k_answer)
        else:  # rag-mmr and conv-rag share diversity-aware retrieval
            scored = mmr_retrieve(query_vec, self.index, config.k_answer, config.mmr_lambda)
        support = [self.fragments[s.fragment_id] for s in scored]
        response = (
            self.generate_response(utterance, support, config.temperature)
            if support
            else NO_RESULTS_MESSAGE
        )
        followup = None
        if config.mode == MODE_CONV_RAG and support:
            history = [navigator.HistoryEntry(t.user_utterance, t.response) for t in session.transcript]
            history.append(navigator.HistoryEntry(utterance, response))
            followup = self.generate_followup(
                self._salient_words(response), history, config.temperature
            )
        self._append_turn(
            session, utterance, response, followup, None,
            tuple(f.id for f in support), started,
        )

    def take_turn(self, session: Session, utterance: str) -> DialogueTurn:
        if not session.lock.acquire(blocking=False):
            raise SessionBusy(f"session {session.id} already has a turn in flight")
        try:
            if not session.active:
                raise SessionTerminated(f"session {session.id} is {session.termination_reason}")
            if not utterance or not utterance.strip():
                raise ValueError("utterance must be non-empty")
            started = self._stamp()
            if session.config.mode != MODE_LEXGUIDE:
                self._baseline_turn(session, utterance, started)
                return session.transcript[-1]
            return self._lexguide_turn(session, utterance, started)
        finally:
            session.lock.release()

    def _lexguide_turn(self, session: Session, utterance: str, started: str) -> DialogueTurn:
        config = session.config
        tree = session.tree
        state = copy.deepcopy(session.state)

        last_followup = session.transcript[-1].followup if session.transcript else None
        if last_followup and navigator.is_acknowledgment(utterance, last_followup):
            query_text = last_followup
            query_vec = self._embed(query_text)
            target = navigator.next_node(state, tree)
            if target is None:
                target = state.current
            navigator.advance_to(state, tree, target)
        else:
            query_text = utterance
            query_vec = self._embed(utterance)
            decision = navigator.route_query(state, tree, query_vec, config.tau)
            if decision.kind == "rebuild-tree":
                scored = mmr_retrieve(query_vec, self.index, config.k_topic, config.mmr_lambda)
                if not scored:
                    self._append_turn(
                        session, utterance, NO_RESULTS_MESSAGE, None, None, (), started
                    )
                    session.status = "terminated"
                    session.termination_reason = "no-results"
                    return session.transcript[-1]
                tree = self._build_tree(scored, config)
                fresh = navigator.init_state(tree, config.strategy)
                fresh.history = state.history
                state = fresh
            else:
                navigator.advance_to(state, tree, decision.target)

        node = tree.nodes[state.current]
        ranked = rank_by_similarity(query_vec, self.index, list(node.fragment_ids), config.k_answer)
        support = [self.fragments[s.fragment_id] for s in ranked]
        response = self.generate_response(query_text, support, config.temperature)

        entry = navigator.HistoryEntry(user=utterance, response=response)
        state.history.append(entry)
        followup = None
        target = navigator.next_node(state, tree)
        if target is not None:
            followup = self.generate_followup(
                self._node_words(tree, target), state.history, config.temperature
            )
        entry.followup = followup

        session.tree = tree
        session.state = state
        self._append_turn(
            session, utterance, response, followup, node.id,
            tuple(f.id for f in support), started,
        )
        self._check_and_apply_termination(session)
        return session.transcript[-1]

    def apply_navigation(
        self, session: Session, op: str, target: str | None = None, steps: int | None = None
    ) -> navigator.NavigationState:
        """Explicit user-driven move; no response is generated."""
        if not session.lock.acquire(blocking=False):
            raise SessionBusy(f"session {session.id} already has a turn in flight")
        try:
            if not session.active:
                raise SessionTerminated(f"session {session.id} is {session.termination_reason}")
            if session.state is None:
                raise SessionTerminated("navigation requires a lexguide-mode session")
            navigator.apply_operation(session.state, session.tree, op, target, steps)
            return session.state
        finally:
            session.lock.release()

    def end_session(self, session: Session, reason: str = "user-satisfied") -> Session:
        if session.active:
            session.status = "terminated"
            session.termination_reason = reason
        return session

    # -- helpers ---------------------------------------------------------

    def _build_tree(self, scored, config: SessionConfig) -> topics.TopicTree:
        ids = [s.fragment_id for s in scored]
        frags = [self.fragments[fid] for fid in ids]
        vectors = self.index.vectors_for(ids)
        tree = topics.build_topic_tree(
            frags, list(vectors), config.min_cluster_size, config.levels
        )
        return topics.extract_topic_words(
            tree, {f.id: f.text for f in frags}, config.l_topic_words
        )

    def _node_words(self, tree: topics.TopicTree, node_id: str) -> list[str]:
        words = topics.topic_word_list(tree.nodes[node_id])
        if words:
            return words
        # degenerate trees can leave a node wordless; fall back to its own text
        node = tree.nodes[node_id]
        first = self.fragments[node.fragment_ids[0]].text
        return self._salient_words(first)

    def _salient_words(self, text: str) -> list[str]:
        stop = stopwords()
        tokens = [t for t in tokenize(text) if t not in stop]
        if not tokens:
            tokens = tokenize(text)
        return tokens[:3] if tokens else ["this topic"]

    def _check_and_apply_termination(self, session: Session) -> None:
        status = navigator.check_termination(session.state, session.tree)
        if status.terminated:
            session.status = "terminated"
            session.termination_reason = status.reason

    def _stamp(self) -> str:
        return self.clock().isoformat()

    def _append_turn(
        self,
        session: Session,
        utterance: str,
        response: str,
        followup: str | None,
        node_id: str | None,
        support: tuple[str, ...],
        started: str,
    ) -> None:
        session.transcript.append(
            DialogueTurn(
                user_utterance=utterance,
                response=response,
                followup=followup,
                node_id=node_id,
                supporting_fragment_ids=support,
                turn_index=len(session.transcript),
                started_at=started,
                completed_at=self._stamp(),
            )
        )


def turn_to_dict(session_id: str, turn: DialogueTurn) -> dict:
    return {
        "session_id": session_id,
        "turn_index": turn.turn_index,
        "user": turn.user_utterance,
        "response": turn.response,
        "followup": turn.followup,
        "node_id": turn.node_id,
        "supporting_fragment_ids": list(turn.supporting_fragment_ids),
        "timestamps": {"started": turn.started_at, "completed": turn.completed_at},
    }


def write_transcript(session: Session, path: str | Path) -> None:
    """Transcript JSONL: one line per turn."""
    with open(path, "w", encoding="utf-8") as fh:
        for turn in session.transcript:
            fh.write(json.dumps(turn_to_dict(session.id, turn), ensure_ascii=False) + "\n")


def read_transcript(path: str | Path) -> list[dict]:
    turns = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                turns.append(json.loads(line))
    return turns
