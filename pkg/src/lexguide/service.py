"""HTTP API over the dialogue engine for the web console and API clients.

Sessions live in memory behind an LRU cap with idle eviction. Per-session
turns are serialized; a concurrent turn is rejected with 409. Every
engine/navigator error maps to exactly one wire error code.
"""

from __future__ import annotations

import json
import time
from collections import OrderedDict
from dataclasses import fields as dataclass_fields
from importlib import resources
from threading import Lock

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import navigator, topics
from .engine import Engine, Session, SessionConfig, turn_to_dict
from .errors import (
    BadBacktrack,
    NoParent,
    ProviderUnavailable,
    SessionBusy,
    SessionTerminated,
    UnknownNode,
)

DEFAULT_SESSION_CAP = 256
DEFAULT_IDLE_TIMEOUT = 600.0  # seconds of inactivity before a session is abandoned

_STATUS_BY_CODE = {
    "bad-request": 400,
    "not-found": 404,
    "session-busy": 409,
    "terminated": 410,
    "provider-unavailable": 502,
}

_SCHEMA_NAMES = [
    "error", "fragment", "health", "session_create", "state", "transcript_line", "tree", "turn",
]


class SessionStore:
    """In-memory LRU of sessions with idle-based eviction."""

    def __init__(self, cap: int = DEFAULT_SESSION_CAP, idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
                 clock=time.monotonic):
        self._cap = cap
        self._idle_timeout = idle_timeout
        self._clock = clock
        self._sessions: OrderedDict[str, tuple[Session, float]] = OrderedDict()
        self._lock = Lock()

    def put(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = (session, self._clock())
            self._sessions.move_to_end(session.id)
            while len(self._sessions) > self._cap:
                self._sessions.popitem(last=False)

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            self._evict_idle()
            item = self._sessions.get(session_id)
            if item is None:
                return None
            session, _ = item
            self._sessions[session_id] = (session, self._clock())
            self._sessions.move_to_end(session_id)
            return session

    def drop(self, session_id: str) -> Session | None:
        with self._lock:
            item = self._sessions.pop(session_id, None)
            return item[0] if item else None

    def _evict_idle(self) -> None:
        now = self._clock()
        stale = [sid for sid, (_, at) in self._sessions.items() if now - at > self._idle_timeout]
        for sid in stale:
            del self._sessions[sid]

    def __len__(self) -> int:
        return len(self._sessions)


def _error(code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=_STATUS_BY_CODE[code], content={"code": code, "message": message}
    )


def _config_from_overrides(default: SessionConfig, overrides: dict) -> SessionConfig:
    allowed = {f.name for f in dataclass_fields(SessionConfig)}
    unknown = set(overrides) - allowed
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    merged = {f.name: getattr(default, f.name) for f in dataclass_fields(SessionConfig)}
    merged.update(overrides)
    return SessionConfig(**merged)


def create_app(
    engine: Engine,
    default_config: SessionConfig | None = None,
    cors_origin: str | None = None,
    session_cap: int = DEFAULT_SESSION_CAP,
    idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
    version: str = "0.1.0",
) -> FastAPI:
    app = FastAPI(title="lexguide", version=version)
    store = SessionStore(cap=session_cap, idle_timeout=idle_timeout)
    app.state.store = store
    base_config = default_config or SessionConfig()

    if cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.get("/health")
    def health():
        return {"version": version, "index_size": engine.index.size, "sessions": len(store)}

    @app.get("/fragments/{fragment_id}")
    def get_fragment(fragment_id: str):
        fragment = engine.fragments.get(fragment_id)
        if fragment is None:
            return _error("not-found", f"no fragment {fragment_id}")
        return {
            "id": fragment.id,
            "doc_id": fragment.doc_id,
            "position": fragment.position,
            "text": fragment.text,
            "source_url": fragment.source_url,
        }

    @app.get("/schemas")
    def schema_list():
        return {"schemas": [f"/schemas/{name}" for name in _SCHEMA_NAMES]}

    @app.get("/schemas/{name}")
    def schema_get(name: str):
        if name not in _SCHEMA_NAMES:
            return _error("not-found", f"no schema named {name!r}")
        text = resources.files("lexguide").joinpath(f"resources/schemas/{name}.json").read_text()
        return json.loads(text)

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.json()
        query = (body.get("query") or "").strip()
        if not query:
            return _error("bad-request", "query must be non-empty")
        try:
            config = _config_from_overrides(base_config, body.get("config") or {})
            session = engine.start_session(query, config)
        except ValueError as exc:
            return _error("bad-request", str(exc))
        except ProviderUnavailable as exc:
            return _error("provider-unavailable", str(exc))
        store.put(session)
        return {
            "session_id": session.id,
            "status": session.status,
            "termination_reason": session.termination_reason,
            "first_turn": turn_to_dict(session.id, session.transcript[0]),
        }

    @app.post("/sessions/{session_id}/turns")
    async def post_turn(session_id: str, request: Request):
        session = store.get(session_id)
        if session is None:
            return _error("not-found", f"no session {session_id}")
        body = await request.json()
        if "operation" in body:
            # navigation-only body: apply the move, return state, no response
            return _navigate(session, body)
        utterance = (body.get("utterance") or "").strip()
        if not utterance:
            return _error("bad-request", "utterance must be non-empty")
        try:
            turn = engine.take_turn(session, utterance)
        except SessionTerminated as exc:
            return _error("terminated", str(exc))
        except SessionBusy as exc:
            return _error("session-busy", str(exc))
        except ValueError as exc:
            return _error("bad-request", str(exc))
        except ProviderUnavailable as exc:
            return _error("provider-unavailable", str(exc))
        return {
            "status": session.status,
            "termination_reason": session.termination_reason,
            "turn": turn_to_dict(session.id, turn),
        }

    def _navigate(session: Session, body: dict):
        try:
            state = engine.apply_navigation(
                session, body.get("operation"),
                target=body.get("target"), steps=body.get("steps"),
            )
        except (NoParent, UnknownNode, BadBacktrack, ValueError) as exc:
            return _error("bad-request", f"{type(exc).__name__}: {exc}")
        except SessionTerminated as exc:
            return _error("terminated", str(exc))
        except SessionBusy as exc:
            return _error("session-busy", str(exc))
        return navigator.state_to_snapshot(state, session.tree)

    @app.post("/sessions/{session_id}/navigate")
    async def navigate(session_id: str, request: Request):
        session = store.get(session_id)
        if session is None:
            return _error("not-found", f"no session {session_id}")
        return _navigate(session, await request.json())

    @app.get("/sessions/{session_id}/tree")
    def get_tree(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error("not-found", f"no session {session_id}")
        if session.tree is None:
            return _error("not-found", f"session {session_id} has no topic tree (mode {session.config.mode})")
        return topics.tree_to_snapshot(session.tree)

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error("not-found", f"no session {session_id}")
        if session.state is None:
            return _error("not-found", f"session {session_id} has no navigation state")
        return navigator.state_to_snapshot(session.state, session.tree)

    @app.get("/sessions/{session_id}/transcript")
    def get_transcript(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error("not-found", f"no session {session_id}")
        return {
            "session_id": session.id,
            "status": session.status,
            "termination_reason": session.termination_reason,
            "turns": [turn_to_dict(session.id, t) for t in session.transcript],
        }

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        session = store.drop(session_id)
        if session is None:
            return _error("not-found", f"no session {session_id}")
        engine.end_session(session, reason="user-satisfied")
        return {"session_id": session.id, "status": session.status,
                "termination_reason": session.termination_reason}

    return app
