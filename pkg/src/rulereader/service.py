"""HTTP session API over a dialog engine.

Versioned JSON payloads; every mutation returns the turn result plus the
full updated trace so clients never poll. Errors carry a machine-readable
code. Sessions are held in memory; concurrent requests for the same session
are serialized by a per-session lock while the model itself stays frozen.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .data import EmptyDocumentError
from .dialog import (TRACE_SCHEMA_VERSION, DialogEngine, DialogError, Session,
                     SessionStateError, UnparseableAnswerError)

API_PREFIX = "/api/v1"


class CreateSessionRequest(BaseModel):
    rule_text: str
    scenario: str = ""
    question: str


class AnswerRequest(BaseModel):
    answer: str


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, tuple[Session, threading.Lock]] = {}
        self._lock = threading.Lock()

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.session_id] = (session, threading.Lock())

    def get(self, session_id: str) -> tuple[Session, threading.Lock] | None:
        with self._lock:
            return self._sessions.get(session_id)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def create_app(engine: DialogEngine) -> FastAPI:
    app = FastAPI(title="rulereader session API")
    # The web console is served from a different origin (static files or a
    # dev server); the API carries no credentials, so open CORS is safe here.
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = SessionStore()

    @app.exception_handler(DialogError)
    def handle_dialog_error(request, exc: DialogError):
        if isinstance(exc, UnparseableAnswerError):
            return _error(400, "unparseable_answer", str(exc))
        if isinstance(exc, SessionStateError):
            return _error(409, "session_not_active", str(exc))
        return _error(400, "bad_request", str(exc))

    @app.exception_handler(EmptyDocumentError)
    def handle_empty_rule(request, exc: EmptyDocumentError):
        return _error(400, "empty_rule_text", str(exc))

    @app.get(API_PREFIX + "/health")
    def health():
        return {"status": "ok", "schema_version": TRACE_SCHEMA_VERSION}

    @app.post(API_PREFIX + "/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        session = engine.start_session(body.rule_text, body.scenario, body.question)
        store.add(session)
        return {
            "schema_version": TRACE_SCHEMA_VERSION,
            "session_id": session.session_id,
            "turn": session.turns[-1].to_dict(),
            "trace": engine.get_trace(session),
        }

    @app.post(API_PREFIX + "/sessions/{session_id}/answers")
    def post_answer(session_id: str, body: AnswerRequest):
        entry = store.get(session_id)
        if entry is None:
            return _error(404, "session_not_found", f"no session {session_id}")
        session, lock = entry
        with lock:
            turn = engine.step(session, body.answer)
            return {
                "schema_version": TRACE_SCHEMA_VERSION,
                "session_id": session.session_id,
                "turn": turn.to_dict(),
                "trace": engine.get_trace(session),
            }

    @app.get(API_PREFIX + "/sessions/{session_id}/trace")
    def get_trace(session_id: str):
        entry = store.get(session_id)
        if entry is None:
            return _error(404, "session_not_found", f"no session {session_id}")
        session, lock = entry
        with lock:
            return engine.get_trace(session)

    return app
