"""Session-holding HTTP service around the answering pipeline.

Sessions live in memory; an optional line-delimited log file records every
answered turn for offline inspection. Requests to different sessions may
run concurrently, requests to the same session are serialized with a
per-session lock. Apart from the session store the service is stateless,
so identical question sequences in fresh sessions give identical answers.

Each explanation evidence in a response carries its source tag and, per
entity, the character spans of its mentions in the evidence text, so a
client can highlight exactly the entity occurrences the answer used.
"""

from __future__ import annotations

import json
import threading
import uuid
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .pipeline import EXISTENTIAL_ANSWER, AnswerResult, PipelineRuntime, append_turn
from .sr import Conversation


class QuestionBody(BaseModel):
    question: str = Field(min_length=1)


class _Session:
    def __init__(self, session_id: str):
        self.id = session_id
        self.conversation = Conversation(conv_id=session_id)
        self.turns: list[dict] = []
        self.created = _now()
        self.updated = self.created
        self.lock = threading.Lock()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _entity_views(evidence) -> list[dict]:
    spans: dict[str, list[list[int]]] = {}
    for mention in evidence.mentions:
        spans.setdefault(mention.entity.id, []).append([mention.start, mention.end])
    return [{"id": ref.id, "label": ref.label, "spans": spans.get(ref.id, [])}
            for ref in evidence.entities()]


def turn_view(result: AnswerResult, turn: int) -> dict:
    """JSON-ready view of one answered turn."""
    if result.existential:
        answer = {"id": None, "label": EXISTENTIAL_ANSWER, "score": None}
    elif result.answer is not None:
        answer = {"id": result.answer.id, "label": result.answer.label,
                  "score": result.answer_score}
    else:
        answer = None
    sr = None
    if result.sr is not None:
        sr = {"context": result.sr.context_entity,
              "question": result.sr.question_entity,
              "relation": result.sr.relation,
              "type": result.sr.answer_type}
    view = {
        "question": result.question,
        "answer": answer,
        "ranked_answers": [{"id": ref.id, "label": ref.label, "score": score}
                           for ref, score in result.ranked_answers[:10]],
        "sr": sr,
        "evidences": [{"text": ev.text, "source": ev.source, "score": score,
                       "entities": _entity_views(ev)}
                      for ev, score in result.explanations],
        "turn": turn,
        "existential": result.existential,
    }
    if result.diagnostic:
        view["diagnostic"] = result.diagnostic
    return view


def create_app(runtime: PipelineRuntime, model_versions: dict | None = None,
               session_log: str | None = None) -> FastAPI:
    app = FastAPI(title="graphqa")
    # the browser client is typically served from another origin (a static
    # file server); the API carries no credentials, so open CORS is safe
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    sessions: dict[str, _Session] = {}
    registry_lock = threading.Lock()
    versions = dict(model_versions or
                    {"pruning": "unversioned", "answering": "unversioned"})

    def _get(session_id: str) -> _Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id!r}")
        return session

    def _log(record: dict):
        if session_log is None:
            return
        with registry_lock:
            with open(session_log, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(record) + "\n")

    @app.post("/api/sessions")
    def create_session() -> dict:
        session = _Session(uuid.uuid4().hex)
        with registry_lock:
            sessions[session.id] = session
        return {"session_id": session.id}

    @app.post("/api/sessions/{session_id}/questions")
    def post_question(session_id: str, body: QuestionBody) -> dict:
        session = _get(session_id)
        with session.lock:
            result = runtime.run(session.conversation, body.question)
            session.conversation = append_turn(session.conversation,
                                               body.question, result)
            view = turn_view(result, len(session.turns) + 1)
            session.turns.append(view)
            session.updated = _now()
        _log({"session_id": session_id, **view})
        return view

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        session = _get(session_id)
        with session.lock:
            return {"session_id": session.id, "created": session.created,
                    "updated": session.updated, "turns": list(session.turns)}

    @app.delete("/api/sessions/{session_id}")
    def delete_session(session_id: str) -> dict:
        with registry_lock:
            if sessions.pop(session_id, None) is None:
                raise HTTPException(status_code=404,
                                    detail=f"unknown session {session_id!r}")
        return {"deleted": session_id}

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "model_versions": versions}

    return app
