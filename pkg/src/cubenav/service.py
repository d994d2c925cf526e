"""HTTP session service for the explorer UI and scripts.

Sessions are in-memory; within one session requests are processed strictly
one at a time. A per-session step token protects recommendation adoption
against races with newer operations. Errors come back as
``{"code", "message", "detail"}`` with stable codes.
"""

from __future__ import annotations

import itertools
import threading

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse

from .context import ContextIds, make_restriction
from .errors import CubenavError
from .preferences import PreferenceContext, resolve_structure_ref
from .schema import serialize_constellation
from .session import SessionEngine, Workspace


class _Session:
    def __init__(self, session_id: str, engine: SessionEngine):
        self.id = session_id
        self.engine = engine
        self.lock = threading.Lock()


def _error_response(status: int, code: str, message: str, detail=None) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, "detail": detail})


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="cubenav", docs_url=None, redoc_url=None)
    sessions: dict[str, _Session] = {}
    session_counter = itertools.count(1)
    # One id source for all sessions keeps context ids unique service-wide,
    # so local anchors and the context registry are unambiguous.
    shared_ids = ContextIds()
    context_registry: dict = {}
    registry_lock = threading.Lock()

    @app.exception_handler(CubenavError)
    def _handle_engine_error(_request: Request, exc: CubenavError):
        status = 404 if exc.code == "unknown_name" else 400
        return _error_response(status, exc.code, str(exc), exc.detail)

    def _get_session(session_id: str) -> _Session:
        try:
            return sessions[session_id]
        except KeyError:
            raise _UnknownSession(session_id) from None

    class _UnknownSession(Exception):
        def __init__(self, session_id: str):
            self.session_id = session_id

    @app.exception_handler(_UnknownSession)
    def _handle_unknown_session(_request: Request, exc: _UnknownSession):
        return _error_response(404, "unknown_session", f"unknown session: {exc.session_id}")

    def _register_contexts(session: _Session):
        with registry_lock:
            if session.engine.context is not None:
                context_registry[session.engine.context.context_id] = session.engine.context
            for rec in session.engine.last_recs:
                context_registry[rec.context.context_id] = rec.context

    def _step_response(session: _Session, payload: dict) -> dict:
        _register_contexts(session)
        payload["stepToken"] = session.engine.step
        return payload

    # -- sessions ------------------------------------------------------------

    @app.post("/sessions")
    def create_session(request: Request, body: dict = Body(default=None)):
        user = (body or {}).get("user") or request.headers.get("X-User-Id") or "U1"
        session_id = f"S{next(session_counter)}"
        engine = SessionEngine(
            workspace=workspace, user=user, session_id=session_id, ids=shared_ids
        )
        sessions[session_id] = _Session(session_id, engine)
        return {"sessionId": session_id, "user": user}

    @app.post("/sessions/{session_id}/operations")
    def apply_operation(session_id: str, body: dict = Body(...)):
        session = _get_session(session_id)
        with session.lock:
            payload = session.engine.apply_json(body)
            return _step_response(session, payload)

    @app.post("/sessions/{session_id}/recommendations/{index}/accept")
    def accept_recommendation(session_id: str, index: int, body: dict = Body(default=None)):
        session = _get_session(session_id)
        with session.lock:
            token = (body or {}).get("stepToken")
            if token != session.engine.step:
                return _error_response(
                    409,
                    "stale_step",
                    f"step token {token} is stale (current {session.engine.step})",
                )
            payload = session.engine.accept(index)
            return _step_response(session, payload)

    @app.get("/sessions/{session_id}/context")
    def get_context(session_id: str):
        session = _get_session(session_id)
        with session.lock:
            if session.engine.context is None:
                return _error_response(404, "no_context", "session has no context yet")
            return session.engine.context.as_json()

    # -- annotations ----------------------------------------------------------

    @app.post("/annotations")
    def post_annotation(body: dict = Body(...)):
        item = workspace.annotations.add(
            content=body.get("content", ""),
            kind=body.get("kind", "comment"),
            author=body.get("author", "U1"),
            anchor=body["anchor"],
            parent=body.get("parent"),
        )
        return item.as_json()

    @app.get("/annotations")
    def list_annotations(context: str | None = None, thread: str | None = None):
        store = workspace.annotations
        if thread is not None:
            return [a.as_json() for a in store.thread(thread)]
        if context is not None:
            with registry_lock:
                ctx = context_registry.get(context)
            if ctx is None:
                return _error_response(404, "unknown_context", f"unknown context: {context}")
            from .cube import evaluate

            table = evaluate(ctx, workspace.facts[ctx.fact], workspace.dims)
            return [a.as_json() for a in store.resolve(ctx, table)]
        return [a.as_json() for a in store]

    # -- preferences -----------------------------------------------------------

    @app.post("/preferences")
    def post_preference(body: dict = Body(...)):
        c = workspace.constellation
        kind = body.get("kind", "structure")
        if kind == "structure":
            order = [resolve_structure_ref(c, t) for t in body.get("order", [])]
        else:
            order = [
                make_restriction(c, r["target"], r["op"], r["value"])
                for r in body.get("order", [])
            ]
        pcx = body.get("context") or {}
        context = PreferenceContext(
            fact=pcx.get("fact"),
            axes=tuple(
                (a["dim"], a.get("hier"), tuple(a.get("params", []))) for a in pcx.get("axes", [])
            ),
            restrictions=frozenset(
                make_restriction(c, r["target"], r["op"], r["value"])
                for r in pcx.get("restrictions", [])
            ),
        )
        item = workspace.preferences.add(
            owner=body.get("owner", "U1"), kind=kind, order=order, context=context
        )
        return item.as_json()

    @app.get("/preferences")
    def list_preferences(owner: str | None = None):
        store = workspace.preferences
        items = store.by_owner(owner) if owner is not None else list(store)
        return [p.as_json() for p in items]

    @app.delete("/preferences/{preference_id}")
    def delete_preference(preference_id: str):
        workspace.preferences.remove(preference_id)
        return {"deleted": preference_id}

    # -- schema -----------------------------------------------------------------

    @app.get("/schema")
    def get_schema():
        return serialize_constellation(workspace.constellation)

    return app
