"""HTTP facade over the compiler so clients can compile once and re-score.

Sessions are in-memory with a TTL (``PANELEU_SESSION_TTL`` seconds) and
hold the parsed model; compiled artifacts are cached per utility class and
error policy and never change for the session's lifetime.  Request bodies
above ``PANELEU_MAX_BODY_BYTES`` are rejected with 413.  Responses are the
same bytes the CLI prints with ``--format json``.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from dataclasses import dataclass, field
from fractions import Fraction
from threading import Lock

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response

from . import reports
from .errors import EngineError, MissingSummaryError
from .model import MomentTable, SemModel, parse_model, parse_moments, validate_topology

DEFAULT_TTL = 3600.0
DEFAULT_MAX_BODY = 1_000_000


@dataclass
class Session:
    model: SemModel
    created: float
    cache: dict = field(default_factory=dict)
    lock: Lock = field(default_factory=Lock)


def _json_response(report: dict, status_code: int = 200) -> Response:
    return Response(
        content=reports.to_json(report),
        status_code=status_code,
        media_type="application/json",
    )


def _error_response(status_code: int, diagnostics: list[str]) -> Response:
    return _json_response({"version": reports.VERSION, "diagnostics": diagnostics}, status_code)


def create_app(ttl: float | None = None, max_body: int | None = None) -> FastAPI:
    ttl = ttl if ttl is not None else float(os.environ.get("PANELEU_SESSION_TTL", DEFAULT_TTL))
    max_body = (
        max_body
        if max_body is not None
        else int(os.environ.get("PANELEU_MAX_BODY_BYTES", DEFAULT_MAX_BODY))
    )
    app = FastAPI(title="paneleu", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}
    registry_lock = Lock()

    def purge() -> None:
        now = time.monotonic()
        with registry_lock:
            for sid in [s for s, sess in sessions.items() if now - sess.created > ttl]:
                del sessions[sid]

    def get_session(sid: str) -> Session | None:
        purge()
        with registry_lock:
            return sessions.get(sid)

    @app.get("/healthz")
    def healthz() -> Response:
        return _json_response({"version": reports.VERSION, "status": "ok"})

    @app.post("/models")
    async def post_model(request: Request) -> Response:
        body = await request.body()
        if len(body) > max_body:
            return _error_response(413, [f"document exceeds {max_body} bytes"])
        try:
            document = json.loads(body, parse_float=Fraction)
        except json.JSONDecodeError as err:
            return _error_response(400, [f"invalid JSON: {err}"])
        try:
            model = parse_model(document, strict=False)
        except EngineError as err:
            return _error_response(400, [str(err)])
        diagnostics = validate_topology(model)
        if diagnostics:
            return _error_response(400, diagnostics)
        session = Session(model=model, created=time.monotonic())
        sid = uuid.uuid4().hex
        with registry_lock:
            sessions[sid] = session
        return _json_response(
            {"version": reports.VERSION, "session": sid, "diagnostics": []}, 201
        )

    @app.get("/models/{sid}/adequacy")
    def get_adequacy(
        sid: str,
        utility: str | None = Query(default=None),
        error_moments: str = Query(default="truncate"),
    ) -> Response:
        session = get_session(sid)
        if session is None:
            return _error_response(404, [f"unknown session {sid}"])
        key = ("adequacy", utility, error_moments)
        with session.lock:
            if key not in session.cache:
                try:
                    session.cache[key] = reports.make_adequacy_report(
                        session.model, utility=utility, error_policy=error_moments
                    )
                except EngineError as err:
                    return _error_response(400, [str(err)])
            return _json_response(session.cache[key])

    @app.get("/models/{sid}/ceu")
    def get_ceu(
        sid: str,
        policy: str | None = Query(default=None),
        utility: str | None = Query(default=None),
        error_moments: str = Query(default="truncate"),
        provenance: bool = Query(default=False),
    ) -> Response:
        session = get_session(sid)
        if session is None:
            return _error_response(404, [f"unknown session {sid}"])
        key = ("ceu", policy, utility, error_moments, provenance)
        with session.lock:
            if key not in session.cache:
                try:
                    session.cache[key] = reports.make_compile_report(
                        session.model,
                        utility=utility,
                        error_policy=error_moments,
                        policy=policy,
                        provenance=provenance,
                    )
                except EngineError as err:
                    return _error_response(400, [str(err)])
            return _json_response(session.cache[key])

    @app.post("/models/{sid}/scores")
    async def post_scores(sid: str, request: Request) -> Response:
        session = get_session(sid)
        if session is None:
            return _error_response(404, [f"unknown session {sid}"])
        body = await request.body()
        if len(body) > max_body:
            return _error_response(413, [f"request exceeds {max_body} bytes"])
        try:
            payload = json.loads(body, parse_float=Fraction) if body.strip() else {}
        except json.JSONDecodeError as err:
            return _error_response(400, [f"invalid JSON: {err}"])
        if not isinstance(payload, dict):
            return _error_response(400, ["request body must be a JSON object"])
        utility = payload.get("utility")
        error_moments = payload.get("error_moments", "truncate")
        closure = payload.get("closure", "gaussian")
        moments: MomentTable | None = None
        overrides = payload.get("overrides")
        if overrides:
            try:
                table = parse_moments(
                    {"mode": session.model.moments.mode, **overrides}, session.model.policies
                )
                moments = session.model.moments.merged(table)
            except EngineError as err:
                return _error_response(400, [str(err)])
        try:
            report = reports.make_score_report(
                session.model,
                utility=utility,
                error_policy=error_moments,
                closure=closure,
                moments=moments,
            )
        except MissingSummaryError as err:
            return _error_response(422, [str(err)])
        except EngineError as err:
            return _error_response(400, [str(err)])
        return _json_response(report)

    return app
