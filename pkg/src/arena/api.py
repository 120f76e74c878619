"""HTTP+JSON surface: submissions, keys, metadata, leaderboards, operator views.

All bodies are UTF-8 JSON, timestamps RFC 3339 UTC. Authentication is the
``X-Api-Key`` header; a minimal login exchange additionally issues a
session cookie so browser clients never store the raw key. Validation
failures return the structured diagnostics array with a 422; a closed
gate is a 403 with code GATE_CLOSED.
"""

from __future__ import annotations

import secrets
from datetime import date, datetime, timezone
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from .diagnostics import Diagnostic
from .gateway import (
    ForecastPayload,
    GateClosedError,
    KeyNotFoundError,
    Participant,
    PayloadRejected,
    UnauthenticatedError,
    UnknownEventError,
)
from .leaderboard import UnknownAreaError, UnknownWindowError
from .service import Arena

UTC = timezone.utc
SESSION_COOKIE = "arena_session"


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message})


def _diagnostics_response(diags: list[Diagnostic]) -> JSONResponse:
    return JSONResponse(
        status_code=422,
        content={
            "error": "VALIDATION",
            "diagnostics": [
                {"code": d.code, "path": d.path, "message": d.message} for d in diags
            ],
        },
    )


def _parse_date(text: str) -> date:
    return date.fromisoformat(text)


def _parse_instant(text: str) -> datetime:
    instant = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if instant.tzinfo is None:
        instant = instant.replace(tzinfo=UTC)
    return instant.astimezone(UTC)


def create_app(arena: Arena, config_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="forecast-arena", docs_url=None, redoc_url=None)
    sessions: dict[str, str] = {}  # session token -> participant id

    def current_participant(
        request: Request, x_api_key: str | None = Header(default=None)
    ) -> Participant:
        if x_api_key:
            return arena.gateway.authenticate(x_api_key)
        token = request.cookies.get(SESSION_COOKIE)
        if token and token in sessions:
            participant = arena.store.participants.get(sessions[token])
            if participant is not None:
                return participant
        raise UnauthenticatedError()

    @app.exception_handler(UnauthenticatedError)
    async def _unauth(request, exc):
        return _error(401, "UNAUTHENTICATED", "unknown or revoked API key")

    @app.exception_handler(GateClosedError)
    async def _gate(request, exc: GateClosedError):
        return JSONResponse(
            status_code=403,
            content={
                "error": "GATE_CLOSED",
                "message": str(exc),
                "gate_closure": exc.gate.isoformat(),
                "received_at": exc.now.isoformat(),
            },
        )

    @app.exception_handler(PayloadRejected)
    async def _rejected(request, exc: PayloadRejected):
        return _diagnostics_response(exc.diagnostics)

    @app.exception_handler(UnknownEventError)
    async def _unknown_event(request, exc):
        return _error(404, "UNKNOWN_EVENT", str(exc))

    @app.exception_handler(KeyNotFoundError)
    async def _key_missing(request, exc):
        return _error(404, "NOT_FOUND", str(exc))

    @app.exception_handler(UnknownWindowError)
    async def _unknown_window(request, exc):
        return _error(400, "UNKNOWN_WINDOW", str(exc))

    @app.exception_handler(UnknownAreaError)
    async def _unknown_area(request, exc):
        return _error(404, "UNKNOWN_AREA", str(exc))

    # -- challenges -----------------------------------------------------------

    def _challenge_payload(spec) -> dict:
        return {"spec": spec.to_dict(), "upcoming": arena.next_events(spec.id)}

    @app.get("/v1/challenges")
    def list_challenges() -> dict:
        return {"challenges": [_challenge_payload(s) for s in arena.specs.values()]}

    @app.get("/v1/challenges/{challenge_id}")
    def get_challenge(challenge_id: str) -> dict:
        return _challenge_payload(arena.spec(challenge_id))

    # -- submissions ------------------------------------------------------------

    @app.post("/v1/challenges/{challenge_id}/areas/{area}/deliveries/{delivery}/submissions", status_code=201)
    async def submit(
        challenge_id: str,
        area: str,
        delivery: str,
        request: Request,
        participant: Participant = Depends(current_participant),
    ):
        try:
            delivery_date = _parse_date(delivery)
        except ValueError:
            return _error(404, "UNKNOWN_EVENT", f"bad delivery date {delivery!r}")
        try:
            body = await request.json()
            if not isinstance(body, dict):
                raise ValueError("body must be a JSON object")
            payload = ForecastPayload.from_dict(body)
        except Exception as exc:
            return _diagnostics_response([Diagnostic("BAD_BODY", "$", str(exc))])
        event = arena.resolve_event(challenge_id, area, delivery_date)
        submission = arena.gateway.accept_submission(participant, event, payload)
        return {"submission_id": submission.id, "received_at": submission.received_at.isoformat()}

    # -- keys and profile -----------------------------------------------------------

    @app.post("/v1/keys", status_code=201)
    def create_key(participant: Participant = Depends(current_participant)) -> dict:
        key_id, secret = arena.gateway.create_key(participant)
        return {"key_id": key_id, "secret": secret}

    @app.delete("/v1/keys/{key_id}")
    def revoke_key(key_id: str, participant: Participant = Depends(current_participant)) -> dict:
        arena.gateway.revoke_key(participant, key_id)
        return {"ok": True}

    @app.get("/v1/keys")
    def list_keys(participant: Participant = Depends(current_participant)) -> dict:
        keys = [
            {
                "key_id": k.key_id,
                "created_at": k.created_at.isoformat(),
                "revoked_at": k.revoked_at.isoformat() if k.revoked_at else None,
            }
            for k in arena.store.api_keys.values()
            if k.participant_id == participant.id
        ]
        keys.sort(key=lambda k: k["created_at"])
        return {"keys": keys}

    @app.get("/v1/me")
    def get_me(participant: Participant = Depends(current_participant)) -> dict:
        return participant.to_dict()

    @app.put("/v1/me")
    def put_me(
        body: dict,
        participant: Participant = Depends(current_participant),
    ):
        allowed = {
            "display_name",
            "method_description",
            "repo_or_service_link",
            "data_regime",
            "forecasts_public",
        }
        unknown = set(body) - allowed
        if unknown:
            return _diagnostics_response(
                [Diagnostic("BAD_VALUE", k, "unknown field") for k in sorted(unknown)]
            )
        try:
            updated = arena.gateway.update_participant(participant.id, **body)
        except ValueError as exc:
            return _diagnostics_response([Diagnostic("BAD_VALUE", "$", str(exc))])
        return updated.to_dict()

    # -- sessions (browser login exchange) ----------------------------------------

    @app.post("/v1/session", status_code=201)
    def login(body: dict, response: Response) -> dict:
        api_key = body.get("api_key", "")
        participant = arena.gateway.authenticate(api_key)
        token = secrets.token_urlsafe(24)
        sessions[token] = participant.id
        response.set_cookie(SESSION_COOKIE, token, httponly=True, samesite="lax")
        return {"participant": participant.to_dict()}

    @app.delete("/v1/session")
    def logout(request: Request, response: Response) -> dict:
        token = request.cookies.get(SESSION_COOKIE)
        if token:
            sessions.pop(token, None)
        response.delete_cookie(SESSION_COOKIE)
        return {"ok": True}

    # -- leaderboards ------------------------------------------------------------------

    def _leaderboard(challenge_id, area, window, sort, regime, as_of):
        as_of_instant = _parse_instant(as_of) if as_of else None
        lb_window, rows = arena.leaderboard(
            challenge_id,
            area,
            window,
            as_of=as_of_instant,
            sort_metric=sort,
            data_regime=regime,
        )
        return lb_window, rows

    @app.get("/v1/leaderboards/{challenge_id}/{area}")
    def leaderboard(
        challenge_id: str,
        area: str,
        window: int = 7,
        sort: str | None = None,
        regime: str | None = None,
        as_of: str | None = None,
    ) -> dict:
        lb_window, rows = _leaderboard(challenge_id, area, window, sort, regime, as_of)
        spec = arena.spec(challenge_id)
        return {
            "challenge": challenge_id,
            "area": area,
            "window": lb_window.n,
            "as_of": lb_window.as_of.isoformat(),
            "delivery_dates": [d.isoformat() for d in lb_window.delivery_dates],
            "metrics": [m.key() for m in spec.metrics],
            "rows": [r.to_dict() for r in rows],
        }

    @app.get("/v1/leaderboards/{challenge_id}/{area}/export.csv")
    def leaderboard_csv(
        challenge_id: str,
        area: str,
        window: int = 7,
        sort: str | None = None,
        regime: str | None = None,
        as_of: str | None = None,
    ) -> PlainTextResponse:
        as_of_instant = _parse_instant(as_of) if as_of else None
        csv_text = arena.export_leaderboard(
            challenge_id, area, window, as_of=as_of_instant, sort_metric=sort, data_regime=regime
        )
        return PlainTextResponse(csv_text, media_type="text/csv")

    @app.get("/v1/leaderboards/{challenge_id}/{area}/series")
    def series(
        challenge_id: str,
        area: str,
        participants: str = "",
        from_date: str | None = None,
        to_date: str | None = None,
        as_of: str | None = None,
    ) -> dict:
        pids = [p for p in participants.split(",") if p]
        as_of_instant = _parse_instant(as_of) if as_of else arena.clock.now()
        if to_date is None:
            to_d = as_of_instant.date()
        else:
            to_d = _parse_date(to_date)
        from_d = _parse_date(from_date) if from_date else to_d
        return arena.series(challenge_id, area, from_d, to_d, pids, as_of=as_of_instant)

    # -- operator -----------------------------------------------------------------------

    @app.get("/v1/admin/ingest/status")
    def ingest_status(as_of: str | None = None) -> dict:
        as_of_instant = _parse_instant(as_of) if as_of else None
        return {"events": arena.ingest_status(as_of=as_of_instant)}

    @app.post("/v1/admin/reload")
    def reload_challenges() -> dict:
        if config_dir is None:
            return _error(400, "NO_CONFIG_DIR", "server started without a config directory")
        from .config import load_challenge_dir

        specs = load_challenge_dir(config_dir)
        resolved = [s.with_source_root(Path(config_dir)) for s in specs]
        arena.specs = {s.id: s for s in resolved}
        arena.store.attach_registry(arena.specs.values())
        return {"challenges": sorted(arena.specs)}

    return app
