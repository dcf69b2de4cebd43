"""HTTP service exposing the dialogue engine and conversation reports."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from sophie.config import Config
from sophie.content import load_content, load_lexicons
from sophie.dialogue import DialogueEngine, SessionState, SessionStatus, TimingError
from sophie.report import compute_report, report_to_json
from sophie.service import store
from sophie.service.models import (
    CreateSessionRequest,
    ReportResponse,
    SchemaList,
    SchemaSummary,
    SessionCreated,
    TurnIn,
    TurnOut,
    TurnsResponse,
)
from sophie.transcript import (
    ParseError,
    Speaker,
    Transcript,
    Turn,
    ValidationError,
    parse_transcript,
)

_PLACEHOLDER_PAGE = """<!doctype html>
<html>
<head><meta charset="utf-8"><title>SOPHIE trainer</title></head>
<body>
<h1>SOPHIE trainer service</h1>
<p>No web UI is installed. The JSON API is available under <code>/api</code>.</p>
</body>
</html>
"""


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class SessionRecord:
    session_id: str
    schema_id: str
    status: str
    turns: list = field(default_factory=list)
    state: SessionState | None = None
    report_id: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_activity: float = field(default_factory=time.monotonic)


class SessionHub:
    """Session registry with lazy restore from the persistence log."""

    def __init__(self, engine: DialogueEngine, log: store.SessionLog, idle_seconds: float):
        self.engine = engine
        self.log = log
        self.idle_seconds = idle_seconds
        self._records: dict[str, SessionRecord] = {}
        self._registry_lock = threading.Lock()

    def create(self, schema_id: str) -> SessionRecord:
        if schema_id not in self.engine.schemas:
            raise ApiError(404, "not_found", f"unknown schema: {schema_id}")
        session_id = store.new_id()
        state, emitted = self.engine.start_session(schema_id, session_id=session_id)
        record = SessionRecord(
            session_id=session_id,
            schema_id=schema_id,
            status=state.status.value,
            turns=list(state.turns),
            state=state,
        )
        self.log.append(session_id, {"type": "created", "schema_id": schema_id})
        for turn in emitted:
            self.log.append(session_id, _turn_event(turn))
        with self._registry_lock:
            self._records[session_id] = record
        return record

    def get(self, session_id: str) -> SessionRecord:
        with self._registry_lock:
            record = self._records.get(session_id)
            if record is None:
                record = self._restore(session_id)
                if record is not None:
                    self._records[session_id] = record
        if record is None:
            raise ApiError(404, "not_found", f"unknown session: {session_id}")
        self._expire_if_idle(record)
        return record

    def _restore(self, session_id: str) -> SessionRecord | None:
        """Rebuild a session from its log. Anything restored from disk is

        treated as completed: the interrupted dialogue is not resumable, but
        its transcript so far can still be ended and analyzed.
        """
        if not self.log.exists(session_id):
            return None
        schema_id = ""
        turns: list = []
        report_id = None
        for event in self.log.read(session_id):
            kind = event.get("type")
            if kind == "created":
                schema_id = event.get("schema_id", "")
            elif kind == "turn":
                turns.append(
                    Turn(
                        index=len(turns),
                        speaker=Speaker(event["speaker"]),
                        text=event["text"],
                        start_ms=event.get("start_ms"),
                        end_ms=event.get("end_ms"),
                    )
                )
            elif kind == "ended":
                report_id = event.get("report_id")
        return SessionRecord(
            session_id=session_id,
            schema_id=schema_id,
            status=SessionStatus.COMPLETED.value,
            turns=turns,
            report_id=report_id,
        )

    def _expire_if_idle(self, record: SessionRecord) -> None:
        with record.lock:
            if record.status != SessionStatus.ACTIVE.value:
                return
            if time.monotonic() - record.last_activity <= self.idle_seconds:
                return
            record.status = SessionStatus.COMPLETED.value
            if record.state is not None:
                record.state.status = SessionStatus.COMPLETED
            self.log.append(record.session_id, {"type": "expired"})


def _turn_event(turn: Turn) -> dict:
    event = {"type": "turn", "speaker": turn.speaker.value, "text": turn.text}
    if turn.start_ms is not None:
        event["start_ms"] = turn.start_ms
    if turn.end_ms is not None:
        event["end_ms"] = turn.end_ms
    return event


def _turn_out(turn: Turn) -> TurnOut:
    return TurnOut(
        index=turn.index,
        speaker=turn.speaker.value,
        text=turn.text,
        start_ms=turn.start_ms,
        end_ms=turn.end_ms,
    )


def create_app(cfg: Config) -> FastAPI:
    content = load_content(cfg.content_dir)
    lexicons = load_lexicons(cfg)
    engine = DialogueEngine(content.schemas, content.trees)

    session_log = store.SessionLog(cfg.data_dir / "sessions")
    reports = store.ReportStore(cfg.data_dir / "reports")
    hub = SessionHub(engine, session_log, cfg.session_idle_hours * 3600.0)

    app = FastAPI(title="sophie", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    def on_api_error(request: Request, exc: ApiError) -> JSONResponse:
        payload = {"error": {"code": exc.code, "message": exc.message}}
        return JSONResponse(status_code=exc.status, content=payload)

    @app.exception_handler(RequestValidationError)
    def on_validation_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        payload = {"error": {"code": "invalid_request", "message": str(exc)}}
        return JSONResponse(status_code=400, content=payload)

    def finish(record: SessionRecord) -> ReportResponse:
        """Produce (or reuse) the session report. Caller holds the lock."""
        if record.report_id is None:
            if record.state is not None and record.state.status == SessionStatus.ACTIVE:
                transcript = engine.end_session(record.state)
                record.status = SessionStatus.COMPLETED.value
            else:
                transcript = Transcript(
                    turns=tuple(record.turns), schema_id=record.schema_id or None
                )
            report = compute_report(transcript, lexicons, content.trees, cfg)
            record.report_id = reports.save(report_to_json(report))
            session_log.append(
                record.session_id, {"type": "ended", "report_id": record.report_id}
            )
        raw = reports.load(record.report_id)
        return ReportResponse(report_id=record.report_id, report=json.loads(raw))

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/api/schemas", response_model=SchemaList)
    def list_schemas() -> SchemaList:
        summaries = [
            SchemaSummary(id=schema.id, description=schema.description)
            for schema in sorted(engine.schemas.values(), key=lambda s: s.id)
        ]
        return SchemaList(schemas=summaries)

    @app.post("/api/sessions", response_model=SessionCreated, status_code=201)
    def create_session(body: CreateSessionRequest) -> SessionCreated:
        record = hub.create(body.schema_id)
        return SessionCreated(
            session_id=record.session_id,
            status=record.status,
            turns=[_turn_out(t) for t in record.turns],
        )

    @app.post("/api/sessions/{session_id}/turns", response_model=TurnsResponse)
    def post_turn(session_id: str, body: TurnIn) -> TurnsResponse:
        record = hub.get(session_id)
        with record.lock:
            if record.status != SessionStatus.ACTIVE.value or record.state is None:
                raise ApiError(409, "session_completed", "session is not active")
            if not body.text.strip():
                raise ApiError(400, "empty_text", "turn text must not be blank")
            before = len(record.state.turns)
            try:
                engine.process_user_turn(
                    record.state, body.text, start_ms=body.start_ms, end_ms=body.end_ms
                )
            except TimingError as exc:
                raise ApiError(400, "invalid_timing", str(exc))
            new_turns = record.state.turns[before:]
            for turn in new_turns:
                session_log.append(session_id, _turn_event(turn))
            record.turns.extend(new_turns)
            record.status = record.state.status.value
            record.last_activity = time.monotonic()
            return TurnsResponse(
                status=record.status, turns=[_turn_out(t) for t in record.turns]
            )

    @app.post("/api/sessions/{session_id}/end", response_model=ReportResponse)
    def end_session(session_id: str) -> ReportResponse:
        record = hub.get(session_id)
        with record.lock:
            record.last_activity = time.monotonic()
            return finish(record)

    @app.post("/api/analyze", response_model=ReportResponse)
    async def analyze(request: Request) -> ReportResponse:
        raw = await request.body()
        try:
            transcript = parse_transcript(raw.decode("utf-8"))
        except UnicodeDecodeError:
            raise ApiError(400, "invalid_transcript", "body is not valid UTF-8")
        except ParseError as exc:
            raise ApiError(400, "invalid_transcript", str(exc))
        except ValidationError as exc:
            messages = "; ".join(v.message for v in exc.violations)
            raise ApiError(400, "invalid_transcript", messages)
        report = compute_report(transcript, lexicons, content.trees, cfg)
        report_id = reports.save(report_to_json(report))
        return ReportResponse(report_id=report_id, report=report)

    @app.get("/api/reports/{report_id}")
    def get_report(report_id: str) -> Response:
        raw = reports.load(report_id)
        if raw is None:
            raise ApiError(404, "not_found", f"unknown report: {report_id}")
        return Response(content=raw, media_type="application/json")

    if cfg.ui_dir is not None and cfg.ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=cfg.ui_dir, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return _PLACEHOLDER_PAGE

    return app
