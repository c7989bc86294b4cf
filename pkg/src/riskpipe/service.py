"""HTTP facade: sessions, event intake, snapshots and server-sent updates.

Intake is decoupled from computation.  POST /sessions/{id}/events validates
the envelope and sequence number, enqueues the event, and returns 202
immediately; a per-session worker thread applies events in order and
publishes update messages.  Every accepted event produces exactly one
completion message, ``risk`` on success or ``error`` on failure, and
successful events additionally publish ``sensitivity`` and ``timing``
messages.  Subscribers replay the buffer from any point via ``?after=``.

A failed event leaves the session untouched and rolls the accepted
sequence back, so the client can resubmit a corrected event with the same
number.  Events already queued behind a failure fail in turn with a
sequence conflict, each reported on the stream.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .errors import (
    ConflictError,
    NotFoundError,
    ParameterError,
    ParseError,
    RiskpipeError,
    ShapeError,
)
from .portfolio import Session, SessionEvent

__all__ = ["SessionManager", "create_app"]

_STOP = object()

_SESSION_OPTIONS = {
    "seed": int,
    "n": int,
    "alpha": float,
    "horizon": int,
    "sensitivity": bool,
    "normalized_weights": bool,
}


@dataclass
class _SessionRecord:
    session: Session
    inbox: "queue.Queue" = field(default_factory=queue.Queue)
    # ``lock`` guards the counters and the message buffer and is only ever
    # held for constant-time work, so intake latency does not depend on the
    # sample count.  ``session_lock`` serializes access to the session
    # itself, which the worker holds for the duration of a computation.
    lock: threading.Lock = field(default_factory=threading.Lock)
    session_lock: threading.Lock = field(default_factory=threading.Lock)
    updated: threading.Condition = field(init=False)
    messages: list = field(default_factory=list)
    accepted_head: int = 0
    submitted: int = 0
    completed: int = 0
    worker: threading.Thread | None = None

    def __post_init__(self):
        self.updated = threading.Condition(self.lock)

    def publish(self, kind: str, seq: int, body) -> None:
        # Caller must hold self.lock.  The wire message is exactly
        # {seq, kind, body}; the stream cursor is positional.
        self.messages.append({"seq": seq, "kind": kind, "body": body})

    def snapshot(self) -> dict:
        with self.session_lock:
            return self.session.snapshot()


class SessionManager:
    """Owns live sessions and their worker threads."""

    def __init__(self):
        self._records: dict[str, _SessionRecord] = {}
        self._lock = threading.Lock()

    def create_session(self, options: dict | None = None) -> dict:
        options = dict(options or {})
        unknown = set(options) - set(_SESSION_OPTIONS)
        if unknown:
            raise ParameterError(f"unknown session options: {sorted(unknown)}")
        for name, typ in _SESSION_OPTIONS.items():
            if name in options and not isinstance(options[name], (typ, int)):
                raise ParameterError(
                    f"session option {name!r} must be {typ.__name__}, got {options[name]!r}"
                )
        session_id = uuid.uuid4().hex[:12]
        record = _SessionRecord(session=Session(session_id=session_id, **options))
        record.worker = threading.Thread(
            target=self._run_worker, args=(record,), name=f"session-{session_id}", daemon=True
        )
        record.worker.start()
        with self._lock:
            self._records[session_id] = record
        return {"session": session_id, "head": 0}

    def _record(self, session_id: str) -> _SessionRecord:
        with self._lock:
            record = self._records.get(session_id)
        if record is None:
            raise NotFoundError(f"no session {session_id!r}")
        return record

    def submit(self, session_id: str, payload: dict) -> int:
        record = self._record(session_id)
        event = SessionEvent.from_payload(payload)
        with record.lock:
            expected = record.accepted_head + 1
            if event.seq != expected:
                raise ConflictError(
                    f"event seq {event.seq} does not follow accepted head "
                    f"{record.accepted_head}; expected {expected}"
                )
            record.accepted_head = event.seq
            record.submitted += 1
        record.inbox.put(event)
        return event.seq

    def _run_worker(self, record: _SessionRecord) -> None:
        while True:
            item = record.inbox.get()
            if item is _STOP:
                return
            try:
                with record.session_lock:
                    notification = record.session.apply(item)
            except RiskpipeError as exc:
                with record.updated:
                    record.accepted_head = record.session.head
                    record.publish(
                        "error",
                        item.seq,
                        {"event_kind": item.kind, "message": str(exc)},
                    )
                    record.completed += 1
                    record.updated.notify_all()
                continue
            with record.updated:
                record.publish("risk", item.seq, notification["risk"])
                if notification["sensitivity"] is not None:
                    record.publish("sensitivity", item.seq, notification["sensitivity"])
                record.publish("timing", item.seq, notification["timing"])
                record.completed += 1
                record.updated.notify_all()

    def snapshot(self, session_id: str) -> dict:
        return self._record(session_id).snapshot()

    def ledger_csv(self, session_id: str) -> str:
        record = self._record(session_id)
        with record.session_lock:
            return record.session.ledger.to_csv()

    def stream(self, session_id: str, after: int = 0, max_events: int | None = None,
               timeout_s: float = 30.0):
        """Yield update messages past position ``after`` as SSE frames.

        Each frame carries its 1-based buffer position on the SSE ``id:``
        line (the Last-Event-ID reconnect cursor).  Stops after
        ``max_events`` messages, or once ``timeout_s`` passes with nothing
        new; both keep the stream bounded for polling clients.
        """
        record = self._record(session_id)
        sent = 0
        cursor = max(after, 0)
        while max_events is None or sent < max_events:
            with record.updated:
                if len(record.messages) <= cursor:
                    record.updated.wait(timeout=timeout_s)
                    if len(record.messages) <= cursor:
                        return
                pending = record.messages[cursor:]
            for message in pending:
                cursor += 1
                yield f"id: {cursor}\ndata: {json.dumps(message, sort_keys=True)}\n\n"
                sent += 1
                if max_events is not None and sent >= max_events:
                    return

    def messages(self, session_id: str, after: int = 0) -> list:
        record = self._record(session_id)
        with record.lock:
            return list(record.messages[max(after, 0):])

    def drain(self, session_id: str, timeout_s: float = 60.0) -> None:
        """Block until every accepted event has a completion message."""
        record = self._record(session_id)
        deadline = time.monotonic() + timeout_s
        with record.updated:
            while record.completed < record.submitted:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(
                        f"session {session_id!r} still busy after {timeout_s}s"
                    )
                record.updated.wait(timeout=min(remaining, 0.5))

    def stop(self) -> None:
        with self._lock:
            records = list(self._records.values())
            self._records.clear()
        for record in records:
            record.inbox.put(_STOP)
        for record in records:
            if record.worker is not None:
                record.worker.join(timeout=5.0)


def create_app(manager: SessionManager | None = None, static_dir: str | Path | None = None) -> FastAPI:
    """Build the API application; optionally serve a static UI bundle."""
    manager = manager or SessionManager()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.stop()

    app = FastAPI(title="riskpipe", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.manager = manager

    @app.exception_handler(RiskpipeError)
    async def _riskpipe_error(request: Request, exc: RiskpipeError):
        if isinstance(exc, (ParameterError, ShapeError, ParseError)):
            status = 400
        elif isinstance(exc, NotFoundError):
            status = 404
        elif isinstance(exc, ConflictError):
            status = 409
        else:
            status = 422
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/sessions", status_code=201)
    def create_session(options: dict | None = None):
        return manager.create_session(options)

    @app.post("/sessions/{session_id}/events", status_code=202)
    def post_event(session_id: str, event: dict):
        seq = manager.submit(session_id, event)
        return {"accepted": True, "seq": seq}

    @app.get("/sessions/{session_id}/snapshot")
    def get_snapshot(session_id: str):
        return manager.snapshot(session_id)

    @app.get("/sessions/{session_id}/updates")
    def get_updates(
        session_id: str,
        request: Request,
        after: int = 0,
        max_events: int | None = None,
        timeout_s: float = 30.0,
    ):
        manager._record(session_id)  # 404 before the stream starts
        # Reconnecting EventSource clients resume via the Last-Event-ID
        # header rather than the query parameter.
        header_cursor = request.headers.get("last-event-id")
        if header_cursor is not None:
            try:
                after = max(after, int(header_cursor))
            except ValueError:
                pass
        return StreamingResponse(
            manager.stream(session_id, after=after, max_events=max_events, timeout_s=timeout_s),
            media_type="text/event-stream",
        )

    @app.get("/sessions/{session_id}/ledger.csv")
    def get_ledger(session_id: str):
        return Response(content=manager.ledger_csv(session_id), media_type="text/csv")

    if static_dir is not None:
        static_path = Path(static_dir)
        if static_path.is_dir():
            from fastapi.staticfiles import StaticFiles

            app.mount("/", StaticFiles(directory=static_path, html=True), name="ui")

    return app
