"""Local HTTP service exposing live session state to the conductor console.

Commands are serialized per session and idempotent by request id; state
versions increase by exactly one per applied command. The event stream is
newline-delimited JSON, one state-version record per line.
"""

from __future__ import annotations

import io
import json
import tempfile
import time
import zipfile
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response, StreamingResponse
from fastapi.staticfiles import StaticFiles

from . import events as ev
from . import tables
from .analysis import SessionAnalysis, analyze_session
from .bundle import export_bundle
from .errors import InputError, IntegrityError, NotFoundError, StateError
from .render import RenderSpec, default_scale, render_ppm
from .schemas import (AdvanceClockRequest, ClockResponse, CommandRequest,
                      CommandResponse, RenderIndexEntry, RenderIndexResponse,
                      SessionCreatedResponse, SessionListEntry,
                      StartSessionRequest, layout_to_domain)
from .store import SessionStore
from .trends import TrendConfig
from .clock import utc

STREAM_POLL_S = 0.1


def create_app(store: SessionStore, ui_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="thermolab conductor service", version="0.1.0")
    analysis_cache: dict[tuple[str, int], tuple[SessionAnalysis, RenderSpec]] = {}

    def error_response(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=status,
                            content={"code": code, "message": message})

    @app.exception_handler(NotFoundError)
    async def _not_found(_req: Request, exc: NotFoundError):
        return error_response(404, "not_found", str(exc))

    @app.exception_handler(InputError)
    async def _input_error(_req: Request, exc: InputError):
        return error_response(400, "invalid_input", str(exc))

    @app.exception_handler(StateError)
    async def _state_error(_req: Request, exc: StateError):
        return error_response(409, "protocol_conflict", str(exc))

    @app.exception_handler(IntegrityError)
    async def _integrity_error(_req: Request, exc: IntegrityError):
        return error_response(409, "integrity_error", str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/clock", response_model=ClockResponse)
    def clock():
        return ClockResponse(now=utc(store.clock.now()).isoformat(),
                             simulated=store.simulated)

    @app.post("/clock/advance", response_model=ClockResponse)
    def advance_clock(body: AdvanceClockRequest):
        store.advance_clock(body.seconds)
        return clock()

    @app.get("/sessions", response_model=list[SessionListEntry])
    def list_sessions():
        out = []
        for sid in store.session_ids():
            s = store.session(sid)
            out.append(SessionListEntry(
                session_id=sid, emotion=s.emotion.value,
                stimulus=s.stimulus.to_dict(), status=s.status.value,
                date=s.date.isoformat(), version=s.version))
        return out

    @app.post("/sessions", response_model=SessionCreatedResponse)
    def start_session(body: StartSessionRequest):
        outcome = store.start_session(
            emotion=body.emotion,
            stimulus=body.stimulus(),
            checklist=body.checklist.to_domain(),
            config=body.config.to_domain(),
            date=body.date,
            subject=body.subject.to_domain() if body.subject else None,
            roi_layout=layout_to_domain(body.roi_layout),
            session_id=body.session_id,
            request_id=body.request_id,
        )
        return SessionCreatedResponse(
            session_id=outcome.session_id, version=outcome.version,
            status=outcome.status.value, warnings=list(outcome.warnings))

    @app.post("/sessions/{session_id}/commands", response_model=CommandResponse)
    def submit_command(session_id: str, body: CommandRequest):
        outcome = dispatch_command(store, session_id, body)
        return CommandResponse(
            session_id=outcome.session_id, version=outcome.version,
            status=outcome.status.value, warnings=list(outcome.warnings))

    @app.get("/sessions/{session_id}/state")
    def live_state(session_id: str):
        return store.live_state(session_id).to_dict()

    @app.get("/sessions/{session_id}/summary")
    def summary(session_id: str):
        return store.summary(session_id).to_dict()

    @app.get("/sessions/{session_id}/log")
    def event_log(session_id: str):
        return PlainTextResponse(store.events_text(session_id))

    @app.get("/sessions/{session_id}/events")
    def event_stream(session_id: str, since: int = 0, follow: bool = False):
        store.session(session_id)  # 404 before the stream starts

        def generate():
            cursor = since
            while True:
                for event in store.events(session_id, after=cursor):
                    cursor = event.seq
                    record = {
                        "version": event.seq,
                        "time": utc(event.time).isoformat(),
                        "type": event.type,
                        "payload": event.payload,
                    }
                    yield json.dumps(record, sort_keys=True,
                                     separators=(",", ":")) + "\n"
                status = store.session(session_id).status.value
                if not follow or status in ("completed", "aborted"):
                    return
                time.sleep(STREAM_POLL_S)

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    def _analysis_for(session_id: str) -> tuple[SessionAnalysis, RenderSpec]:
        session = store.session(session_id)
        key = (session_id, session.version)
        if key not in analysis_cache:
            analysis = analyze_session(store.session_dir(session_id), session,
                                       TrendConfig())
            spec = default_scale(d.tmap for d in analysis.decoded)
            analysis_cache[key] = (analysis, spec)
        return analysis_cache[key]

    @app.get("/sessions/{session_id}/renders.json", response_model=RenderIndexResponse)
    def render_index(session_id: str):
        analysis, spec = _analysis_for(session_id)
        return RenderIndexResponse(
            scale_min_c=spec.scale_min_c,
            scale_max_c=spec.scale_max_c,
            renders=[RenderIndexEntry(
                seq=dc.seq, path=f"renders/{dc.seq:04d}.ppm",
                time=utc(dc.capture.time).isoformat(), phase=dc.phase.value)
                for dc in analysis.decoded],
            roi_layout=[b for b in analysis.layout.to_dicts()],
        )

    @app.get("/sessions/{session_id}/renders/{seq}.ppm")
    def render_image(session_id: str, seq: int):
        analysis, spec = _analysis_for(session_id)
        for dc in analysis.decoded:
            if dc.seq == seq:
                return Response(render_ppm(dc.tmap, spec),
                                media_type="image/x-portable-pixmap")
        raise NotFoundError(f"no capture with sequence {seq}")

    @app.get("/sessions/{session_id}/analysis.json")
    def analysis_document(session_id: str):
        analysis, spec = _analysis_for(session_id)
        return {
            "deltas": [
                {"emotion": row.emotion.value, "stimulus": row.stimulus_kind.value,
                 "roi": row.roi.value, "phase": row.phase.value,
                 "start_mean_c": row.start_mean_c, "final_mean_c": row.final_mean_c,
                 "start_display": round(row.start_mean_c, 1),
                 "final_display": round(row.final_mean_c, 1)}
                for row in analysis.delta_rows
            ],
            "trends": [
                {"emotion": emotion.value, "stimulus": kind.value, "roi": roi.value,
                 "phase": phase.value, "label": call.label.value,
                 "label_text": call.label.table_text, "basis": call.basis,
                 "notes": list(call.notes)}
                for emotion, kind, roi, phase, call in analysis.trend_rows
            ],
            "nose_divergence": [
                {"phase": row.phase.value, "nose": row.nose.value,
                 "modal_other": row.modal_other.value, "others": row.others,
                 "divergent": row.divergent}
                for row in analysis.nose_report
            ],
            "render_scale": spec.to_dict(),
            "roi_layout": analysis.layout.to_dicts(),
        }

    @app.get("/sessions/{session_id}/tables/{name}")
    def table(session_id: str, name: str):
        analysis, _spec = _analysis_for(session_id)
        session = store.session(session_id)
        if name == "deltas.csv":
            body = tables.deltas_csv(analysis.delta_rows)
        elif name == "trends.csv":
            body = tables.trends_csv(analysis.trend_rows)
        elif name == "stats.csv":
            body = tables.stats_csv(analysis.stats)
        elif name == "comparison.csv":
            body = tables.one_sided_comparison_csv(
                session.stimulus.kind,
                [(e, p, call) for (e, _k, roi, p, call) in analysis.trend_rows
                 if roi.value == "forehead"])
        elif name == "nose_divergence.csv":
            body = tables.nose_csv(analysis.nose_report)
        else:
            raise NotFoundError(f"unknown table: {name}")
        return PlainTextResponse(body, media_type="text/csv")

    @app.get("/sessions/{session_id}/bundle.zip")
    def bundle_zip(session_id: str):
        with tempfile.TemporaryDirectory() as tmp:
            dest = Path(tmp) / "bundle"
            export_bundle(store.session_dir(session_id), dest)
            buf = io.BytesIO()
            with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
                for path in sorted(dest.rglob("*")):
                    if path.is_file():
                        info = zipfile.ZipInfo(str(path.relative_to(dest)),
                                               date_time=(1980, 1, 1, 0, 0, 0))
                        zf.writestr(info, path.read_bytes())
            return Response(
                buf.getvalue(), media_type="application/zip",
                headers={"Content-Disposition":
                         f'attachment; filename="{session_id}-bundle.zip"'})

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def dispatch_command(store: SessionStore, session_id: str, body: CommandRequest):
    from .protocol import CaptureRole

    if body.verb == "record_env":
        if body.checkpoint is None or body.temp_c is None or body.humidity_pct is None:
            raise InputError("record_env needs checkpoint, temp_c, and humidity_pct")
        return store.record_env(session_id, body.checkpoint, body.temp_c,
                                body.humidity_pct, request_id=body.request_id)
    if body.verb == "confirm_capture":
        return store.record_capture(
            session_id, role=body.role or CaptureRole.SCHEDULED,
            frame_ref=body.frame_ref, request_id=body.request_id)
    if body.verb == "advance_phase":
        return store.advance_phase(session_id, request_id=body.request_id)
    if body.verb == "note":
        if not body.text:
            raise InputError("note needs text")
        return store.add_note(session_id, body.text, request_id=body.request_id)
    if body.verb == "abort":
        return store.abort(session_id, reason=body.reason or "",
                           request_id=body.request_id)
    raise InputError(f"unknown verb: {body.verb}")
