"""Persistent session store with a serialized command stream per session.

Layout on disk, one directory per session:

    <root>/<session_id>/events.log        append-only protocol log (truth)
    <root>/<session_id>/frames/NNNN.raw   raw captures (+ .meta sidecars)
    <root>/<session_id>/maps/NNNN.csv     pre-calibrated captures

All mutating commands for one session run under its lock and append exactly
one event; the version counter is the last event's sequence number. Reads
see consistent snapshots. Duplicate request ids replay the original outcome
without re-applying anything.
"""

from __future__ import annotations

import shutil
import threading
from dataclasses import dataclass, field
from datetime import date as date_type
from datetime import datetime
from pathlib import Path
from typing import Optional

from . import events as ev
from . import frameio, protocol
from .clock import Clock, SimulatedClock, SystemClock, utc
from .errors import InputError, IntegrityError, NotFoundError, StateError
from .protocol import (CaptureRole, EmotionLabel, EnvCheckpoint, EnvReading,
                       PhaseKind, ProtocolConfig, REST_GAP_S, Session,
                       SessionStatus, Stimulus, SubjectChecklist, SubjectMeta)
from .radiometry import RadiometricFrame, TemperatureMap, raw_to_temperature
from .roi import RoiSet, default_roi_layout, extract_stats


@dataclass(frozen=True)
class CommandOutcome:
    session_id: str
    version: int
    status: SessionStatus
    applied: bool = True
    warnings: tuple[str, ...] = ()


@dataclass
class LiveState:
    """Snapshot a conductor UI needs to drive one session."""

    session_id: str
    version: int
    status: str
    emotion: str
    stimulus: dict
    server_time: str
    phase: Optional[str] = None
    phase_started: Optional[str] = None
    phase_elapsed_s: Optional[float] = None
    phase_min_s: Optional[float] = None
    phase_max_s: Optional[float] = None
    next_capture_due: Optional[str] = None
    seconds_to_next_capture: Optional[float] = None
    pending_checkpoint: Optional[str] = None
    advance_blocked_reason: Optional[str] = None
    captures_per_phase: dict = field(default_factory=dict)
    total_captures: int = 0
    recorded_checkpoints: list = field(default_factory=list)
    deviations: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    latest_stats: Optional[dict] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _phase_bounds(kind: PhaseKind, cfg: ProtocolConfig) -> tuple[float, float]:
    if kind == PhaseKind.ACCLIMATIZATION:
        return cfg.acclim_min_s, cfg.acclim_max_s
    if kind == PhaseKind.STIMULUS:
        return cfg.stimulus_min_s, cfg.stimulus_max_s
    return cfg.response_duration_s, cfg.response_duration_s


class SessionStore:
    def __init__(self, root: Path | str, clock: Optional[Clock] = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.clock = clock or SystemClock()
        self._registry_lock = threading.Lock()
        self._locks: dict[str, threading.RLock] = {}
        self._sessions: dict[str, Session] = {}
        self._outcomes: dict[str, CommandOutcome] = {}
        self._stats_cache: dict[tuple[str, str], dict] = {}

    # -- plumbing -----------------------------------------------------------

    @property
    def simulated(self) -> bool:
        return isinstance(self.clock, SimulatedClock)

    def advance_clock(self, seconds: float) -> datetime:
        if not self.simulated:
            raise StateError("store runs on the system clock; nothing to advance")
        return self.clock.advance(seconds)

    def _lock_for(self, session_id: str) -> threading.RLock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.RLock())

    def session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def _log_path(self, session_id: str) -> Path:
        return self.session_dir(session_id) / "events.log"

    def session_ids(self) -> list[str]:
        return sorted(
            p.parent.name for p in self.root.glob("*/events.log"))

    def session(self, session_id: str) -> Session:
        with self._lock_for(session_id):
            cached = self._sessions.get(session_id)
            if cached is not None:
                return cached
            log_path = self._log_path(session_id)
            if not log_path.exists():
                raise NotFoundError(f"unknown session: {session_id}")
            session = protocol.replay(
                ev.parse_log(log_path.read_text(encoding="utf-8")))
            self._sessions[session_id] = session
            return session

    def events(self, session_id: str, after: int = 0) -> list[ev.Event]:
        """Events past a version. A malformed final line (an append racing
        this read) is left for the next poll; anything else is corruption."""
        log_path = self._log_path(session_id)
        if not log_path.exists():
            raise NotFoundError(f"unknown session: {session_id}")
        lines = log_path.read_text(encoding="utf-8").splitlines()
        out = []
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                event = ev.event_from_line(line)
            except IntegrityError:
                if i == len(lines) - 1:
                    break
                raise
            if event.seq > after:
                out.append(event)
        return out

    def events_text(self, session_id: str) -> str:
        log_path = self._log_path(session_id)
        if not log_path.exists():
            raise NotFoundError(f"unknown session: {session_id}")
        return log_path.read_text(encoding="utf-8")

    def _append(self, session_id: str, event: ev.Event, session: Session):
        log_path = self._log_path(session_id)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        with log_path.open("a", encoding="utf-8") as fh:
            fh.write(ev.event_to_line(event) + "\n")
        self._sessions[session_id] = session

    def _replay_outcome(self, request_id: Optional[str]) -> Optional[CommandOutcome]:
        if request_id and request_id in self._outcomes:
            return self._outcomes[request_id]
        return None

    def _remember(self, request_id: Optional[str], outcome: CommandOutcome) -> CommandOutcome:
        if request_id:
            self._outcomes[request_id] = outcome
        return outcome

    def _next_session_id(self) -> str:
        taken = set(self.session_ids()) | set(self._sessions)
        n = len(taken) + 1
        while f"s{n:04d}" in taken:
            n += 1
        return f"s{n:04d}"

    # -- commands ------------------------------------------------------------

    def start_session(
        self,
        *,
        emotion: EmotionLabel,
        stimulus: Stimulus,
        checklist: SubjectChecklist,
        config: Optional[ProtocolConfig] = None,
        date: Optional[date_type] = None,
        subject: Optional[SubjectMeta] = None,
        roi_layout: Optional[RoiSet] = None,
        session_id: Optional[str] = None,
        request_id: Optional[str] = None,
    ) -> CommandOutcome:
        with self._registry_lock:
            replayed = self._replay_outcome(request_id)
            if replayed:
                return replayed
        config = config or ProtocolConfig()
        now = self.clock.now()
        warnings = self._rest_gap_warnings(subject, now)
        with self._registry_lock:
            sid = session_id or self._next_session_id()
            if self._log_path(sid).exists() or sid in self._sessions:
                raise InputError(f"session id already in use: {sid}")
            event = protocol.build_start(
                session_id=sid, emotion=emotion, stimulus=stimulus,
                checklist=checklist, config=config, now=now, date=date,
                subject=subject, roi_layout=roi_layout)
            session = protocol.apply_event(None, event)
            self.session_dir(sid).mkdir(parents=True, exist_ok=True)
            self._append(sid, event, session)
            outcome = CommandOutcome(session_id=sid, version=session.version,
                                     status=session.status, warnings=tuple(warnings))
            return self._remember(request_id, outcome)

    def _rest_gap_warnings(self, subject: Optional[SubjectMeta], now: datetime) -> list[str]:
        if subject is None or subject.subject_id is None:
            return []
        warnings = []
        for sid in self.session_ids():
            try:
                other = self.session(sid)
            except Exception:
                continue
            if other.subject is None or other.subject.subject_id != subject.subject_id:
                continue
            reference = other.ended_at or other.started_at
            if reference is None:
                continue
            gap = (utc(now) - utc(reference)).total_seconds()
            if 0 <= gap < REST_GAP_S:
                warnings.append(
                    f"subject {subject.subject_id} finished session {sid} "
                    f"{gap / 60:.0f} min ago; the protocol asks for a two-hour rest")
        return warnings

    def _apply(self, session_id: str, build, request_id: Optional[str]) -> CommandOutcome:
        with self._lock_for(session_id):
            replayed = self._replay_outcome(request_id)
            if replayed:
                return replayed
            session = self.session(session_id)
            event = build(session, self.clock.now())
            updated = protocol.apply_event(session, event)
            self._append(session_id, event, updated)
            outcome = CommandOutcome(session_id=session_id, version=updated.version,
                                     status=updated.status)
            return self._remember(request_id, outcome)

    def record_env(self, session_id: str, checkpoint: EnvCheckpoint,
                   temp_c: float, humidity_pct: float,
                   request_id: Optional[str] = None) -> CommandOutcome:
        reading = EnvReading(checkpoint=checkpoint, temp_c=temp_c,
                             humidity_pct=humidity_pct)
        return self._apply(
            session_id,
            lambda s, now: protocol.build_record_env(s, reading, now),
            request_id)

    def record_capture(
        self,
        session_id: str,
        *,
        role: CaptureRole = CaptureRole.SCHEDULED,
        frame_ref: Optional[str] = None,
        src_path: Optional[Path | str] = None,
        frame: Optional[RadiometricFrame] = None,
        grid: Optional[TemperatureMap] = None,
        request_id: Optional[str] = None,
    ) -> CommandOutcome:
        """Record a capture, optionally ingesting its image.

        Exactly one source may be given: an existing ref, a file to copy in
        (raw or grid, sidecar comes along), an in-memory frame, or an
        in-memory grid. With no source the ref is allocated and the file may
        arrive later.
        """
        sources = [x for x in (frame_ref, src_path, frame, grid) if x is not None]
        if len(sources) > 1:
            raise InputError("give at most one capture source")
        with self._lock_for(session_id):
            replayed = self._replay_outcome(request_id)
            if replayed:
                return replayed
            session = self.session(session_id)
            ref = frame_ref or self._ingest(session, session_id, src_path, frame, grid)
            outcome = self._apply(
                session_id,
                lambda s, now: protocol.build_record_capture(s, ref, now, role),
                request_id)
            self._stats_cache.pop((session_id, ref), None)
            return outcome

    def ingest_capture_source(self, session_id: str, *,
                              src_path: Optional[Path | str] = None,
                              frame: Optional[RadiometricFrame] = None,
                              grid: Optional[TemperatureMap] = None) -> str:
        """Place a capture image into the session ahead of confirming it;
        returns the frame_ref to pass with the capture command."""
        with self._lock_for(session_id):
            session = self.session(session_id)
            return self._ingest(session, session_id, src_path, frame, grid)

    def _ingest(self, session: Session, session_id: str,
                src_path, frame, grid) -> str:
        seq = len(session.captures) + 1
        sdir = self.session_dir(session_id)
        now = self.clock.now()
        if src_path is not None:
            src = Path(src_path)
            if not src.exists():
                raise InputError(f"capture source not found: {src}")
            if src.suffix == frameio.RAW_SUFFIX:
                ref = f"frames/{seq:04d}.raw"
            elif src.suffix == frameio.GRID_SUFFIX:
                ref = f"maps/{seq:04d}.csv"
            else:
                raise InputError(f"unsupported capture format: {src.suffix}")
            target = sdir / ref
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(src, target)
            sidecar = src.with_suffix(frameio.META_SUFFIX)
            if sidecar.exists():
                shutil.copyfile(sidecar, target.with_suffix(frameio.META_SUFFIX))
            return ref
        if frame is not None:
            ref = f"frames/{seq:04d}.raw"
            frameio.write_frame(sdir / ref, frame)
            return ref
        if grid is not None:
            ref = f"maps/{seq:04d}.csv"
            frameio.write_temperature_grid(sdir / ref, grid, timestamp=now,
                                           sequence_index=seq)
            return ref
        return f"frames/{seq:04d}.raw"

    def advance_phase(self, session_id: str,
                      request_id: Optional[str] = None) -> CommandOutcome:
        return self._apply(session_id, protocol.build_advance_phase, request_id)

    def add_note(self, session_id: str, text: str,
                 request_id: Optional[str] = None) -> CommandOutcome:
        return self._apply(
            session_id,
            lambda s, now: protocol.build_add_note(s, text, now),
            request_id)

    def abort(self, session_id: str, reason: str = "",
              request_id: Optional[str] = None) -> CommandOutcome:
        return self._apply(
            session_id,
            lambda s, now: protocol.build_abort(s, now, reason),
            request_id)

    # -- queries -------------------------------------------------------------

    def live_state(self, session_id: str) -> LiveState:
        with self._lock_for(session_id):
            session = self.session(session_id)
            now = self.clock.now()
            state = LiveState(
                session_id=session_id,
                version=session.version,
                status=session.status.value,
                emotion=session.emotion.value,
                stimulus=session.stimulus.to_dict(),
                server_time=utc(now).isoformat(),
                captures_per_phase={p.kind.value: len(p.captures)
                                    for p in session.phases},
                total_captures=len(session.captures),
                recorded_checkpoints=[r.checkpoint.value for r in session.env],
                deviations=list(session.deviations),
                notes=[n.to_dict() for n in session.notes],
            )
            phase = session.open_phase
            if phase is not None:
                lo, hi = _phase_bounds(phase.kind, session.config)
                state.phase = phase.kind.value
                state.phase_started = utc(phase.started).isoformat()
                state.phase_elapsed_s = (utc(now) - utc(phase.started)).total_seconds()
                state.phase_min_s = lo
                state.phase_max_s = hi
                due = protocol.next_capture_due(session, now)
                if due is not None:
                    state.next_capture_due = utc(due).isoformat()
                    state.seconds_to_next_capture = (utc(due) - utc(now)).total_seconds()
                pending = protocol.pending_checkpoint(session)
                state.pending_checkpoint = pending.value if pending else None
                try:
                    protocol.build_advance_phase(session, now)
                except StateError as exc:
                    state.advance_blocked_reason = str(exc)
            state.latest_stats = self._latest_stats(session_id, session)
            return state

    def _latest_stats(self, session_id: str, session: Session) -> Optional[dict]:
        captures = session.captures
        for capture in reversed(captures):
            path = self.session_dir(session_id) / capture.frame_ref
            if not path.exists():
                continue
            key = (session_id, capture.frame_ref)
            if key in self._stats_cache:
                return self._stats_cache[key]
            try:
                if capture.frame_ref.endswith(frameio.RAW_SUFFIX):
                    tmap, _ = raw_to_temperature(frameio.read_frame(path))
                else:
                    tmap = frameio.read_temperature_grid(path)
                layout = session.roi_layout or default_roi_layout(tmap.width, tmap.height)
                stats = extract_stats(tmap, layout)
            except InputError:
                return None
            result = {
                "frame_ref": capture.frame_ref,
                "time": utc(capture.time).isoformat(),
                "regions": {
                    s.label.value: {
                        "min_c": s.min_c, "max_c": s.max_c, "mean_c": s.mean_c,
                        "valid_pixel_fraction": s.valid_pixel_fraction,
                    } for s in stats
                },
            }
            self._stats_cache[key] = result
            return result
        return None

    def summary(self, session_id: str) -> protocol.SessionSummary:
        return protocol.session_summary(self.session(session_id))
