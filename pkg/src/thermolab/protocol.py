"""Session protocol state machine.

A session walks through acclimatization, stimulus, and response exactly once
each, with per-minute capture prompts, a subject-precondition checklist at
the gate, and four environmental checkpoints. Commands validate against the
current state and emit events; the session record is a pure fold over the
event log, so replaying a log reproduces the record bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import date as date_type
from datetime import datetime
from enum import Enum
from typing import Iterable, Optional

from . import events as ev
from .clock import utc
from .errors import InputError, IntegrityError, StateError
from .instruments import FLIR_E6, TESTO_605_H1
from .roi import RoiSet


class EmotionLabel(str, Enum):
    JOY = "joy"
    LOVE = "love"
    HAPPINESS = "happiness"
    SADNESS = "sadness"
    FEAR = "fear"
    ANGER = "anger"


class StimulusKind(str, Enum):
    VIDEO = "video"
    MUSIC = "music"


class PhaseKind(str, Enum):
    ACCLIMATIZATION = "acclimatization"
    STIMULUS = "stimulus"
    RESPONSE = "response"


PHASE_ORDER = (PhaseKind.ACCLIMATIZATION, PhaseKind.STIMULUS, PhaseKind.RESPONSE)


class CaptureRole(str, Enum):
    SCHEDULED = "scheduled"
    PHASE_START = "phase_start"
    PHASE_END = "phase_end"


class EnvCheckpoint(str, Enum):
    START_ACCLIMATIZATION = "start_acclimatization"
    START_STIMULUS = "start_stimulus"
    FINAL_STIMULUS = "final_stimulus"
    FINAL_RESPONSE = "final_response"


class SessionStatus(str, Enum):
    DRAFT = "draft"
    RUNNING = "running"
    COMPLETED = "completed"
    ABORTED = "aborted"


ENV_TEMP_BAND_C = (10.0, 35.0)
ENV_HUMIDITY_BAND_PCT = (10.0, 90.0)
REST_GAP_S = 2 * 3600.0


@dataclass(frozen=True)
class Stimulus:
    kind: StimulusKind
    descriptor: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "descriptor": self.descriptor}

    @classmethod
    def from_dict(cls, d: dict) -> "Stimulus":
        return cls(kind=StimulusKind(d["kind"]), descriptor=d.get("descriptor", ""))


@dataclass(frozen=True)
class ProtocolConfig:
    acclim_min_s: float = 600.0
    acclim_max_s: float = 900.0
    stimulus_min_s: float = 120.0
    stimulus_max_s: float = 600.0
    response_duration_s: float = 600.0
    capture_period_s: float = 60.0
    cadence_tolerance_s: float = 5.0
    subject_camera_distance_m: float = 0.8

    def __post_init__(self):
        if self.acclim_min_s > self.acclim_max_s:
            raise InputError("acclimatization minimum exceeds its maximum")
        if self.stimulus_min_s > self.stimulus_max_s:
            raise InputError("stimulus minimum exceeds its maximum")
        if self.capture_period_s <= 0:
            raise InputError("capture period must be positive")
        if self.cadence_tolerance_s < 0:
            raise InputError("cadence tolerance must be >= 0")
        if self.response_duration_s <= 0:
            raise InputError("response duration must be positive")
        if self.subject_camera_distance_m < FLIR_E6.min_focus_m:
            raise InputError(
                f"subject-camera distance {self.subject_camera_distance_m} m is below "
                f"the camera's minimum focus distance {FLIR_E6.min_focus_m} m")

    def to_dict(self) -> dict:
        return {
            "acclim_min_s": self.acclim_min_s,
            "acclim_max_s": self.acclim_max_s,
            "stimulus_min_s": self.stimulus_min_s,
            "stimulus_max_s": self.stimulus_max_s,
            "response_duration_s": self.response_duration_s,
            "capture_period_s": self.capture_period_s,
            "cadence_tolerance_s": self.cadence_tolerance_s,
            "subject_camera_distance_m": self.subject_camera_distance_m,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        return cls(**{k: float(v) for k, v in d.items()})


CHECKLIST_ITEMS = (
    "hair_tied_back",
    "no_makeup",
    "no_face_cream",
    "no_recent_exercise",
    "no_stimulants_last_hour",
    "informed_consent_signed",
)


@dataclass(frozen=True)
class SubjectChecklist:
    hair_tied_back: bool = False
    no_makeup: bool = False
    no_face_cream: bool = False
    no_recent_exercise: bool = False
    no_stimulants_last_hour: bool = False
    informed_consent_signed: bool = False

    def failed_items(self) -> list[str]:
        return [item for item in CHECKLIST_ITEMS if not getattr(self, item)]

    def to_dict(self) -> dict:
        return {item: getattr(self, item) for item in CHECKLIST_ITEMS}

    @classmethod
    def from_dict(cls, d: dict) -> "SubjectChecklist":
        return cls(**{item: bool(d.get(item, False)) for item in CHECKLIST_ITEMS})

    @classmethod
    def all_confirmed(cls) -> "SubjectChecklist":
        return cls(**{item: True for item in CHECKLIST_ITEMS})


@dataclass(frozen=True)
class SubjectMeta:
    subject_id: Optional[str] = None
    age_years: Optional[int] = None
    gender: Optional[str] = None

    def to_dict(self) -> dict:
        return {"subject_id": self.subject_id, "age_years": self.age_years,
                "gender": self.gender}

    @classmethod
    def from_dict(cls, d: dict) -> "SubjectMeta":
        return cls(
            subject_id=d.get("subject_id"),
            age_years=int(d["age_years"]) if d.get("age_years") is not None else None,
            gender=d.get("gender"),
        )


@dataclass(frozen=True)
class EnvReading:
    checkpoint: EnvCheckpoint
    temp_c: float
    humidity_pct: float
    probe_accuracy_temp_c: float = TESTO_605_H1.accuracy_temp_c
    probe_accuracy_humidity_pct: float = TESTO_605_H1.accuracy_humidity_pct

    def __post_init__(self):
        lo, hi = ENV_TEMP_BAND_C
        if not (lo <= self.temp_c <= hi):
            raise InputError(
                f"room temperature {self.temp_c} C outside plausibility band [{lo}, {hi}] C")
        lo, hi = ENV_HUMIDITY_BAND_PCT
        if not (lo <= self.humidity_pct <= hi):
            raise InputError(
                f"relative humidity {self.humidity_pct} % outside plausibility band "
                f"[{lo}, {hi}] %")

    def to_dict(self) -> dict:
        return {
            "checkpoint": self.checkpoint.value,
            "temp_c": self.temp_c,
            "humidity_pct": self.humidity_pct,
            "probe_accuracy_temp_c": self.probe_accuracy_temp_c,
            "probe_accuracy_humidity_pct": self.probe_accuracy_humidity_pct,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvReading":
        return cls(
            checkpoint=EnvCheckpoint(d["checkpoint"]),
            temp_c=float(d["temp_c"]),
            humidity_pct=float(d["humidity_pct"]),
            probe_accuracy_temp_c=float(d.get("probe_accuracy_temp_c",
                                              TESTO_605_H1.accuracy_temp_c)),
            probe_accuracy_humidity_pct=float(d.get("probe_accuracy_humidity_pct",
                                                    TESTO_605_H1.accuracy_humidity_pct)),
        )


@dataclass(frozen=True)
class Capture:
    time: datetime
    frame_ref: str
    role: CaptureRole
    deviation_s: Optional[float] = None

    def to_dict(self) -> dict:
        return {"time": utc(self.time).isoformat(), "frame_ref": self.frame_ref,
                "role": self.role.value, "deviation_s": self.deviation_s}


@dataclass(frozen=True)
class PhaseRecord:
    kind: PhaseKind
    started: datetime
    ended: Optional[datetime] = None
    captures: tuple[Capture, ...] = ()

    @property
    def open(self) -> bool:
        return self.ended is None

    def duration_s(self) -> Optional[float]:
        if self.ended is None:
            return None
        return (self.ended - self.started).total_seconds()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "started": utc(self.started).isoformat(),
            "ended": utc(self.ended).isoformat() if self.ended else None,
            "captures": [c.to_dict() for c in self.captures],
        }


@dataclass(frozen=True)
class NoteEntry:
    time: datetime
    text: str

    def to_dict(self) -> dict:
        return {"time": utc(self.time).isoformat(), "text": self.text}


@dataclass(frozen=True)
class Session:
    session_id: str
    emotion: EmotionLabel
    stimulus: Stimulus
    date: date_type
    checklist: SubjectChecklist
    config: ProtocolConfig
    subject: Optional[SubjectMeta] = None
    roi_layout: Optional[RoiSet] = None
    phases: tuple[PhaseRecord, ...] = ()
    env: tuple[EnvReading, ...] = ()
    notes: tuple[NoteEntry, ...] = ()
    deviations: tuple[str, ...] = ()
    status: SessionStatus = SessionStatus.DRAFT
    started_at: Optional[datetime] = None
    ended_at: Optional[datetime] = None
    abort_reason: Optional[str] = None
    version: int = 0

    @property
    def open_phase(self) -> Optional[PhaseRecord]:
        if self.phases and self.phases[-1].open:
            return self.phases[-1]
        return None

    def phase(self, kind: PhaseKind) -> Optional[PhaseRecord]:
        for p in self.phases:
            if p.kind == kind:
                return p
        return None

    def env_reading(self, checkpoint: EnvCheckpoint) -> Optional[EnvReading]:
        for r in self.env:
            if r.checkpoint == checkpoint:
                return r
        return None

    @property
    def captures(self) -> list[Capture]:
        return [c for p in self.phases for c in p.captures]

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "emotion": self.emotion.value,
            "stimulus": self.stimulus.to_dict(),
            "date": self.date.isoformat(),
            "subject": self.subject.to_dict() if self.subject else None,
            "checklist": self.checklist.to_dict(),
            "config": self.config.to_dict(),
            "roi_layout": self.roi_layout.to_dicts() if self.roi_layout else None,
            "phases": [p.to_dict() for p in self.phases],
            "env": [r.to_dict() for r in self.env],
            "notes": [n.to_dict() for n in self.notes],
            "deviations": list(self.deviations),
            "status": self.status.value,
            "started_at": utc(self.started_at).isoformat() if self.started_at else None,
            "ended_at": utc(self.ended_at).isoformat() if self.ended_at else None,
            "abort_reason": self.abort_reason,
            "version": self.version,
        }


def _elapsed_s(phase: PhaseRecord, now: datetime) -> float:
    return (now - phase.started).total_seconds()


def _phase_max_s(kind: PhaseKind, config: ProtocolConfig) -> float:
    if kind == PhaseKind.ACCLIMATIZATION:
        return config.acclim_max_s
    if kind == PhaseKind.STIMULUS:
        return config.stimulus_max_s
    return config.response_duration_s


def _require_running(session: Session, action: str) -> PhaseRecord:
    if session.status != SessionStatus.RUNNING:
        raise StateError(f"cannot {action}: session is {session.status.value}")
    phase = session.open_phase
    if phase is None:
        raise StateError(f"cannot {action}: no open phase")
    return phase


# --- command builders: validate against the current state, emit one event ---

def build_start(
    session_id: str,
    emotion: EmotionLabel,
    stimulus: Stimulus,
    checklist: SubjectChecklist,
    config: ProtocolConfig,
    now: datetime,
    date: Optional[date_type] = None,
    subject: Optional[SubjectMeta] = None,
    roi_layout: Optional[RoiSet] = None,
) -> ev.Event:
    failed = checklist.failed_items()
    if failed:
        raise InputError("subject checklist not satisfied: " + ", ".join(failed))
    payload = {
        "session_id": session_id,
        "emotion": emotion.value,
        "stimulus": stimulus.to_dict(),
        "date": (date or utc(now).date()).isoformat(),
        "subject": subject.to_dict() if subject else None,
        "checklist": checklist.to_dict(),
        "config": config.to_dict(),
        "roi_layout": roi_layout.to_dicts() if roi_layout else None,
    }
    return ev.Event(seq=1, time=utc(now), type=ev.SESSION_STARTED, payload=payload)


def build_record_env(session: Session, reading: EnvReading, now: datetime) -> ev.Event:
    phase = _require_running(session, "record an environment reading")
    if session.env_reading(reading.checkpoint) is not None:
        raise StateError(f"checkpoint {reading.checkpoint.value} already recorded")
    allowed: list[EnvCheckpoint] = []
    if phase.kind == PhaseKind.ACCLIMATIZATION:
        allowed = [EnvCheckpoint.START_ACCLIMATIZATION]
    elif phase.kind == PhaseKind.STIMULUS:
        allowed = [EnvCheckpoint.START_STIMULUS]
        if session.env_reading(EnvCheckpoint.START_STIMULUS) is not None:
            allowed = [EnvCheckpoint.FINAL_STIMULUS]
    else:
        allowed = [EnvCheckpoint.FINAL_RESPONSE]
    if reading.checkpoint not in allowed:
        raise StateError(
            f"checkpoint {reading.checkpoint.value} does not match the current "
            f"protocol position (expected {', '.join(a.value for a in allowed)})")
    return ev.Event(seq=session.version + 1, time=utc(now),
                    type=ev.ENV_RECORDED, payload=reading.to_dict())


def build_record_capture(
    session: Session,
    frame_ref: str,
    now: datetime,
    role: CaptureRole = CaptureRole.SCHEDULED,
) -> ev.Event:
    phase = _require_running(session, "record a capture")
    now = utc(now)
    if phase.captures and now <= phase.captures[-1].time:
        raise StateError("capture timestamps within a phase must strictly increase")
    if now < utc(phase.started):
        raise StateError("capture predates the open phase")

    if phase.kind == PhaseKind.ACCLIMATIZATION:
        if role != CaptureRole.SCHEDULED:
            raise StateError(f"{role.value} capture is not part of acclimatization")
        if not phase.captures and session.env_reading(
                EnvCheckpoint.START_ACCLIMATIZATION) is None:
            raise StateError(
                "record the start_acclimatization environment reading before the "
                "first capture")
    else:
        if not phase.captures:
            if role != CaptureRole.PHASE_START:
                raise StateError(
                    f"first {phase.kind.value} capture must be the phase_start image")
        else:
            if role == CaptureRole.PHASE_START:
                raise StateError(f"{phase.kind.value} already has its phase_start image")
            if phase.captures[-1].role == CaptureRole.PHASE_END:
                raise StateError("stimulus end image already recorded")
            if role == CaptureRole.PHASE_END and phase.kind != PhaseKind.STIMULUS:
                raise StateError("phase_end capture only closes the stimulus phase")

    deviation = None
    if role == CaptureRole.SCHEDULED:
        expected = (utc(phase.captures[-1].time) +
                    _period(session)) if phase.captures else utc(phase.started)
        off = (now - expected).total_seconds()
        if abs(off) > session.config.cadence_tolerance_s:
            deviation = off
    payload = {"frame_ref": frame_ref, "role": role.value, "deviation_s": deviation}
    return ev.Event(seq=session.version + 1, time=now,
                    type=ev.CAPTURE_RECORDED, payload=payload)


def _period(session: Session):
    from datetime import timedelta
    return timedelta(seconds=session.config.capture_period_s)


def build_advance_phase(session: Session, now: datetime) -> ev.Event:
    phase = _require_running(session, "advance the phase")
    now = utc(now)
    cfg = session.config
    elapsed = _elapsed_s(phase, now)

    if phase.kind == PhaseKind.ACCLIMATIZATION:
        if elapsed < cfg.acclim_min_s:
            raise StateError(
                f"acclimatization incomplete: {elapsed:.0f} s < {cfg.acclim_min_s:.0f} s "
                "minimum")
        _require_checkpoints(session, [EnvCheckpoint.START_ACCLIMATIZATION])
        _require_captures(phase)
        opened = PhaseKind.STIMULUS
        completed = False
    elif phase.kind == PhaseKind.STIMULUS:
        if elapsed < cfg.stimulus_min_s:
            raise StateError(
                f"stimulus too short: {elapsed:.0f} s < {cfg.stimulus_min_s:.0f} s minimum")
        if elapsed > cfg.stimulus_max_s:
            raise StateError(
                f"stimulus exceeded the {cfg.stimulus_max_s:.0f} s maximum "
                f"({elapsed:.0f} s); abort and rerun")
        _require_checkpoints(session, [EnvCheckpoint.START_STIMULUS,
                                       EnvCheckpoint.FINAL_STIMULUS])
        _require_captures(phase)
        if phase.captures[-1].role != CaptureRole.PHASE_END:
            raise StateError("stimulus end image missing; record a phase_end capture first")
        opened = PhaseKind.RESPONSE
        completed = False
    else:
        if elapsed < cfg.response_duration_s:
            raise StateError(
                f"response incomplete: {elapsed:.0f} s < {cfg.response_duration_s:.0f} s")
        _require_checkpoints(session, [EnvCheckpoint.FINAL_RESPONSE])
        _require_captures(phase)
        opened = None
        completed = True

    payload = {
        "closed": phase.kind.value,
        "opened": opened.value if opened else None,
        "completed": completed,
    }
    return ev.Event(seq=session.version + 1, time=now,
                    type=ev.PHASE_ADVANCED, payload=payload)


def _require_checkpoints(session: Session, checkpoints: Iterable[EnvCheckpoint]):
    missing = [c.value for c in checkpoints if session.env_reading(c) is None]
    if missing:
        raise StateError("missing environment checkpoint: " + ", ".join(missing))


def _require_captures(phase: PhaseRecord, minimum: int = 2):
    if len(phase.captures) < minimum:
        raise StateError(
            f"{phase.kind.value} needs at least {minimum} captures before closing "
            f"(has {len(phase.captures)})")


def build_add_note(session: Session, text: str, now: datetime) -> ev.Event:
    if session.status != SessionStatus.RUNNING:
        raise StateError(f"cannot add a note: session is {session.status.value}")
    if not text.strip():
        raise InputError("note text is empty")
    return ev.Event(seq=session.version + 1, time=utc(now),
                    type=ev.NOTE_ADDED, payload={"text": text})


def build_abort(session: Session, now: datetime, reason: str = "") -> ev.Event:
    if session.status != SessionStatus.RUNNING:
        raise StateError(f"cannot abort: session is {session.status.value}")
    return ev.Event(seq=session.version + 1, time=utc(now),
                    type=ev.SESSION_ABORTED, payload={"reason": reason})


# --- fold ---

def apply_event(session: Optional[Session], event: ev.Event) -> Session:
    if event.type == ev.SESSION_STARTED:
        if session is not None:
            raise IntegrityError("session_started must be the first event")
        p = event.payload
        return Session(
            session_id=p["session_id"],
            emotion=EmotionLabel(p["emotion"]),
            stimulus=Stimulus.from_dict(p["stimulus"]),
            date=date_type.fromisoformat(p["date"]),
            subject=SubjectMeta.from_dict(p["subject"]) if p.get("subject") else None,
            checklist=SubjectChecklist.from_dict(p["checklist"]),
            config=ProtocolConfig.from_dict(p["config"]),
            roi_layout=RoiSet.from_dicts(p["roi_layout"]) if p.get("roi_layout") else None,
            phases=(PhaseRecord(kind=PhaseKind.ACCLIMATIZATION, started=event.time),),
            status=SessionStatus.RUNNING,
            started_at=event.time,
            version=event.seq,
        )
    if session is None:
        raise IntegrityError(f"event {event.type} before session_started")
    if event.seq != session.version + 1:
        raise IntegrityError(
            f"event seq {event.seq} does not follow version {session.version}")

    if event.type == ev.ENV_RECORDED:
        reading = EnvReading.from_dict(event.payload)
        return replace(session, env=session.env + (reading,), version=event.seq)

    if event.type == ev.CAPTURE_RECORDED:
        p = event.payload
        capture = Capture(
            time=event.time,
            frame_ref=p["frame_ref"],
            role=CaptureRole(p["role"]),
            deviation_s=p.get("deviation_s"),
        )
        phase = session.phases[-1]
        phase = replace(phase, captures=phase.captures + (capture,))
        deviations = session.deviations
        if capture.deviation_s is not None:
            deviations = deviations + (
                f"capture {capture.frame_ref} off schedule by "
                f"{capture.deviation_s:+.1f} s",)
        return replace(session, phases=session.phases[:-1] + (phase,),
                       deviations=deviations, version=event.seq)

    if event.type == ev.PHASE_ADVANCED:
        p = event.payload
        closed = replace(session.phases[-1], ended=event.time)
        phases = session.phases[:-1] + (closed,)
        status = session.status
        ended_at = session.ended_at
        if p.get("opened"):
            phases = phases + (PhaseRecord(kind=PhaseKind(p["opened"]), started=event.time),)
        if p.get("completed"):
            status = SessionStatus.COMPLETED
            ended_at = event.time
        return replace(session, phases=phases, status=status, ended_at=ended_at,
                       version=event.seq)

    if event.type == ev.NOTE_ADDED:
        note = NoteEntry(time=event.time, text=event.payload["text"])
        return replace(session, notes=session.notes + (note,), version=event.seq)

    if event.type == ev.SESSION_ABORTED:
        return replace(session, status=SessionStatus.ABORTED, ended_at=event.time,
                       abort_reason=event.payload.get("reason", ""), version=event.seq)

    raise IntegrityError(f"unknown event type: {event.type}")


def replay(event_stream: Iterable[ev.Event]) -> Session:
    session: Optional[Session] = None
    for event in event_stream:
        session = apply_event(session, event)
    if session is None:
        raise IntegrityError("empty event log")
    return session


# --- queries ---

def next_capture_due(session: Session, now: datetime) -> Optional[datetime]:
    """Next scheduled capture instant, or None when the phase awaits a
    transition. Advisory: captures remain recordable past the boundary."""
    if session.status != SessionStatus.RUNNING:
        return None
    phase = session.open_phase
    if phase is None:
        return None
    if phase.kind == PhaseKind.STIMULUS and phase.captures and \
            phase.captures[-1].role == CaptureRole.PHASE_END:
        return None
    if phase.captures:
        candidate = utc(phase.captures[-1].time) + _period(session)
    else:
        candidate = utc(phase.started)
    max_s = _phase_max_s(phase.kind, session.config)
    if (candidate - utc(phase.started)).total_seconds() > max_s:
        return None
    return candidate


def pending_checkpoint(session: Session) -> Optional[EnvCheckpoint]:
    if session.status != SessionStatus.RUNNING:
        return None
    phase = session.open_phase
    if phase is None:
        return None
    if phase.kind == PhaseKind.ACCLIMATIZATION:
        want = EnvCheckpoint.START_ACCLIMATIZATION
    elif phase.kind == PhaseKind.STIMULUS:
        want = (EnvCheckpoint.START_STIMULUS
                if session.env_reading(EnvCheckpoint.START_STIMULUS) is None
                else EnvCheckpoint.FINAL_STIMULUS)
    else:
        want = EnvCheckpoint.FINAL_RESPONSE
    return want if session.env_reading(want) is None else None


def expected_stimulus_captures(duration_s: float) -> int:
    """Start image, one per full minute, and the end image."""
    return int(math.floor(duration_s / 60.0)) + 2


def format_minsec(seconds: Optional[float]) -> str:
    if seconds is None:
        return "-"
    whole = int(round(seconds))
    return f"{whole // 60}'{whole % 60:02d}''"


@dataclass(frozen=True)
class SessionSummary:
    session_id: str
    emotion: EmotionLabel
    stimulus: Stimulus
    date: date_type
    status: SessionStatus
    stimulus_duration_s: Optional[float]
    stimulus_captures: int
    total_captures: int
    expected_stimulus_captures: Optional[int]
    capture_count_mismatch: bool
    captures_per_phase: dict
    env: tuple[EnvReading, ...]
    deviations: tuple[str, ...]
    incomplete: bool

    @property
    def stimulus_duration_text(self) -> str:
        return format_minsec(self.stimulus_duration_s)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "emotion": self.emotion.value,
            "stimulus": self.stimulus.to_dict(),
            "date": self.date.isoformat(),
            "status": self.status.value,
            "stimulus_duration_s": self.stimulus_duration_s,
            "stimulus_duration": self.stimulus_duration_text,
            "stimulus_captures": self.stimulus_captures,
            "total_captures": self.total_captures,
            "expected_stimulus_captures": self.expected_stimulus_captures,
            "capture_count_mismatch": self.capture_count_mismatch,
            "captures_per_phase": self.captures_per_phase,
            "env": [r.to_dict() for r in self.env],
            "deviations": list(self.deviations),
            "incomplete": self.incomplete,
        }


def session_summary(session: Session) -> SessionSummary:
    """The per-session log row: stimulus duration, image counts, env table."""
    if session.status not in (SessionStatus.COMPLETED, SessionStatus.ABORTED):
        raise StateError("summary requires a completed or aborted session")
    stim = session.phase(PhaseKind.STIMULUS)
    duration = stim.duration_s() if stim else None
    stim_count = len(stim.captures) if stim else 0
    expected = expected_stimulus_captures(duration) if duration is not None else None
    per_phase = {p.kind.value: len(p.captures) for p in session.phases}
    return SessionSummary(
        session_id=session.session_id,
        emotion=session.emotion,
        stimulus=session.stimulus,
        date=session.date,
        status=session.status,
        stimulus_duration_s=duration,
        stimulus_captures=stim_count,
        total_captures=sum(per_phase.values()),
        expected_stimulus_captures=expected,
        capture_count_mismatch=(expected is not None and expected != stim_count),
        captures_per_phase=per_phase,
        env=session.env,
        deviations=session.deviations,
        incomplete=(session.status == SessionStatus.ABORTED),
    )
