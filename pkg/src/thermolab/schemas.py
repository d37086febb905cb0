"""Request and response models for the local conductor service."""

from __future__ import annotations

from datetime import date
from typing import Literal, Optional

from pydantic import BaseModel, Field

from .protocol import (CaptureRole, EmotionLabel, EnvCheckpoint, ProtocolConfig,
                       StimulusKind, SubjectChecklist, SubjectMeta, Stimulus)
from .roi import RoiSet


class ChecklistModel(BaseModel):
    hair_tied_back: bool = False
    no_makeup: bool = False
    no_face_cream: bool = False
    no_recent_exercise: bool = False
    no_stimulants_last_hour: bool = False
    informed_consent_signed: bool = False

    def to_domain(self) -> SubjectChecklist:
        return SubjectChecklist(**self.model_dump())


class SubjectModel(BaseModel):
    subject_id: Optional[str] = None
    age_years: Optional[int] = None
    gender: Optional[str] = None

    def to_domain(self) -> SubjectMeta:
        return SubjectMeta(**self.model_dump())


class ConfigModel(BaseModel):
    acclim_min_s: float = 600.0
    acclim_max_s: float = 900.0
    stimulus_min_s: float = 120.0
    stimulus_max_s: float = 600.0
    response_duration_s: float = 600.0
    capture_period_s: float = 60.0
    cadence_tolerance_s: float = 5.0
    subject_camera_distance_m: float = 0.8

    def to_domain(self) -> ProtocolConfig:
        return ProtocolConfig(**self.model_dump())


class RoiBoxModel(BaseModel):
    label: str
    x: int
    y: int
    w: int
    h: int


def layout_to_domain(boxes: Optional[list[RoiBoxModel]]) -> Optional[RoiSet]:
    if not boxes:
        return None
    return RoiSet.from_dicts([b.model_dump() for b in boxes])


class StartSessionRequest(BaseModel):
    request_id: str
    emotion: EmotionLabel
    stimulus_kind: StimulusKind
    stimulus_descriptor: str = ""
    date: Optional[date] = None
    subject: Optional[SubjectModel] = None
    checklist: ChecklistModel = Field(default_factory=ChecklistModel)
    config: ConfigModel = Field(default_factory=ConfigModel)
    roi_layout: Optional[list[RoiBoxModel]] = None
    session_id: Optional[str] = None

    def stimulus(self) -> Stimulus:
        return Stimulus(kind=self.stimulus_kind, descriptor=self.stimulus_descriptor)


CommandVerb = Literal["record_env", "confirm_capture", "advance_phase", "abort", "note"]


class CommandRequest(BaseModel):
    request_id: str
    verb: CommandVerb
    # record_env
    checkpoint: Optional[EnvCheckpoint] = None
    temp_c: Optional[float] = None
    humidity_pct: Optional[float] = None
    # confirm_capture
    role: Optional[CaptureRole] = None
    frame_ref: Optional[str] = None
    # note / abort
    text: Optional[str] = None
    reason: Optional[str] = None


class CommandResponse(BaseModel):
    session_id: str
    version: int
    status: str
    warnings: list[str] = []


class SessionCreatedResponse(CommandResponse):
    pass


class ErrorBody(BaseModel):
    code: str
    message: str


class ClockResponse(BaseModel):
    now: str
    simulated: bool


class AdvanceClockRequest(BaseModel):
    seconds: float


class SessionListEntry(BaseModel):
    session_id: str
    emotion: str
    stimulus: dict
    status: str
    date: str
    version: int


class RenderIndexEntry(BaseModel):
    seq: int
    path: str
    time: str
    phase: str


class RenderIndexResponse(BaseModel):
    scale_min_c: float
    scale_max_c: float
    renders: list[RenderIndexEntry]
    roi_layout: list[RoiBoxModel]
