"""Classify per-phase temperature trajectories and build the summary tables.

A trajectory is judged against the envelope spanned by its endpoints: a
significant interior excursion above it reads as increase-then-decrease (or
a plain increase when the net change is itself significant), symmetrically
below, and otherwise the net endpoint delta decides between increase,
decrease, and stable. Significance is a configurable threshold well above
the camera's noise floor.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Iterable, Mapping

from .errors import InputError, StateError
from .instruments import FLIR_E6
from .protocol import (EmotionLabel, PHASE_ORDER, PhaseKind, Session,
                       SessionStatus, StimulusKind)
from .roi import ROI_ORDER, RoiLabel, RoiSeries

# Slack for threshold comparisons so decimal-entered values (34.3 - 34.2)
# compare as intended in binary floating point.
_EPS = 1e-9

# Endpoint tables report temperatures at 0.1 C resolution; classifying
# endpoint-only data with a coarser threshold would erase reported changes.
ENDPOINT_TAU_C = 0.1


class TrendLabel(str, Enum):
    INCREASE = "increase"
    DECREASE = "decrease"
    INCREASE_THEN_DECREASE = "increase_then_decrease"
    DECREASE_THEN_INCREASE = "decrease_then_increase"
    STABLE = "stable"

    @property
    def table_text(self) -> str:
        return _TABLE_TEXT[self]


_TABLE_TEXT = {
    TrendLabel.INCREASE: "Increase",
    TrendLabel.DECREASE: "Decrease",
    TrendLabel.INCREASE_THEN_DECREASE: "Increase and decrease",
    TrendLabel.DECREASE_THEN_INCREASE: "Decrease and increase",
    TrendLabel.STABLE: "Stable",
}


@dataclass(frozen=True)
class TrendConfig:
    tau_c: float = 0.2

    def __post_init__(self):
        if self.tau_c <= FLIR_E6.netd_c:
            raise InputError(
                f"trend threshold {self.tau_c} C must exceed the camera noise floor "
                f"{FLIR_E6.netd_c} C")

    def to_dict(self) -> dict:
        return {"tau_c": self.tau_c}


TABLE_TREND_CONFIG = TrendConfig(tau_c=ENDPOINT_TAU_C)


@dataclass(frozen=True)
class TrendCall:
    label: TrendLabel
    basis: str  # "full_series" or "endpoint"
    notes: tuple[str, ...] = ()


def classify_trend(series: RoiSeries, cfg: TrendConfig = TrendConfig()) -> TrendLabel:
    return classify_trend_detailed(series, cfg).label


def classify_trend_detailed(series: RoiSeries, cfg: TrendConfig = TrendConfig()) -> TrendCall:
    values = series.values
    if len(values) < 2:
        raise InputError(
            f"{series.label.value}: need at least 2 samples to classify a trend")
    tau = cfg.tau_c
    first, last = values[0], values[-1]
    net = last - first
    interior = values[1:-1]
    env_hi, env_lo = max(first, last), min(first, last)

    peak = 0.0
    dip = 0.0
    peak_idx = dip_idx = None
    for i, v in enumerate(interior):
        if v - env_hi > peak:
            peak, peak_idx = v - env_hi, i
        if env_lo - v > dip:
            dip, dip_idx = env_lo - v, i

    sig_peak = peak >= tau - _EPS
    sig_dip = dip >= tau - _EPS
    notes: list[str] = []
    if sig_peak and sig_dip:
        # both excursions significant: the earlier extremum decides
        label = (TrendLabel.INCREASE_THEN_DECREASE if peak_idx < dip_idx
                 else TrendLabel.DECREASE_THEN_INCREASE)
        notes.append(f"interior excursions +{peak:.2f} C and -{dip:.2f} C")
    elif sig_peak:
        if net < tau - _EPS:
            label = TrendLabel.INCREASE_THEN_DECREASE
        else:
            label = TrendLabel.INCREASE
            notes.append(f"interior excursion +{peak:.2f} C above the endpoints")
    elif sig_dip:
        if net > -(tau - _EPS):
            label = TrendLabel.DECREASE_THEN_INCREASE
        else:
            label = TrendLabel.DECREASE
            notes.append(f"interior excursion -{dip:.2f} C below the endpoints")
    else:
        if net >= tau - _EPS:
            label = TrendLabel.INCREASE
        elif net <= -(tau - _EPS):
            label = TrendLabel.DECREASE
        else:
            label = TrendLabel.STABLE

    basis = "endpoint" if len(values) == 2 else "full_series"
    if basis == "endpoint":
        notes.append("endpoint-only data: compound trends are not observable")
    return TrendCall(label=label, basis=basis, notes=tuple(notes))


@dataclass(frozen=True)
class PhaseDeltaRow:
    emotion: EmotionLabel
    stimulus_kind: StimulusKind
    roi: RoiLabel
    phase: PhaseKind
    start_mean_c: float
    final_mean_c: float

    def rounded(self) -> tuple[float, float]:
        return (round(self.start_mean_c, 1), round(self.final_mean_c, 1))


SeriesByPhase = Mapping[PhaseKind, Mapping[RoiLabel, RoiSeries]]


def phase_delta_table(session: Session, series: SeriesByPhase) -> list[PhaseDeltaRow]:
    """One row per region and phase (12 total): first and last mean of the
    phase, full precision. Rounding to 0.1 C happens only at presentation."""
    if session.status != SessionStatus.COMPLETED:
        raise StateError("phase delta table requires a completed session")
    rows = []
    for roi in ROI_ORDER:
        for phase in PHASE_ORDER:
            per_label = series.get(phase)
            if per_label is None or roi not in per_label:
                raise InputError(
                    f"missing series for {roi.value} in {phase.value}")
            s = per_label[roi]
            if not s.samples:
                raise InputError(f"empty series for {roi.value} in {phase.value}")
            rows.append(PhaseDeltaRow(
                emotion=session.emotion,
                stimulus_kind=session.stimulus.kind,
                roi=roi,
                phase=phase,
                start_mean_c=s.samples[0][1],
                final_mean_c=s.samples[-1][1],
            ))
    return rows


EmotionPhaseSeries = Mapping[EmotionLabel, Mapping[PhaseKind, RoiSeries]]


def endpoint_series_from_rows(
    rows: Iterable[PhaseDeltaRow],
    roi: RoiLabel = RoiLabel.FOREHEAD,
) -> EmotionPhaseSeries:
    """Two-sample series per emotion and phase from table-style start/final
    values, on a synthetic timeline."""
    epoch = datetime(2000, 1, 1, tzinfo=timezone.utc)
    out: dict[EmotionLabel, dict[PhaseKind, RoiSeries]] = {}
    for row in rows:
        if row.roi != roi:
            continue
        t0 = epoch + timedelta(minutes=10 * PHASE_ORDER.index(row.phase))
        out.setdefault(row.emotion, {})[row.phase] = RoiSeries(
            label=roi, phase=row.phase,
            samples=((t0, row.start_mean_c), (t0 + timedelta(minutes=1), row.final_mean_c)))
    return out


@dataclass(frozen=True)
class ComparisonRow:
    emotion: EmotionLabel
    phase: PhaseKind
    video: TrendCall
    music: TrendCall


def compare_stimuli(
    video: EmotionPhaseSeries,
    music: EmotionPhaseSeries,
    cfg: TrendConfig = TABLE_TREND_CONFIG,
) -> list[ComparisonRow]:
    """Per emotion and phase, the trend label under each stimulus kind.

    Uses full series where available and endpoint pairs otherwise; the basis
    is carried on each call so endpoint-only cells can be read accordingly.
    """
    v_emotions, m_emotions = set(video), set(music)
    if v_emotions != m_emotions:
        odd = v_emotions.symmetric_difference(m_emotions)
        raise InputError(
            "emotions present on one side only: "
            + ", ".join(sorted(e.value for e in odd)))
    rows = []
    for emotion in EmotionLabel:
        if emotion not in video:
            continue
        for phase in PHASE_ORDER:
            if phase not in video[emotion] or phase not in music[emotion]:
                raise InputError(
                    f"{emotion.value}: missing {phase.value} series on one side")
            rows.append(ComparisonRow(
                emotion=emotion,
                phase=phase,
                video=classify_trend_detailed(video[emotion][phase], cfg),
                music=classify_trend_detailed(music[emotion][phase], cfg),
            ))
    return rows


def average_series(per_label: Mapping[RoiLabel, RoiSeries], phase: PhaseKind) -> RoiSeries:
    """Mean-of-regions series ("roi_average"): the four series must share
    their capture timeline."""
    labels = [l for l in ROI_ORDER if l in per_label]
    if len(labels) != 4:
        raise InputError("roi_average needs all four region series")
    timelines = {tuple(t for t, _ in per_label[l].samples) for l in labels}
    if len(timelines) != 1:
        raise InputError("region series are not on a shared capture timeline")
    times = next(iter(timelines))
    samples = tuple(
        (t, sum(per_label[l].samples[i][1] for l in labels) / 4.0)
        for i, t in enumerate(times))
    return RoiSeries(label=RoiLabel.FOREHEAD, phase=phase, samples=samples)


@dataclass(frozen=True)
class NoseDivergenceRow:
    phase: PhaseKind
    nose: TrendLabel
    others: dict
    modal_other: TrendLabel
    divergent: bool


def nose_divergence(series: SeriesByPhase,
                    cfg: TrendConfig = TABLE_TREND_CONFIG) -> list[NoseDivergenceRow]:
    """Flag phases where the nose trend departs from the modal trend of the
    other three regions."""
    rows = []
    for phase in PHASE_ORDER:
        per_label = series.get(phase)
        if per_label is None or any(l not in per_label for l in ROI_ORDER):
            raise InputError(f"{phase.value}: all four region series are required")
        labels = {l: classify_trend(per_label[l], cfg) for l in ROI_ORDER}
        others = {l: labels[l] for l in ROI_ORDER if l != RoiLabel.NOSE}
        counts = Counter(others.values())
        top = max(counts.values())
        # deterministic tie-break: first label in enum order among the most common
        modal = next(lab for lab in TrendLabel if counts.get(lab) == top)
        rows.append(NoseDivergenceRow(
            phase=phase,
            nose=labels[RoiLabel.NOSE],
            others={l.value: lab.value for l, lab in others.items()},
            modal_other=modal,
            divergent=labels[RoiLabel.NOSE] != modal,
        ))
    return rows
