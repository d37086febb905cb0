"""Pipeline from a conducted session to series, tables, and reports.

Works from the session directory: the event log names each capture's frame
file (raw radiometric or pre-calibrated grid); both ingestion paths yield
identical series because statistics always run on decoded temperatures and
series timestamps come from the protocol capture instants.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import timedelta
from pathlib import Path
from typing import Optional

from . import frameio
from .errors import InputError
from .protocol import Capture, PhaseKind, Session
from .radiometry import TemperatureMap, raw_to_temperature
from .roi import RoiSet, RoiStats, build_series, default_roi_layout, extract_stats
from .trends import (SeriesByPhase, TrendCall, TrendConfig, PhaseDeltaRow,
                     classify_trend_detailed, nose_divergence, phase_delta_table)


@dataclass(frozen=True)
class DecodedCapture:
    seq: int  # 1-based capture index across the session
    phase: PhaseKind
    capture: Capture
    tmap: TemperatureMap
    invalid_pixels: int


def load_capture_map(session_dir: Path, capture: Capture) -> tuple[TemperatureMap, int]:
    """Decode one capture's file. Series timestamps are the protocol capture
    instants, so the map timestamp is overridden accordingly."""
    ref = capture.frame_ref
    path = session_dir / ref
    if ref.endswith(frameio.RAW_SUFFIX):
        frame = frameio.read_frame(path)
        tmap, invalid = raw_to_temperature(frame)
    elif ref.endswith(frameio.GRID_SUFFIX):
        tmap = frameio.read_temperature_grid(path)
        invalid = int((~tmap.valid_mask).sum())
    else:
        raise InputError(f"capture {ref}: unrecognized frame format")
    return replace(tmap, source_timestamp=capture.time), invalid


def decode_session(session_dir: Path, session: Session) -> list[DecodedCapture]:
    decoded = []
    seq = 0
    missing = []
    for phase in session.phases:
        for capture in phase.captures:
            seq += 1
            path = session_dir / capture.frame_ref
            if not path.exists():
                missing.append(capture.frame_ref)
                continue
            tmap, invalid = load_capture_map(session_dir, capture)
            decoded.append(DecodedCapture(
                seq=seq, phase=phase.kind, capture=capture,
                tmap=tmap, invalid_pixels=invalid))
    if missing:
        raise InputError("missing frame files for captures: " + ", ".join(missing))
    if not decoded:
        raise InputError("session has no captures to analyze")
    return decoded


def resolve_layout(session: Session, first: TemperatureMap) -> RoiSet:
    if session.roi_layout is not None:
        return session.roi_layout
    return default_roi_layout(first.width, first.height)


@dataclass(frozen=True)
class SessionAnalysis:
    layout: RoiSet
    decoded: list[DecodedCapture]
    stats: list[tuple[int, RoiStats]]            # (capture seq, stats)
    series: SeriesByPhase
    delta_rows: list[PhaseDeltaRow]
    trend_rows: list[tuple]                      # (emotion, kind, roi, phase, TrendCall)
    nose_report: list


def analyze_session(session_dir: Path, session: Session,
                    cfg: Optional[TrendConfig] = None,
                    layout: Optional[RoiSet] = None) -> SessionAnalysis:
    cfg = cfg or TrendConfig()
    decoded = decode_session(session_dir, session)
    layout = layout or resolve_layout(session, decoded[0].tmap)

    stats_rows: list[tuple[int, RoiStats]] = []
    per_phase_stats: dict[PhaseKind, list[RoiStats]] = {}
    for dc in decoded:
        stats = extract_stats(dc.tmap, layout)
        per_phase_stats.setdefault(dc.phase, []).extend(stats)
        stats_rows.extend((dc.seq, s) for s in stats)

    series: dict[PhaseKind, dict] = {}
    for phase_kind, stats in per_phase_stats.items():
        series[phase_kind] = {
            s.label: s for s in build_series(stats, phase_kind)}

    delta_rows = phase_delta_table(session, series)
    trend_rows = [
        (session.emotion, session.stimulus.kind, roi, phase,
         classify_trend_detailed(series[phase][roi], cfg))
        for phase in series
        for roi in series[phase]
    ]
    nose_report = nose_divergence(series, cfg)
    return SessionAnalysis(
        layout=layout, decoded=decoded, stats=stats_rows, series=series,
        delta_rows=delta_rows, trend_rows=trend_rows, nose_report=nose_report)


@dataclass(frozen=True)
class SequenceAnalysis:
    layout: RoiSet
    maps: list[tuple[int, TemperatureMap]]
    stats: list[tuple[int, RoiStats]]
    trend_calls: list[tuple]  # (roi, TrendCall)


def analyze_frames_dir(path: Path, cfg: Optional[TrendConfig] = None,
                       layout: Optional[RoiSet] = None) -> SequenceAnalysis:
    """Analyze a bare directory of frames (no protocol log): per-capture
    statistics and a whole-sequence trend per region."""
    cfg = cfg or TrendConfig()
    raw_files = sorted(p for p in path.glob(f"*{frameio.RAW_SUFFIX}"))
    grid_files = sorted(p for p in path.glob(f"*{frameio.GRID_SUFFIX}"))
    maps: list[tuple[int, TemperatureMap]] = []
    if raw_files:
        for i, p in enumerate(raw_files, start=1):
            frame = frameio.read_frame(p)
            tmap, _ = raw_to_temperature(frame)
            maps.append((i, tmap))
    elif grid_files:
        for i, p in enumerate(grid_files, start=1):
            tmap = frameio.read_temperature_grid(p)
            if not p.with_suffix(frameio.META_SUFFIX).exists():
                # no sidecar timing: place grids a minute apart in file order
                tmap = replace(tmap, source_timestamp=tmap.source_timestamp
                               + timedelta(seconds=60 * (i - 1)))
            maps.append((i, tmap))
    else:
        raise InputError(f"no frames found in {path}")

    layout = layout or default_roi_layout(maps[0][1].width, maps[0][1].height)
    stats_rows: list[tuple[int, RoiStats]] = []
    flat: list[RoiStats] = []
    seen = set()
    for seq, tmap in maps:
        if tmap.source_timestamp in seen:
            raise InputError(
                "frames share a timestamp; supply sidecar manifests with "
                "distinct capture times")
        seen.add(tmap.source_timestamp)
        stats = extract_stats(tmap, layout)
        flat.extend(stats)
        stats_rows.extend((seq, s) for s in stats)

    calls = []
    for series in build_series(flat, "sequence"):
        if series.classifiable:
            calls.append((series.label, classify_trend_detailed(series, cfg)))
    return SequenceAnalysis(layout=layout, maps=maps, stats=stats_rows,
                            trend_calls=calls)
