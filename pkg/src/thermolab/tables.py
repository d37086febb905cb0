"""Delimiter-separated presentation tables.

Temperatures are rounded to 0.1 C here and only here; upstream values stay
at full precision so classification is immune to display rounding. The
per-frame stats table keeps full precision: it is a machine artifact used
for verification, not a display table.
"""

from __future__ import annotations

from typing import Iterable

from .protocol import PHASE_ORDER
from .roi import ROI_ORDER, RoiStats
from .trends import ComparisonRow, PhaseDeltaRow, TrendCall


def _fmt01(value: float) -> str:
    return f"{value:.1f}"


DELTAS_HEADER = ("emotion,stimulus,roi,"
                 "acclimatization_start,acclimatization_final,"
                 "stimulus_start,stimulus_final,"
                 "response_start,response_final")


def deltas_csv(rows: Iterable[PhaseDeltaRow]) -> str:
    """Wide form, one line per region: Start/Final per phase at 0.1 C."""
    cells: dict[tuple, dict] = {}
    order: list[tuple] = []
    for row in rows:
        key = (row.emotion, row.stimulus_kind, row.roi)
        if key not in cells:
            cells[key] = {}
            order.append(key)
        cells[key][row.phase] = (row.start_mean_c, row.final_mean_c)
    order.sort(key=lambda k: (k[0].value, k[1].value, ROI_ORDER.index(k[2])))
    lines = [DELTAS_HEADER]
    for key in order:
        emotion, kind, roi = key
        fields = [emotion.value, kind.value, roi.value]
        for phase in PHASE_ORDER:
            start, final = cells[key][phase]
            fields += [_fmt01(start), _fmt01(final)]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


TRENDS_HEADER = "emotion,stimulus,roi,phase,trend,basis,notes"


def trends_csv(rows: Iterable[tuple]) -> str:
    """Rows of (emotion, stimulus_kind, roi, phase, TrendCall)."""
    lines = [TRENDS_HEADER]
    for emotion, kind, roi, phase, call in rows:
        lines.append(",".join([
            emotion.value, kind.value, roi.value, phase.value,
            call.label.table_text, call.basis, "|".join(call.notes).replace(",", ";"),
        ]))
    return "\n".join(lines) + "\n"


COMPARISON_HEADER = "emotion,phase,video,video_basis,music,music_basis"


def comparison_csv(rows: Iterable[ComparisonRow]) -> str:
    lines = [COMPARISON_HEADER]
    for row in rows:
        lines.append(",".join([
            row.emotion.value, row.phase.value,
            row.video.label.table_text, row.video.basis,
            row.music.label.table_text, row.music.basis,
        ]))
    return "\n".join(lines) + "\n"


def one_sided_comparison_csv(kind, rows: Iterable[tuple]) -> str:
    """Comparison-input rows for a single session: the other stimulus column
    stays blank until a paired session is analyzed alongside."""
    lines = [COMPARISON_HEADER]
    for emotion, phase, call in rows:
        video = (call.label.table_text, call.basis) if kind.value == "video" else ("", "")
        music = (call.label.table_text, call.basis) if kind.value == "music" else ("", "")
        lines.append(",".join([emotion.value, phase.value,
                               video[0], video[1], music[0], music[1]]))
    return "\n".join(lines) + "\n"


STATS_HEADER = "capture,timestamp,roi,min_c,max_c,mean_c,valid_fraction"


def stats_csv(rows: Iterable[tuple[int, RoiStats]]) -> str:
    """Full-precision per-capture statistics, one line per region."""
    lines = [STATS_HEADER]
    for seq, s in rows:
        lines.append(",".join([
            str(seq), s.timestamp.isoformat(), s.label.value,
            repr(s.min_c), repr(s.max_c), repr(s.mean_c),
            repr(s.valid_pixel_fraction),
        ]))
    return "\n".join(lines) + "\n"


NOSE_HEADER = "phase,nose,modal_other,divergent"


def nose_csv(rows) -> str:
    lines = [NOSE_HEADER]
    for row in rows:
        lines.append(",".join([
            row.phase.value, row.nose.table_text, row.modal_other.table_text,
            "yes" if row.divergent else "no",
        ]))
    return "\n".join(lines) + "\n"
