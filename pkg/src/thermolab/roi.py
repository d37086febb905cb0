"""Facial regions of interest and their per-frame statistics."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .errors import InputError
from .radiometry import TemperatureMap

MIN_LAYOUT_SIDE = 32


class RoiLabel(str, Enum):
    FOREHEAD = "forehead"
    NOSE = "nose"
    RIGHT_CHEEK = "right_cheek"
    LEFT_CHEEK = "left_cheek"


ROI_ORDER = (RoiLabel.FOREHEAD, RoiLabel.NOSE, RoiLabel.RIGHT_CHEEK, RoiLabel.LEFT_CHEEK)


@dataclass(frozen=True)
class RoiBox:
    label: RoiLabel
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise InputError(f"{self.label.value}: box origin must be non-negative")
        if self.w < 2 or self.h < 2:
            raise InputError(f"{self.label.value}: box must span at least 2x2 pixels")

    def to_dict(self) -> dict:
        return {"label": self.label.value, "x": self.x, "y": self.y,
                "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d: dict) -> "RoiBox":
        return cls(label=RoiLabel(d["label"]), x=int(d["x"]), y=int(d["y"]),
                   w=int(d["w"]), h=int(d["h"]))


class RoiSet:
    """Immutable set of uniquely labeled boxes, iterated in canonical order."""

    def __init__(self, boxes: Iterable[RoiBox]):
        by_label: dict[RoiLabel, RoiBox] = {}
        for box in boxes:
            if box.label in by_label:
                raise InputError(f"duplicate region label: {box.label.value}")
            by_label[box.label] = box
        if not by_label:
            raise InputError("a region set needs at least one box")
        self._boxes = tuple(by_label[l] for l in ROI_ORDER if l in by_label)

    def __iter__(self):
        return iter(self._boxes)

    def __len__(self):
        return len(self._boxes)

    def __eq__(self, other):
        return isinstance(other, RoiSet) and self._boxes == other._boxes

    def __getitem__(self, label: RoiLabel) -> RoiBox:
        for box in self._boxes:
            if box.label == label:
                return box
        raise KeyError(label)

    def to_dicts(self) -> list[dict]:
        return [box.to_dict() for box in self._boxes]

    @classmethod
    def from_dicts(cls, rows: Iterable[dict]) -> "RoiSet":
        return cls(RoiBox.from_dict(r) for r in rows)


@dataclass(frozen=True)
class RoiStats:
    label: RoiLabel
    min_c: float
    max_c: float
    mean_c: float
    valid_pixel_fraction: float
    timestamp: datetime

    def __post_init__(self):
        if not (self.min_c <= self.mean_c <= self.max_c):
            raise InputError(
                f"{self.label.value}: min <= mean <= max violated "
                f"({self.min_c}, {self.mean_c}, {self.max_c})")
        if not (0.0 < self.valid_pixel_fraction <= 1.0):
            raise InputError(
                f"{self.label.value}: valid pixel fraction must be in (0, 1]")


@dataclass(frozen=True)
class RoiSeries:
    """Time-ordered mean temperatures of one region within one phase."""

    label: RoiLabel
    phase: object  # PhaseKind; kept loose to avoid a protocol import cycle
    samples: tuple[tuple[datetime, float], ...]

    def __post_init__(self):
        times = [t for t, _ in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InputError(f"{self.label.value}: sample timestamps must strictly increase")

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.samples]

    @property
    def classifiable(self) -> bool:
        return len(self.samples) >= 2


def extract_stats(tmap: TemperatureMap, rois: RoiSet) -> list[RoiStats]:
    """Min/max/mean over the valid pixels of each box.

    Boxes must lie inside the map and contain at least one valid pixel;
    violations raise with the offending label named.
    """
    grid = tmap.grid
    out = []
    for box in rois:
        if box.x + box.w > tmap.width or box.y + box.h > tmap.height:
            raise InputError(
                f"{box.label.value}: box ({box.x},{box.y},{box.w},{box.h}) exceeds "
                f"{tmap.width}x{tmap.height} frame bounds")
        patch = grid[box.y:box.y + box.h, box.x:box.x + box.w]
        valid = patch[np.isfinite(patch)]
        if valid.size == 0:
            raise InputError(f"{box.label.value}: no valid pixels in box")
        lo, hi = float(valid.min()), float(valid.max())
        # summation rounding can push the mean an ulp past the extremes
        mean = min(hi, max(lo, float(valid.mean())))
        out.append(RoiStats(
            label=box.label,
            min_c=lo,
            max_c=hi,
            mean_c=mean,
            valid_pixel_fraction=valid.size / patch.size,
            timestamp=tmap.source_timestamp,
        ))
    return out


# Layout fractions on a 32x24 grid of the frame. Chosen so the boxes are
# pairwise disjoint at any size, the cheeks mirror each other, and every
# coordinate is exact for dimensions divisible by 32 and 24 (hence the
# 160x120 -> 320x240 doubling is exact).
_LAYOUT_32_24 = {
    RoiLabel.FOREHEAD: (11, 2, 10, 4),
    RoiLabel.NOSE: (13, 11, 6, 5),
    RoiLabel.RIGHT_CHEEK: (5, 12, 6, 5),
    RoiLabel.LEFT_CHEEK: (21, 12, 6, 5),
}


def default_roi_layout(width: int, height: int) -> RoiSet:
    """Anatomically plausible starting layout, scaled to the frame.

    Forehead upper-center, nose mid-center, cheeks lateral. Deterministic;
    the operator is expected to adjust per subject.
    """
    if width < MIN_LAYOUT_SIDE or height < MIN_LAYOUT_SIDE:
        raise InputError(
            f"frame too small for a default layout: {width}x{height} "
            f"(need at least {MIN_LAYOUT_SIDE}x{MIN_LAYOUT_SIDE})")
    boxes = []
    for label, (fx, fy, fw, fh) in _LAYOUT_32_24.items():
        boxes.append(RoiBox(
            label=label,
            x=(fx * width) // 32,
            y=(fy * height) // 24,
            w=(fw * width) // 32,
            h=(fh * height) // 24,
        ))
    return RoiSet(boxes)


def build_series(stats: Iterable[RoiStats], phase) -> list[RoiSeries]:
    """Group per-frame stats into one mean-temperature series per label.

    Input order does not matter; samples are ordered by timestamp. Duplicate
    timestamps within a label are an error.
    """
    by_label: dict[RoiLabel, list[RoiStats]] = {}
    for s in stats:
        by_label.setdefault(s.label, []).append(s)
    series = []
    for label in ROI_ORDER:
        if label not in by_label:
            continue
        entries = sorted(by_label[label], key=lambda s: s.timestamp)
        times = [e.timestamp for e in entries]
        if len(set(times)) != len(times):
            raise InputError(f"{label.value}: duplicate capture timestamps")
        series.append(RoiSeries(
            label=label, phase=phase,
            samples=tuple((e.timestamp, e.mean_c) for e in entries)))
    return series


def series_by_label(series: Iterable[RoiSeries]) -> Mapping[RoiLabel, RoiSeries]:
    return {s.label: s for s in series}
