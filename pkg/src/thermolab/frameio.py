"""Neutral on-disk frame formats.

Two inputs are accepted:

* raw radiometric: ``NNNN.raw`` holds width*height little-endian uint16
  counts, and the sidecar ``NNNN.meta`` (JSON) carries the geometry,
  timestamp, sequence index, and every calibration field;
* pre-calibrated: ``NNNN.csv`` holds a grid of degrees Celsius, comma
  separated, one image row per line, for cameras whose export already did
  the radiometric work. Its optional ``NNNN.meta`` sidecar carries the
  timestamp and sequence index.

Grid values are written with enough digits to round-trip float64 exactly.
"""

from __future__ import annotations

import json
from datetime import datetime
from pathlib import Path

import numpy as np

from .clock import utc
from .errors import InputError
from .radiometry import RadiometricCalibration, RadiometricFrame, TemperatureMap

RAW_SUFFIX = ".raw"
META_SUFFIX = ".meta"
GRID_SUFFIX = ".csv"


def _meta_path(path: Path) -> Path:
    return path.with_suffix(META_SUFFIX)


def write_frame(path: Path | str, frame: RadiometricFrame) -> Path:
    """Write NNNN.raw plus its NNNN.meta sidecar; returns the raw path."""
    path = Path(path)
    if path.suffix != RAW_SUFFIX:
        path = path.with_suffix(RAW_SUFFIX)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(frame.counts.astype("<u2").tobytes())
    meta = {
        "width": frame.width,
        "height": frame.height,
        "timestamp": utc(frame.timestamp).isoformat(),
        "sequence_index": frame.sequence_index,
        "calibration": frame.calibration.to_dict(),
    }
    _meta_path(path).write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_frame(path: Path | str) -> RadiometricFrame:
    path = Path(path)
    meta_path = _meta_path(path)
    if not path.exists():
        raise InputError(f"raw frame file not found: {path}")
    if not meta_path.exists():
        raise InputError(f"missing sidecar manifest for {path.name}: {meta_path.name}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        width, height = int(meta["width"]), int(meta["height"])
        cal = RadiometricCalibration.from_dict(meta["calibration"])
        timestamp = datetime.fromisoformat(meta["timestamp"])
        sequence = int(meta.get("sequence_index", 0))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{meta_path}: malformed sidecar manifest: {exc}") from exc
    blob = path.read_bytes()
    expected = width * height * 2
    if len(blob) != expected:
        raise InputError(
            f"{path}: expected {expected} bytes for {width}x{height}, got {len(blob)}")
    counts = np.frombuffer(blob, dtype="<u2").astype(np.uint16)
    return RadiometricFrame(
        width=width, height=height, counts=counts, calibration=cal,
        timestamp=timestamp, sequence_index=sequence)


def write_temperature_grid(path: Path | str, tmap: TemperatureMap,
                           timestamp: datetime | None = None,
                           sequence_index: int | None = None) -> Path:
    """Write a degrees-Celsius grid; sidecar written when timing is given."""
    path = Path(path)
    if path.suffix != GRID_SUFFIX:
        path = path.with_suffix(GRID_SUFFIX)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        ",".join(repr(v) for v in row)
        for row in tmap.grid.tolist()
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if timestamp is not None or sequence_index is not None:
        meta = {
            "width": tmap.width,
            "height": tmap.height,
            "timestamp": utc(timestamp or tmap.source_timestamp).isoformat(),
            "sequence_index": int(sequence_index or 0),
        }
        _meta_path(path).write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_temperature_grid(path: Path | str) -> TemperatureMap:
    path = Path(path)
    if not path.exists():
        raise InputError(f"temperature grid not found: {path}")
    rows: list[list[float]] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(cell) for cell in line.split(",")])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: unparseable cell: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty temperature grid")
    width = len(rows[0])
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise InputError(
                f"{path}:{lineno}: ragged grid ({len(row)} cells, expected {width})")
    timestamp = None
    meta_path = _meta_path(path)
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if "timestamp" in meta:
            timestamp = datetime.fromisoformat(meta["timestamp"])
    kwargs = {"source_timestamp": timestamp} if timestamp is not None else {}
    return TemperatureMap(
        width=width, height=len(rows),
        temps=np.asarray(rows, dtype=np.float64).reshape(-1), **kwargs)
