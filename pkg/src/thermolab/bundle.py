"""Self-contained learning bundles: frames, renders, tables, and the log.

A bundle is a directory tree rooted at a JSON manifest that lists every
artifact with its SHA-256 digest. Exports are deterministic (all timestamps
come from the event log, files are enumerated in sorted order), so exporting
the same session twice produces byte-identical trees. Import verifies every
digest, replays the log, and recomputes the analysis to cross-check the
stored tables.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from . import frameio, tables
from .analysis import SessionAnalysis, analyze_session
from .errors import InputError, IntegrityError, StateError
from .events import parse_log
from .protocol import Session, SessionStatus, replay
from .render import RenderSpec, default_scale, render_ppm
from .trends import TrendConfig

MANIFEST_NAME = "manifest.json"
LOG_PATH = "log/events.log"
BUNDLE_FORMAT = 1


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _render_name(seq: int) -> str:
    return f"renders/{seq:04d}.ppm"


def _map_name(seq: int) -> str:
    return f"maps/{seq:04d}.csv"


@dataclass(frozen=True)
class BundleExport:
    path: Path
    manifest: dict


def load_session_dir(session_dir: Path) -> tuple[Session, str]:
    """Replay a session directory's event log; returns session and log text."""
    log_path = Path(session_dir) / "events.log"
    if not log_path.exists():
        raise InputError(f"no event log at {log_path}")
    text = log_path.read_text(encoding="utf-8")
    return replay(parse_log(text)), text


def export_bundle(session_dir: Path, destination: Path,
                  cfg: Optional[TrendConfig] = None,
                  render_spec: Optional[RenderSpec] = None) -> BundleExport:
    session_dir = Path(session_dir)
    destination = Path(destination)
    session, log_text = load_session_dir(session_dir)
    if session.status != SessionStatus.COMPLETED:
        raise StateError(
            f"cannot export an incomplete session (status {session.status.value})")
    cfg = cfg or TrendConfig()
    analysis = analyze_session(session_dir, session, cfg)

    if destination.exists() and any(destination.iterdir()):
        raise InputError(f"export destination is not empty: {destination}")
    destination.mkdir(parents=True, exist_ok=True)

    files: dict[str, bytes] = {}
    files[LOG_PATH] = log_text.encode("utf-8")

    for dc in analysis.decoded:
        ref = dc.capture.frame_ref
        files[ref] = (session_dir / ref).read_bytes()
        sidecar = (session_dir / ref).with_suffix(frameio.META_SUFFIX)
        if sidecar.exists():
            rel_sidecar = str(Path(ref).with_suffix(frameio.META_SUFFIX))
            files[rel_sidecar] = sidecar.read_bytes()
        if ref.endswith(frameio.RAW_SUFFIX):
            # cache the decoded grid next to the raw frame
            grid_lines = [",".join(repr(v) for v in row)
                          for row in dc.tmap.grid.tolist()]
            files[_map_name(dc.seq)] = ("\n".join(grid_lines) + "\n").encode("utf-8")

    spec = render_spec or default_scale(d.tmap for d in analysis.decoded)
    for dc in analysis.decoded:
        files[_render_name(dc.seq)] = render_ppm(dc.tmap, spec)

    files["tables/deltas.csv"] = tables.deltas_csv(analysis.delta_rows).encode("utf-8")
    files["tables/trends.csv"] = tables.trends_csv(analysis.trend_rows).encode("utf-8")
    files["tables/comparison.csv"] = tables.one_sided_comparison_csv(
        session.stimulus.kind,
        [(e, p, call) for (e, _k, roi, p, call) in analysis.trend_rows
         if roi.value == "forehead"]).encode("utf-8")
    files["tables/stats.csv"] = tables.stats_csv(analysis.stats).encode("utf-8")
    files["tables/nose_divergence.csv"] = tables.nose_csv(
        analysis.nose_report).encode("utf-8")

    manifest = {
        "bundle_format": BUNDLE_FORMAT,
        "session": session.to_dict(),
        "analysis": {
            "trend_config": cfg.to_dict(),
            "render_scale": spec.to_dict(),
            "roi_layout": analysis.layout.to_dicts(),
        },
        "files": [
            {"path": path, "sha256": _sha256(data), "bytes": len(data)}
            for path, data in sorted(files.items())
        ],
        "toolkit": {"name": "thermolab", "version": __version__},
    }

    for rel, data in files.items():
        target = destination / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
    (destination / MANIFEST_NAME).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return BundleExport(path=destination, manifest=manifest)


@dataclass(frozen=True)
class ImportResult:
    session: Session
    analysis: SessionAnalysis
    manifest: dict
    warnings: list[str]


def import_bundle(path: Path) -> ImportResult:
    path = Path(path)
    manifest_path = path / MANIFEST_NAME
    if not manifest_path.exists():
        raise IntegrityError(f"no {MANIFEST_NAME} found in {path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    for entry in manifest.get("files", []):
        rel, digest = entry["path"], entry["sha256"]
        target = path / rel
        if not target.exists():
            detail = ""
            stem = Path(rel).stem
            if stem.isdigit():
                detail = f" (sequence {int(stem)})"
            raise IntegrityError(f"bundle file missing: {rel}{detail}")
        if _sha256(target.read_bytes()) != digest:
            raise IntegrityError(f"digest mismatch for {rel}")

    log_text = (path / LOG_PATH).read_text(encoding="utf-8")
    session = replay(parse_log(log_text))
    if session.to_dict() != manifest.get("session"):
        raise IntegrityError("event log and manifest disagree about the session")

    cfg = TrendConfig(**manifest["analysis"]["trend_config"])
    spec = RenderSpec.from_dict(manifest["analysis"]["render_scale"])
    analysis = analyze_session(path, session, cfg)

    warnings = []
    recomputed = {
        "tables/deltas.csv": tables.deltas_csv(analysis.delta_rows).encode("utf-8"),
        "tables/trends.csv": tables.trends_csv(analysis.trend_rows).encode("utf-8"),
        "tables/stats.csv": tables.stats_csv(analysis.stats).encode("utf-8"),
        "tables/nose_divergence.csv": tables.nose_csv(
            analysis.nose_report).encode("utf-8"),
    }
    for dc in analysis.decoded:
        recomputed[_render_name(dc.seq)] = render_ppm(dc.tmap, spec)
    for rel, expected in recomputed.items():
        stored = path / rel
        if stored.exists() and stored.read_bytes() != expected:
            warnings.append(f"{rel} differs from recomputation")
    return ImportResult(session=session, analysis=analysis,
                        manifest=manifest, warnings=warnings)


def render_sequence(session_dir: Path, out_dir: Path,
                    render_spec: Optional[RenderSpec] = None) -> list[Path]:
    """Write one fixed-scale render per capture, ordered by capture time."""
    session_dir = Path(session_dir)
    session, _ = load_session_dir(session_dir)
    analysis = analyze_session(session_dir, session)
    if not analysis.decoded:
        raise InputError("session has no captures to render")
    spec = render_spec or default_scale(dc.tmap for dc in analysis.decoded)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for dc in analysis.decoded:
        target = out_dir / f"{dc.seq:04d}.ppm"
        target.write_bytes(render_ppm(dc.tmap, spec))
        written.append(target)
    return written
