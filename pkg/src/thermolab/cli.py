"""Command-line entry points.

``run`` conducts a session interactively (or from a scripted transcript) as
a thin client of the same command surface the service exposes; ``analyze``,
``export``, and ``import`` are batch operations on directories; ``serve``
starts the local conductor service.

Exit codes: 0 ok, 2 input error, 3 protocol-state error.
"""

from __future__ import annotations

import json
import sys
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import bundle as bundle_mod
from . import tables
from .analysis import analyze_frames_dir, analyze_session
from .client import ConsoleClient, HttpConsole, LocalConsole
from .clock import SimulatedClock, SystemClock
from .errors import InputError, IntegrityError, NotFoundError, StateError
from .instruments import FLIR_E6
from .protocol import CHECKLIST_ITEMS, EmotionLabel, StimulusKind
from .radiometry import RadiometricCalibration, TemperatureMap, synth_frame
from .render import default_scale, render_ppm
from .roi import RoiLabel, RoiSet, default_roi_layout
from .store import SessionStore
from .trends import TrendConfig, compare_stimuli


@click.group()
def cli():
    """Thermography session toolkit."""


def _fresh_request_id() -> str:
    return uuid.uuid4().hex


def _parse_start(value: str | None) -> datetime | None:
    return datetime.fromisoformat(value) if value else None


def _load_layout(path: str | None) -> RoiSet | None:
    if not path:
        return None
    try:
        rows = json.loads(Path(path).read_text(encoding="utf-8"))
        return RoiSet.from_dicts(rows)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read ROI layout {path}: {exc}") from exc


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

RUN_HELP = """\
Transcript commands:
  env TEMP HUMIDITY [CHECKPOINT]  record the pending environment checkpoint
  capture [FILE]                  confirm the due capture (copy FILE in)
  end-capture [FILE]              record the stimulus end image
  advance                         close the phase / complete the session
  note TEXT ...                   operator note
  tick SECONDS                    advance the simulated clock
  status                          show live state
  abort [REASON ...]              abort the session
  quit                            abort (if running) and leave
"""


@dataclass
class RunOptions:
    """Frame sources for captures confirmed without an explicit file."""

    watch_dir: Optional[Path] = None
    synth: bool = False
    rng: Optional[np.random.Generator] = None
    seen: set = field(default_factory=set)

    def prime_watch(self):
        if self.watch_dir:
            self.seen.update(p.resolve() for p in self._candidates())

    def _candidates(self):
        return [p for pattern in ("*.raw", "*.csv")
                for p in self.watch_dir.glob(pattern)]

    def next_watch_file(self) -> Optional[Path]:
        fresh = [p for p in self._candidates() if p.resolve() not in self.seen]
        if not fresh:
            return None
        fresh.sort(key=lambda p: (p.stat().st_mtime, p.name))
        chosen = fresh[0]
        self.seen.add(chosen.resolve())
        return chosen


DEMO_FACE_TARGETS = {
    RoiLabel.FOREHEAD: 34.5,
    RoiLabel.NOSE: 33.5,
    RoiLabel.RIGHT_CHEEK: 34.1,
    RoiLabel.LEFT_CHEEK: 34.0,
}


def _demo_frame(store: SessionStore, sid: str, rng: np.random.Generator):
    """Synthetic face frame for camera-less demo sessions."""
    session = store.session(sid)
    width, height = 160, 120
    layout = session.roi_layout or default_roi_layout(width, height)
    grid = np.full((height, width), 25.0)
    for box in layout:
        grid[box.y:box.y + box.h, box.x:box.x + box.w] = DEMO_FACE_TARGETS[box.label]
    now = store.clock.now()
    fld = TemperatureMap(width=width, height=height, temps=grid.reshape(-1),
                         source_timestamp=now)
    return synth_frame(fld, RadiometricCalibration(), noise_netd_c=FLIR_E6.netd_c,
                       rng=rng, timestamp=now,
                       sequence_index=len(session.captures) + 1)


@cli.command()
@click.option("--store", "store_path", type=click.Path(file_okay=False), default="sessions",
              show_default=True, help="Session store directory.")
@click.option("--server", default=None, help="Conduct against a running service URL.")
@click.option("--emotion", type=click.Choice([e.value for e in EmotionLabel]), required=True)
@click.option("--stimulus", "stimulus_kind", type=click.Choice([k.value for k in StimulusKind]),
              required=True)
@click.option("--descriptor", default="", help="Title/source of the clip or track.")
@click.option("--date", "session_date", default=None, help="Session date (YYYY-MM-DD).")
@click.option("--subject-id", default=None)
@click.option("--age", type=int, default=None)
@click.option("--gender", default=None)
@click.option("--checklist-yes", is_flag=True,
              help="Assert every subject precondition is satisfied.")
@click.option("--session-id", default=None)
@click.option("--simulated-clock", is_flag=True,
              help="Run on a simulated clock driven by 'tick' commands.")
@click.option("--start-at", default=None, help="Simulated clock start (ISO-8601).")
@click.option("--watch-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Time-lapse adapter: bare 'capture' pulls the newest new "
                   "frame file from this folder.")
@click.option("--synth-frames", is_flag=True,
              help="Synthesize a face frame for captures confirmed without a file.")
@click.option("--seed", type=int, default=None,
              help="Seed for synthesized frame noise.")
@click.option("--acclim-min", type=float, default=600.0, show_default=True)
@click.option("--acclim-max", type=float, default=900.0, show_default=True)
@click.option("--stimulus-min", type=float, default=120.0, show_default=True)
@click.option("--stimulus-max", type=float, default=600.0, show_default=True)
@click.option("--response-duration", type=float, default=600.0, show_default=True)
@click.option("--capture-period", type=float, default=60.0, show_default=True)
@click.option("--distance", type=float, default=0.8, show_default=True,
              help="Subject-camera distance in meters.")
def run(store_path, server, emotion, stimulus_kind, descriptor, session_date,
        subject_id, age, gender, checklist_yes, session_id, simulated_clock,
        start_at, watch_dir, synth_frames, seed, acclim_min, acclim_max,
        stimulus_min, stimulus_max, response_duration, capture_period, distance):
    """Conduct a session from the terminal."""
    if server:
        if watch_dir or synth_frames:
            raise InputError("frame ingestion needs a local store, not --server")
        client: ConsoleClient = HttpConsole(server)
        if simulated_clock and not client.clock()["simulated"]:
            raise InputError("server does not run a simulated clock")
    else:
        clock = SimulatedClock(_parse_start(start_at) or datetime(2019, 2, 21, 10, 0, 0)) \
            if simulated_clock else SystemClock()
        client = LocalConsole(SessionStore(store_path, clock=clock))
    if watch_dir and synth_frames:
        raise InputError("choose either --watch-dir or --synth-frames")
    options = RunOptions(
        watch_dir=Path(watch_dir) if watch_dir else None,
        synth=synth_frames,
        rng=np.random.default_rng(seed) if synth_frames else None,
    )
    options.prime_watch()

    checklist = _collect_checklist(checklist_yes)
    payload = {
        "request_id": _fresh_request_id(),
        "emotion": emotion,
        "stimulus_kind": stimulus_kind,
        "stimulus_descriptor": descriptor,
        "date": session_date,
        "subject": ({"subject_id": subject_id, "age_years": age, "gender": gender}
                    if (subject_id or age or gender) else None),
        "checklist": checklist,
        "config": {
            "acclim_min_s": acclim_min, "acclim_max_s": acclim_max,
            "stimulus_min_s": stimulus_min, "stimulus_max_s": stimulus_max,
            "response_duration_s": response_duration,
            "capture_period_s": capture_period,
            "subject_camera_distance_m": distance,
        },
        "session_id": session_id,
    }
    started = client.start_session(payload)
    sid = started["session_id"]
    click.echo(f"session {sid} running ({emotion}/{stimulus_kind})")
    for warning in started.get("warnings", []):
        click.echo(f"warning: {warning}")
    _conduct_loop(client, sid, options)


def _collect_checklist(checklist_yes: bool) -> dict:
    if checklist_yes:
        return {item: True for item in CHECKLIST_ITEMS}
    values = {}
    for item in CHECKLIST_ITEMS:
        values[item] = click.confirm(f"confirm: {item.replace('_', ' ')}?", default=False)
    return values


def _status_line(state: dict) -> str:
    phase = state.get("phase") or "-"
    elapsed = state.get("phase_elapsed_s")
    elapsed_text = f"{elapsed:.0f}s" if elapsed is not None else "-"
    due = state.get("seconds_to_next_capture")
    due_text = f"{due:.0f}s" if due is not None else "-"
    pending = state.get("pending_checkpoint") or "-"
    return (f"[{state['status']}] phase={phase} elapsed={elapsed_text} "
            f"next_capture_in={due_text} pending_env={pending} "
            f"captures={state['total_captures']} v{state['version']}")


def _conduct_loop(client: ConsoleClient, sid: str, options: Optional[RunOptions] = None):
    click.echo(RUN_HELP, nl=False)
    click.echo(_status_line(client.state(sid)))
    interrupted = False
    while True:
        try:
            line = input("> ")
        except EOFError:
            line = "quit"
        except KeyboardInterrupt:
            line = "abort interrupted"
            interrupted = True
        try:
            done = _dispatch_line(client, sid, line, options)
        except (InputError, NotFoundError) as exc:
            click.echo(f"error: {exc}")
            continue
        except StateError as exc:
            click.echo(f"rejected: {exc}")
            continue
        if done:
            break
    state = client.state(sid)
    click.echo(f"session {sid} {state['status']}")
    if state["status"] in ("completed", "aborted"):
        summary = client.summary(sid)
        click.echo(
            f"summary: {summary['emotion']}/{summary['stimulus']['kind']} "
            f"stimulus {summary['stimulus_duration']} "
            f"({summary['stimulus_captures']} images, "
            f"{summary['total_captures']} total)")
        if summary["capture_count_mismatch"]:
            click.echo(
                f"note: expected {summary['expected_stimulus_captures']} stimulus "
                f"images for that duration, recorded {summary['stimulus_captures']}")
        for deviation in summary["deviations"]:
            click.echo(f"deviation: {deviation}")
    if interrupted:
        sys.exit(130)


def _dispatch_line(client: ConsoleClient, sid: str, line: str,
                   options: Optional[RunOptions] = None) -> bool:
    """Apply one transcript line; True ends the loop."""
    parts = line.strip().split()
    if not parts:
        return False
    verb, args = parts[0].lower(), parts[1:]

    if verb == "help":
        click.echo(RUN_HELP, nl=False)
        return False
    if verb == "status":
        click.echo(_status_line(client.state(sid)))
        return False
    if verb == "tick":
        if not args:
            raise InputError("tick needs a number of seconds")
        client.advance_clock(float(args[0]))
        click.echo(_status_line(client.state(sid)))
        return False
    if verb == "env":
        if len(args) < 2:
            raise InputError("env needs TEMP and HUMIDITY")
        checkpoint = args[2] if len(args) > 2 else client.state(sid).get("pending_checkpoint")
        if not checkpoint:
            raise InputError("no pending environment checkpoint")
        result = client.command(sid, {
            "request_id": _fresh_request_id(), "verb": "record_env",
            "checkpoint": checkpoint, "temp_c": float(args[0]),
            "humidity_pct": float(args[1])})
        click.echo(f"env {checkpoint} recorded v{result['version']}")
        return False
    if verb in ("capture", "end-capture"):
        state = client.state(sid)
        if verb == "end-capture":
            role = "phase_end"
        elif state.get("phase") not in (None, "acclimatization") and \
                state["captures_per_phase"].get(state["phase"], 0) == 0:
            role = "phase_start"
        else:
            role = "scheduled"
        payload = {"request_id": _fresh_request_id(), "verb": "confirm_capture",
                   "role": role}
        if args:
            payload["frame_ref"] = _ingest_via_client(client, sid, args[0])
        elif options and options.watch_dir:
            src = options.next_watch_file()
            if src is None:
                click.echo("no new frame in the watch folder; recording without a file")
            else:
                payload["frame_ref"] = _ingest_via_client(client, sid, str(src))
        elif options and options.synth:
            payload["frame_ref"] = _ingest_synth(client, sid, options)
        result = client.command(sid, payload)
        click.echo(f"capture recorded ({role}) v{result['version']}")
        return False
    if verb == "advance":
        result = client.command(sid, {"request_id": _fresh_request_id(),
                                      "verb": "advance_phase"})
        click.echo(f"phase advanced v{result['version']} ({result['status']})")
        return result["status"] == "completed"
    if verb == "note":
        if not args:
            raise InputError("note needs text")
        client.command(sid, {"request_id": _fresh_request_id(), "verb": "note",
                             "text": " ".join(args)})
        return False
    if verb == "abort":
        client.command(sid, {"request_id": _fresh_request_id(), "verb": "abort",
                             "reason": " ".join(args)})
        return True
    if verb in ("quit", "exit"):
        state = client.state(sid)
        if state["status"] == "running":
            client.command(sid, {"request_id": _fresh_request_id(), "verb": "abort",
                                 "reason": "operator quit"})
        return True
    raise InputError(f"unknown command: {verb} (try 'help')")


def _ingest_via_client(client: ConsoleClient, sid: str, src: str) -> str:
    """Copy a capture file into the session through the local store."""
    if not isinstance(client, LocalConsole):
        raise InputError("file ingestion requires a local store "
                         "(use a watch folder next to the service)")
    return client.store.ingest_capture_source(sid, src_path=src)


def _ingest_synth(client: ConsoleClient, sid: str, options: RunOptions) -> str:
    if not isinstance(client, LocalConsole):
        raise InputError("synthetic frames require a local store")
    frame = _demo_frame(client.store, sid, options.rng)
    return client.store.ingest_capture_source(sid, frame=frame)


# --------------------------------------------------------------------------
# analyze
# --------------------------------------------------------------------------

@cli.command()
@click.argument("input_path", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", type=click.Path(file_okay=False), required=True)
@click.option("--tau", type=float, default=0.2, show_default=True,
              help="Trend significance threshold for full series (deg C).")
@click.option("--comparison-tau", type=float, default=0.1, show_default=True,
              help="Threshold for cross-stimulus comparison labels (deg C).")
@click.option("--roi-layout", "roi_layout_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON list of ROI boxes to use instead of the default.")
def analyze(input_path, out_path, tau, comparison_tau, roi_layout_path):
    """Analyze a session directory, a bundle, a store, or a bare frames dir."""
    input_path = Path(input_path)
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    cfg = TrendConfig(tau_c=tau)
    layout = _load_layout(roi_layout_path)

    if (input_path / "events.log").exists() or (input_path / "manifest.json").exists() \
            or (input_path / "log" / "events.log").exists():
        _analyze_session_dir(input_path, out, cfg, layout)
    elif any(p.is_dir() and ((p / "events.log").exists()) for p in input_path.iterdir()):
        _analyze_store(input_path, out, cfg, TrendConfig(tau_c=comparison_tau), layout)
    else:
        _analyze_frames(input_path, out, cfg, layout)
    click.echo(f"analysis written to {out}")


def _session_dir_of(path: Path) -> Path:
    # a bundle keeps its log under log/, a live session at the top level
    return path


def _load_any_session(path: Path):
    if (path / "events.log").exists():
        return bundle_mod.load_session_dir(path)[0], path
    if (path / "log" / "events.log").exists():
        from .events import parse_log
        from .protocol import replay
        text = (path / "log" / "events.log").read_text(encoding="utf-8")
        return replay(parse_log(text)), path
    raise InputError(f"no event log found under {path}")


def _analyze_session_dir(path: Path, out: Path, cfg: TrendConfig, layout):
    session, root = _load_any_session(path)
    analysis = analyze_session(root, session, cfg, layout=layout)
    _write_session_outputs(session, analysis, out)
    return session, analysis


def _write_session_outputs(session, analysis, out: Path):
    (out / "deltas.csv").write_text(tables.deltas_csv(analysis.delta_rows),
                                    encoding="utf-8")
    (out / "trends.csv").write_text(tables.trends_csv(analysis.trend_rows),
                                    encoding="utf-8")
    (out / "stats.csv").write_text(tables.stats_csv(analysis.stats), encoding="utf-8")
    (out / "comparison.csv").write_text(
        tables.one_sided_comparison_csv(
            session.stimulus.kind,
            [(e, p, call) for (e, _k, roi, p, call) in analysis.trend_rows
             if roi.value == "forehead"]), encoding="utf-8")
    (out / "nose_divergence.csv").write_text(
        tables.nose_csv(analysis.nose_report), encoding="utf-8")
    spec = default_scale(d.tmap for d in analysis.decoded)
    renders = out / "renders"
    renders.mkdir(exist_ok=True)
    for dc in analysis.decoded:
        (renders / f"{dc.seq:04d}.ppm").write_bytes(render_ppm(dc.tmap, spec))


def _analyze_store(path: Path, out: Path, cfg: TrendConfig,
                   comparison_cfg: TrendConfig, layout):
    from .protocol import SessionStatus

    per_kind: dict = {"video": {}, "music": {}}
    analyzed = 0
    for child in sorted(p for p in path.iterdir() if p.is_dir()):
        if not (child / "events.log").exists():
            continue
        session, root = _load_any_session(child)
        if session.status != SessionStatus.COMPLETED:
            click.echo(f"skipping {child.name}: session is {session.status.value}")
            continue
        try:
            analysis = analyze_session(root, session, cfg, layout=layout)
        except InputError as exc:
            # protocol-only sessions (no frame files) are legitimate; skip them
            click.echo(f"skipping {child.name}: {exc}")
            continue
        session_out = out / child.name
        session_out.mkdir(parents=True, exist_ok=True)
        _write_session_outputs(session, analysis, session_out)
        forehead = {phase: per_label[RoiLabel.FOREHEAD]
                    for phase, per_label in analysis.series.items()}
        per_kind[session.stimulus.kind.value][session.emotion] = forehead
        analyzed += 1
    if not analyzed:
        raise InputError(f"no analyzable completed sessions found in {path}")
    shared = set(per_kind["video"]) & set(per_kind["music"])
    if shared:
        video = {e: s for e, s in per_kind["video"].items() if e in shared}
        music = {e: s for e, s in per_kind["music"].items() if e in shared}
        rows = compare_stimuli(video, music, comparison_cfg)
        (out / "comparison.csv").write_text(tables.comparison_csv(rows),
                                            encoding="utf-8")


def _analyze_frames(path: Path, out: Path, cfg: TrendConfig, layout):
    analysis = analyze_frames_dir(path, cfg, layout=layout)
    (out / "stats.csv").write_text(tables.stats_csv(analysis.stats), encoding="utf-8")
    lines = ["roi,trend,basis,notes"]
    for label, call in analysis.trend_calls:
        lines.append(",".join([label.value, call.label.table_text, call.basis,
                               "|".join(call.notes).replace(",", ";")]))
    (out / "sequence_trends.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    spec = default_scale(m for _seq, m in analysis.maps)
    renders = out / "renders"
    renders.mkdir(exist_ok=True)
    for seq, tmap in analysis.maps:
        (renders / f"{seq:04d}.ppm").write_bytes(render_ppm(tmap, spec))


# --------------------------------------------------------------------------
# export / import / serve
# --------------------------------------------------------------------------

@cli.command()
@click.argument("session_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", type=click.Path(file_okay=False), required=True)
@click.option("--tau", type=float, default=0.2, show_default=True)
def export(session_dir, out_path, tau):
    """Export a completed session as a self-contained learning bundle."""
    result = bundle_mod.export_bundle(Path(session_dir), Path(out_path),
                                      TrendConfig(tau_c=tau))
    click.echo(f"bundle written to {result.path} "
               f"({len(result.manifest['files'])} files)")


@cli.command(name="import")
@click.argument("bundle_dir", type=click.Path(exists=True, file_okay=False))
def import_cmd(bundle_dir):
    """Verify a bundle: digests, log replay, and recomputed analysis."""
    result = bundle_mod.import_bundle(Path(bundle_dir))
    session = result.session
    click.echo(f"session {session.session_id} ({session.emotion.value}/"
               f"{session.stimulus.kind.value}) verified: "
               f"{len(result.manifest['files'])} files, "
               f"{len(session.captures)} captures")
    for warning in result.warnings:
        click.echo(f"warning: {warning}")


@cli.command()
@click.option("--store", "store_path", type=click.Path(file_okay=False), default="sessions",
              show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8421, show_default=True)
@click.option("--simulated-clock", is_flag=True)
@click.option("--start-at", default=None, help="Simulated clock start (ISO-8601).")
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None,
              help="Static conductor UI to mount at /ui.")
def serve(store_path, host, port, simulated_clock, start_at, ui_dir):
    """Run the local conductor service."""
    import uvicorn

    from .service import create_app

    clock = SimulatedClock(_parse_start(start_at) or datetime(2019, 2, 21, 10, 0, 0)) \
        if simulated_clock else SystemClock()
    store = SessionStore(store_path, clock=clock)
    app = create_app(store, ui_dir=Path(ui_dir) if ui_dir else None)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main():
    try:
        cli(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(130)
    except StateError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except (InputError, IntegrityError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
