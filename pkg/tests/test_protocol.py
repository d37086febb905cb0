from datetime import datetime, timedelta, timezone

import pytest

from thermolab.clock import SimulatedClock
from thermolab.errors import InputError, IntegrityError, StateError
from thermolab.events import dump_log, parse_log
from thermolab.protocol import (CaptureRole, EmotionLabel, EnvCheckpoint,
                                PhaseKind, ProtocolConfig, SessionStatus,
                                Stimulus, StimulusKind, SubjectChecklist,
                                SubjectMeta, build_abort, build_advance_phase,
                                build_record_capture, build_record_env,
                                build_start, apply_event, expected_stimulus_captures,
                                format_minsec, next_capture_due, replay,
                                session_summary, EnvReading)
from thermolab.store import SessionStore

T0 = datetime(2019, 2, 21, 10, 0, tzinfo=timezone.utc)


def start_session(**kwargs):
    event = build_start(
        session_id=kwargs.pop("session_id", "s0001"),
        emotion=kwargs.pop("emotion", EmotionLabel.JOY),
        stimulus=kwargs.pop("stimulus", Stimulus(StimulusKind.VIDEO, "clip")),
        checklist=kwargs.pop("checklist", SubjectChecklist.all_confirmed()),
        config=kwargs.pop("config", ProtocolConfig()),
        now=kwargs.pop("now", T0),
        **kwargs,
    )
    return apply_event(None, event)


def do(session, builder, *args, **kwargs):
    return apply_event(session, builder(session, *args, **kwargs))


def env(session, checkpoint, now, temp=21.0, hum=35.0):
    reading = EnvReading(checkpoint=checkpoint, temp_c=temp, humidity_pct=hum)
    return do(session, build_record_env, reading, now)


def run_full_session(stimulus_s=300.0, acclim_captures=11, response_s=600.0):
    s = start_session()
    t = T0
    s = env(s, EnvCheckpoint.START_ACCLIMATIZATION, t)
    for i in range(acclim_captures):
        s = do(s, build_record_capture, f"frames/{i + 1:04d}.raw", t)
        if i < acclim_captures - 1:
            t += timedelta(seconds=60)
    s = do(s, build_advance_phase, t)
    s = env(s, EnvCheckpoint.START_STIMULUS, t)
    s = do(s, build_record_capture, "frames/a.raw", t, CaptureRole.PHASE_START)
    t += timedelta(seconds=stimulus_s)
    s = do(s, build_record_capture, "frames/b.raw", t, CaptureRole.PHASE_END)
    s = env(s, EnvCheckpoint.FINAL_STIMULUS, t)
    s = do(s, build_advance_phase, t)
    s = do(s, build_record_capture, "frames/c.raw", t, CaptureRole.PHASE_START)
    t += timedelta(seconds=response_s)
    s = do(s, build_record_capture, "frames/d.raw", t)
    s = env(s, EnvCheckpoint.FINAL_RESPONSE, t)
    s = do(s, build_advance_phase, t)
    return s


# --- start -------------------------------------------------------------------

def test_start_happy_path_opens_acclimatization():
    s = start_session()
    assert s.status == SessionStatus.RUNNING
    assert s.open_phase.kind == PhaseKind.ACCLIMATIZATION
    assert s.version == 1


def test_start_names_failed_checklist_item():
    checklist = SubjectChecklist.all_confirmed()
    checklist = SubjectChecklist(**{**checklist.to_dict(),
                                    "no_stimulants_last_hour": False})
    with pytest.raises(InputError, match="no_stimulants_last_hour"):
        start_session(checklist=checklist)


def test_distance_below_minimum_focus_rejected():
    with pytest.raises(InputError, match="minimum focus"):
        ProtocolConfig(subject_camera_distance_m=0.4)


def test_config_window_validation():
    with pytest.raises(InputError):
        ProtocolConfig(acclim_min_s=900, acclim_max_s=600)
    with pytest.raises(InputError):
        ProtocolConfig(capture_period_s=0)


# --- env checkpoints ---------------------------------------------------------

def test_env_reading_stored():
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0, 20.4, 36.8)
    assert s.env[0].temp_c == 20.4
    assert s.env[0].humidity_pct == 36.8


def test_duplicate_checkpoint_rejected():
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0)
    with pytest.raises(StateError, match="already recorded"):
        env(s, EnvCheckpoint.START_ACCLIMATIZATION, T0)


def test_out_of_band_humidity_rejected_with_band():
    with pytest.raises(InputError, match=r"\[10.0, 90.0\]"):
        EnvReading(checkpoint=EnvCheckpoint.START_ACCLIMATIZATION,
                   temp_c=21.0, humidity_pct=95.0)


def test_out_of_position_checkpoint_rejected():
    with pytest.raises(StateError, match="does not match"):
        env(start_session(), EnvCheckpoint.FINAL_RESPONSE, T0)


# --- capture scheduling ------------------------------------------------------

def test_next_capture_due_simple_arithmetic():
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0)
    t = T0 + timedelta(seconds=120)
    s = do(s, build_record_capture, "frames/0001.raw", t)
    assert next_capture_due(s, t) == t + timedelta(seconds=60)


def test_next_capture_due_after_phase_start():
    s = run_until_stimulus_open()
    t = s.open_phase.started
    s = do(s, build_record_capture, "frames/x.raw", t, CaptureRole.PHASE_START)
    assert next_capture_due(s, t) == t + timedelta(seconds=60)


def test_next_capture_none_at_acclim_max():
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0)
    t = T0
    for i in range(16):  # captures at 0..900 s
        s = do(s, build_record_capture, f"frames/{i:04d}.raw", t)
        t += timedelta(seconds=60)
    # last capture sits at the 15-minute boundary: nothing further is due
    assert next_capture_due(s, T0 + timedelta(seconds=900)) is None


def test_first_capture_requires_start_env():
    s = start_session()
    with pytest.raises(StateError, match="start_acclimatization"):
        do(s, build_record_capture, "frames/0001.raw", T0)


def test_capture_deviation_recorded_not_fatal():
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0)
    s = do(s, build_record_capture, "frames/0001.raw", T0)
    late = T0 + timedelta(seconds=68)  # 8 s past the 60 s mark
    s = do(s, build_record_capture, "frames/0002.raw", late)
    assert len(s.deviations) == 1
    assert "+8.0 s" in s.deviations[0]
    on_time = late + timedelta(seconds=60)
    s = do(s, build_record_capture, "frames/0003.raw", on_time)
    assert len(s.deviations) == 1


def test_capture_on_completed_session_rejected():
    s = run_full_session()
    assert s.status == SessionStatus.COMPLETED
    with pytest.raises(StateError, match="completed"):
        do(s, build_record_capture, "frames/z.raw",
           T0 + timedelta(hours=2))


def test_capture_timestamps_strictly_increase():
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0)
    s = do(s, build_record_capture, "frames/0001.raw", T0 + timedelta(seconds=60))
    with pytest.raises(StateError, match="strictly increase"):
        do(s, build_record_capture, "frames/0002.raw", T0 + timedelta(seconds=60))


def run_until_stimulus_open(acclim_s=600):
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0)
    t = T0
    for i in range(11):
        s = do(s, build_record_capture, f"frames/{i:04d}.raw", t)
        if i < 10:
            t += timedelta(seconds=60)
    return do(s, build_advance_phase, t)


def test_stimulus_first_capture_must_be_phase_start():
    s = run_until_stimulus_open()
    t = s.open_phase.started
    with pytest.raises(StateError, match="phase_start"):
        do(s, build_record_capture, "frames/x.raw", t, CaptureRole.SCHEDULED)


def test_no_captures_after_stimulus_end_image():
    s = run_until_stimulus_open()
    t = s.open_phase.started
    s = do(s, build_record_capture, "frames/x.raw", t, CaptureRole.PHASE_START)
    t += timedelta(seconds=180)
    s = do(s, build_record_capture, "frames/y.raw", t, CaptureRole.PHASE_END)
    with pytest.raises(StateError, match="end image already"):
        do(s, build_record_capture, "frames/z.raw", t + timedelta(seconds=5))


def test_phase_end_only_in_stimulus():
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0)
    with pytest.raises(StateError, match="acclimatization"):
        do(s, build_record_capture, "frames/x.raw", T0, CaptureRole.PHASE_END)


# --- advancing ---------------------------------------------------------------

def test_acclimatization_minimum_enforced():
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0)
    s = do(s, build_record_capture, "frames/1.raw", T0)
    s = do(s, build_record_capture, "frames/2.raw", T0 + timedelta(seconds=60))
    with pytest.raises(StateError, match="acclimatization incomplete"):
        do(s, build_advance_phase, T0 + timedelta(seconds=599))


def test_acclimatization_at_exactly_ten_minutes_advances():
    s = run_until_stimulus_open()
    assert s.open_phase.kind == PhaseKind.STIMULUS
    assert s.phases[0].duration_s() == 600.0


def test_stimulus_too_short_rejected():
    s = run_until_stimulus_open()
    t = s.open_phase.started
    s = env(s, EnvCheckpoint.START_STIMULUS, t)
    s = do(s, build_record_capture, "frames/x.raw", t, CaptureRole.PHASE_START)
    t += timedelta(seconds=90)
    s = do(s, build_record_capture, "frames/y.raw", t, CaptureRole.PHASE_END)
    s = env(s, EnvCheckpoint.FINAL_STIMULUS, t)
    with pytest.raises(StateError, match="too short"):
        do(s, build_advance_phase, t)


def test_stimulus_over_maximum_rejected():
    s = run_until_stimulus_open()
    t = s.open_phase.started
    s = env(s, EnvCheckpoint.START_STIMULUS, t)
    s = do(s, build_record_capture, "frames/x.raw", t, CaptureRole.PHASE_START)
    t += timedelta(seconds=601)
    s = do(s, build_record_capture, "frames/y.raw", t, CaptureRole.PHASE_END)
    s = env(s, EnvCheckpoint.FINAL_STIMULUS, t)
    with pytest.raises(StateError, match="maximum"):
        do(s, build_advance_phase, t)


def test_advance_requires_env_checkpoints():
    s = run_until_stimulus_open()
    t = s.open_phase.started
    s = do(s, build_record_capture, "frames/x.raw", t, CaptureRole.PHASE_START)
    t += timedelta(seconds=300)
    s = do(s, build_record_capture, "frames/y.raw", t, CaptureRole.PHASE_END)
    with pytest.raises(StateError, match="missing environment checkpoint"):
        do(s, build_advance_phase, t)


def test_advance_requires_stimulus_end_image():
    s = run_until_stimulus_open()
    t = s.open_phase.started
    s = env(s, EnvCheckpoint.START_STIMULUS, t)
    s = do(s, build_record_capture, "frames/x.raw", t, CaptureRole.PHASE_START)
    t += timedelta(seconds=60)
    s = do(s, build_record_capture, "frames/y.raw", t)
    s = env(s, EnvCheckpoint.FINAL_STIMULUS, t)
    with pytest.raises(StateError, match="end image missing"):
        do(s, build_advance_phase, t + timedelta(seconds=120))


def test_completed_session_satisfies_invariants():
    s = run_full_session(stimulus_s=512)
    assert s.status == SessionStatus.COMPLETED
    assert [p.kind for p in s.phases] == [PhaseKind.ACCLIMATIZATION,
                                          PhaseKind.STIMULUS, PhaseKind.RESPONSE]
    assert len(s.env) == 4
    assert s.phases[0].duration_s() >= 600
    assert 120 <= s.phases[1].duration_s() <= 600
    assert all(len(p.captures) >= 2 for p in s.phases)


def test_abort_any_time_preserves_data():
    s = env(start_session(), EnvCheckpoint.START_ACCLIMATIZATION, T0)
    s = do(s, build_record_capture, "frames/1.raw", T0)
    s = do(s, build_abort, T0 + timedelta(seconds=90), "fire drill")
    assert s.status == SessionStatus.ABORTED
    assert s.abort_reason == "fire drill"
    assert len(s.captures) == 1
    summary = session_summary(s)
    assert summary.incomplete


def test_summary_counts_and_duration_format():
    s = run_full_session(stimulus_s=512)
    summary = session_summary(s)
    assert summary.stimulus_duration_text == "8'32''"
    assert summary.expected_stimulus_captures == 10
    assert summary.capture_count_mismatch  # only 2 stimulus images here
    assert summary.total_captures == sum(summary.captures_per_phase.values())


def test_summary_requires_terminal_state():
    with pytest.raises(StateError):
        session_summary(start_session())


def test_expected_capture_formula():
    assert expected_stimulus_captures(512) == 10
    assert expected_stimulus_captures(120) == 4
    assert format_minsec(512) == "8'32''"
    assert format_minsec(None) == "-"


# --- event log ---------------------------------------------------------------

def test_replay_reproduces_session_and_bytes():
    events = []
    session = None
    event = build_start(session_id="s1", emotion=EmotionLabel.ANGER,
                        stimulus=Stimulus(StimulusKind.MUSIC, "track"),
                        checklist=SubjectChecklist.all_confirmed(),
                        config=ProtocolConfig(), now=T0,
                        subject=SubjectMeta(subject_id="subj-1", age_years=32))
    events.append(event)
    session = apply_event(session, event)
    event = build_record_env(
        session, EnvReading(checkpoint=EnvCheckpoint.START_ACCLIMATIZATION,
                            temp_c=18.7, humidity_pct=38.4), T0)
    events.append(event)
    session = apply_event(session, event)
    event = build_record_capture(session, "frames/0001.raw", T0)
    events.append(event)
    session = apply_event(session, event)

    text = dump_log(events)
    replayed = replay(parse_log(text))
    assert replayed == session
    assert dump_log(parse_log(text)) == text


def test_replay_rejects_sequence_gap():
    s = start_session()
    good = build_record_env(
        s, EnvReading(checkpoint=EnvCheckpoint.START_ACCLIMATIZATION,
                      temp_c=20.0, humidity_pct=30.0), T0)
    text = dump_log([build_start(
        session_id="s0001", emotion=EmotionLabel.JOY,
        stimulus=Stimulus(StimulusKind.VIDEO), checklist=SubjectChecklist.all_confirmed(),
        config=ProtocolConfig(), now=T0)])
    tampered = text + dump_log([good]).replace('"seq":2', '"seq":3')
    with pytest.raises(IntegrityError, match="gap"):
        replay(parse_log(tampered))


# --- store-level behavior ----------------------------------------------------

def test_store_idempotent_commands(tmp_path):
    store = SessionStore(tmp_path, clock=SimulatedClock(T0))
    sid = store.start_session(
        emotion=EmotionLabel.JOY, stimulus=Stimulus(StimulusKind.VIDEO),
        checklist=SubjectChecklist.all_confirmed()).session_id
    store.record_env(sid, EnvCheckpoint.START_ACCLIMATIZATION, 20.0, 35.0)
    first = store.record_capture(sid, request_id="rq-1")
    second = store.record_capture(sid, request_id="rq-1")
    assert first == second
    assert len(store.session(sid).captures) == 1


def test_store_rest_gap_warning(tmp_path):
    clock = SimulatedClock(T0)
    store = SessionStore(tmp_path, clock=clock)
    subject = SubjectMeta(subject_id="subj-1")
    sid = store.start_session(
        emotion=EmotionLabel.JOY, stimulus=Stimulus(StimulusKind.VIDEO),
        checklist=SubjectChecklist.all_confirmed(), subject=subject).session_id
    store.abort(sid, "cut short")
    clock.advance(3600)  # one hour: inside the two-hour rest window
    warned = store.start_session(
        emotion=EmotionLabel.FEAR, stimulus=Stimulus(StimulusKind.VIDEO),
        checklist=SubjectChecklist.all_confirmed(), subject=subject)
    assert any("two-hour rest" in w for w in warned.warnings)
    clock.advance(2 * 3600)
    clear = store.start_session(
        emotion=EmotionLabel.ANGER, stimulus=Stimulus(StimulusKind.VIDEO),
        checklist=SubjectChecklist.all_confirmed(), subject=subject)
    assert clear.warnings == ()


def test_store_session_ids_sequential(tmp_path):
    store = SessionStore(tmp_path, clock=SimulatedClock(T0))
    a = store.start_session(emotion=EmotionLabel.JOY,
                            stimulus=Stimulus(StimulusKind.VIDEO),
                            checklist=SubjectChecklist.all_confirmed()).session_id
    b = store.start_session(emotion=EmotionLabel.FEAR,
                            stimulus=Stimulus(StimulusKind.MUSIC),
                            checklist=SubjectChecklist.all_confirmed()).session_id
    assert (a, b) == ("s0001", "s0002")
