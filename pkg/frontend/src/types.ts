// JSON shapes exchanged with the local conductor service.

export type PhaseKind = "acclimatization" | "stimulus" | "response";
export type SessionStatus = "draft" | "running" | "completed" | "aborted";
export type CaptureRole = "scheduled" | "phase_start" | "phase_end";
export type EnvCheckpoint =
  | "start_acclimatization"
  | "start_stimulus"
  | "final_stimulus"
  | "final_response";

export interface LiveState {
  session_id: string;
  version: number;
  status: SessionStatus;
  emotion: string;
  stimulus: { kind: string; descriptor: string };
  server_time: string;
  phase: PhaseKind | null;
  phase_started: string | null;
  phase_elapsed_s: number | null;
  phase_min_s: number | null;
  phase_max_s: number | null;
  next_capture_due: string | null;
  seconds_to_next_capture: number | null;
  pending_checkpoint: EnvCheckpoint | null;
  advance_blocked_reason: string | null;
  captures_per_phase: Record<string, number>;
  total_captures: number;
  recorded_checkpoints: string[];
  deviations: string[];
  notes: { time: string; text: string }[];
  latest_stats: {
    frame_ref: string;
    time: string;
    regions: Record<string, { min_c: number; max_c: number; mean_c: number; valid_pixel_fraction: number }>;
  } | null;
}

export interface CommandOutcome {
  session_id: string;
  version: number;
  status: SessionStatus;
  warnings: string[];
}

export interface ClockInfo {
  now: string;
  simulated: boolean;
}

export interface Checklist {
  hair_tied_back: boolean;
  no_makeup: boolean;
  no_face_cream: boolean;
  no_recent_exercise: boolean;
  no_stimulants_last_hour: boolean;
  informed_consent_signed: boolean;
}

export interface StartSessionPayload {
  request_id: string;
  emotion: string;
  stimulus_kind: string;
  stimulus_descriptor?: string;
  date?: string | null;
  subject?: { subject_id?: string | null; age_years?: number | null; gender?: string | null } | null;
  checklist: Checklist;
  config?: Record<string, number>;
  session_id?: string | null;
}

export interface CommandBody {
  request_id: string;
  verb: "record_env" | "confirm_capture" | "advance_phase" | "abort" | "note";
  checkpoint?: EnvCheckpoint;
  temp_c?: number;
  humidity_pct?: number;
  role?: CaptureRole;
  frame_ref?: string;
  text?: string;
  reason?: string;
}

export interface SessionListEntry {
  session_id: string;
  emotion: string;
  stimulus: { kind: string; descriptor: string };
  status: SessionStatus;
  date: string;
  version: number;
}

export interface RenderIndexEntry {
  seq: number;
  path: string;
  time: string;
  phase: PhaseKind;
}

export interface RenderIndex {
  scale_min_c: number;
  scale_max_c: number;
  renders: RenderIndexEntry[];
  roi_layout: { label: string; x: number; y: number; w: number; h: number }[];
}

export interface SessionSummary {
  session_id: string;
  emotion: string;
  stimulus: { kind: string; descriptor: string };
  date: string;
  status: SessionStatus;
  stimulus_duration: string;
  stimulus_captures: number;
  total_captures: number;
  expected_stimulus_captures: number | null;
  capture_count_mismatch: boolean;
  captures_per_phase: Record<string, number>;
  deviations: string[];
  incomplete: boolean;
}

export interface EventRecord {
  version: number;
  time: string;
  type: string;
  payload: unknown;
}
