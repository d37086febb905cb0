// View model and command surface for conducting one live session. Renders
// only server-acknowledged state: every mutation round-trips through the
// service and is followed by a state refresh, so the console can never walk
// the session into a state the protocol machine forbids.

import { ApiError, ServiceApi, newRequestId } from "./api.js";
import { ServerClock } from "./countdown.js";
import type { CaptureRole, CommandBody, CommandOutcome, LiveState } from "./types.js";
import { validateEnvReading, validateNote } from "./validation.js";

export const CAPTURE_PROMPT_WINDOW_S = 3;

export interface ConductView {
  status: string;
  version: number;
  phase: string | null;
  phaseElapsedS: number | null;
  phaseMinS: number | null;
  phaseMaxS: number | null;
  phaseMinReached: boolean;
  overMaximum: boolean;
  advanceEnabled: boolean;
  advanceBlockedReason: string | null;
  captureDueInS: number | null;
  captureDue: boolean;
  pendingCheckpoint: string | null;
  capturesPerPhase: Record<string, number>;
  totalCaptures: number;
  deviations: string[];
  latestRegions: Record<string, { mean_c: number; min_c: number; max_c: number }> | null;
}

interface Pending {
  requestId: string;
  promise: Promise<CommandOutcome>;
}

export class ConductController {
  state: LiveState | null = null;
  serverClock: ServerClock | null = null;
  lastError: { code: string; message: string } | null = null;
  private pending = new Map<string, Pending>();

  constructor(
    private readonly api: ServiceApi,
    readonly sessionId: string,
    private readonly requestId: () => string = newRequestId,
  ) {}

  async refresh(localNowMs: number = Date.now()): Promise<LiveState> {
    const state = await this.api.state(this.sessionId);
    this.state = state;
    if (this.serverClock) {
      this.serverClock.resync(state.server_time, localNowMs);
    } else {
      this.serverClock = new ServerClock(state.server_time, localNowMs);
    }
    return state;
  }

  view(localNowMs: number = Date.now()): ConductView {
    const s = this.state;
    if (!s || !this.serverClock) {
      throw new Error("refresh() before rendering");
    }
    const elapsed = s.phase_started
      ? this.serverClock.secondsSince(s.phase_started, localNowMs)
      : null;
    const dueIn = s.next_capture_due
      ? this.serverClock.secondsUntil(s.next_capture_due, localNowMs)
      : null;
    const minReached = elapsed !== null && s.phase_min_s !== null && elapsed >= s.phase_min_s;
    const overMax = elapsed !== null && s.phase_max_s !== null && elapsed > s.phase_max_s;
    return {
      status: s.status,
      version: s.version,
      phase: s.phase,
      phaseElapsedS: elapsed,
      phaseMinS: s.phase_min_s,
      phaseMaxS: s.phase_max_s,
      phaseMinReached: minReached,
      overMaximum: overMax,
      // the control unlocks only once the phase minimum is met; the server
      // still enforces every other rule on submit
      advanceEnabled: s.status === "running" && minReached,
      advanceBlockedReason: s.advance_blocked_reason,
      captureDueInS: dueIn,
      captureDue: dueIn !== null && dueIn <= CAPTURE_PROMPT_WINDOW_S,
      pendingCheckpoint: s.pending_checkpoint,
      capturesPerPhase: s.captures_per_phase,
      totalCaptures: s.total_captures,
      deviations: s.deviations,
      latestRegions: s.latest_stats ? s.latest_stats.regions : null,
    };
  }

  private async submit(kind: string, body: Omit<CommandBody, "request_id">): Promise<CommandOutcome> {
    // repeat clicks while a command is in flight reuse its request id, so
    // the server applies the action exactly once
    const existing = this.pending.get(kind);
    if (existing) {
      return existing.promise;
    }
    const requestId = this.requestId();
    const promise = this.api
      .command(this.sessionId, { ...body, request_id: requestId } as CommandBody)
      .then(async (outcome) => {
        this.lastError = null;
        await this.refresh();
        return outcome;
      })
      .catch(async (error) => {
        if (error instanceof ApiError) {
          this.lastError = { code: error.code, message: error.message };
          if (error.status === 409) {
            await this.refresh(); // show which rule blocked the action
          }
        }
        throw error;
      })
      .finally(() => {
        this.pending.delete(kind);
      });
    this.pending.set(kind, { requestId, promise });
    return promise;
  }

  private captureRole(): CaptureRole {
    const s = this.state;
    if (!s || !s.phase || s.phase === "acclimatization") {
      return "scheduled";
    }
    return (s.captures_per_phase[s.phase] ?? 0) === 0 ? "phase_start" : "scheduled";
  }

  confirmCapture(): Promise<CommandOutcome> {
    return this.submit("confirm_capture", {
      verb: "confirm_capture",
      role: this.captureRole(),
    });
  }

  recordStimulusEnd(): Promise<CommandOutcome> {
    return this.submit("stimulus_end", { verb: "confirm_capture", role: "phase_end" });
  }

  async recordEnv(tempC: number, humidityPct: number): Promise<CommandOutcome> {
    const verdict = validateEnvReading(tempC, humidityPct);
    if (!verdict.valid) {
      this.lastError = { code: "client_validation", message: verdict.message! };
      throw new Error(verdict.message);
    }
    const checkpoint = this.state?.pending_checkpoint;
    if (!checkpoint) {
      this.lastError = { code: "client_validation", message: "no pending checkpoint" };
      throw new Error("no pending checkpoint");
    }
    return this.submit("record_env", {
      verb: "record_env",
      checkpoint,
      temp_c: tempC,
      humidity_pct: humidityPct,
    });
  }

  /** Only callable when the view enables it; the server still has the veto. */
  advancePhase(localNowMs: number = Date.now()): Promise<CommandOutcome> {
    if (!this.view(localNowMs).advanceEnabled) {
      return Promise.reject(new Error("advance is disabled until the phase minimum"));
    }
    return this.forceAdvance();
  }

  /** Bypass the client-side guard; used to prove the server rejects it. */
  forceAdvance(): Promise<CommandOutcome> {
    return this.submit("advance_phase", { verb: "advance_phase" });
  }

  async addNote(text: string): Promise<CommandOutcome> {
    const verdict = validateNote(text);
    if (!verdict.valid) {
      this.lastError = { code: "client_validation", message: verdict.message! };
      throw new Error(verdict.message);
    }
    return this.submit("note", { verb: "note", text });
  }

  abort(reason: string): Promise<CommandOutcome> {
    return this.submit("abort", { verb: "abort", reason });
  }
}
