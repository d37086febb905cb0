import { describe, expect, it } from "vitest";

import { ApiError, ServiceApi } from "../src/api.js";
import { ConductController } from "../src/conduct.js";
import type { CommandBody, LiveState } from "../src/types.js";

const T0 = "2019-02-21T10:00:00+00:00";

function liveState(overrides: Partial<LiveState> = {}): LiveState {
  return {
    session_id: "s0001",
    version: 3,
    status: "running",
    emotion: "joy",
    stimulus: { kind: "video", descriptor: "clip" },
    server_time: T0,
    phase: "acclimatization",
    phase_started: "2019-02-21T09:50:30+00:00", // 9:30 elapsed at T0
    phase_elapsed_s: 570,
    phase_min_s: 600,
    phase_max_s: 900,
    next_capture_due: "2019-02-21T10:00:02+00:00",
    seconds_to_next_capture: 2,
    pending_checkpoint: null,
    advance_blocked_reason: "acclimatization incomplete: 570 s < 600 s minimum",
    captures_per_phase: { acclimatization: 10 },
    total_captures: 10,
    recorded_checkpoints: ["start_acclimatization"],
    deviations: [],
    notes: [],
    latest_stats: null,
    ...overrides,
  };
}

/** In-memory stand-in for the service with scripted state and call capture. */
class FakeApi extends ServiceApi {
  calls: CommandBody[] = [];
  nextState: LiveState = liveState();
  failWith: ApiError | null = null;
  refreshes = 0;

  constructor() {
    super("http://unused", (() => {
      throw new Error("fake api never fetches");
    }) as unknown as typeof fetch);
  }

  override async state(): Promise<LiveState> {
    this.refreshes += 1;
    return this.nextState;
  }

  override async command(_sid: string, body: CommandBody) {
    this.calls.push(body);
    if (this.failWith) {
      throw this.failWith;
    }
    return {
      session_id: "s0001",
      version: this.nextState.version + 1,
      status: this.nextState.status,
      warnings: [],
    };
  }
}

async function controllerAt(state: LiveState): Promise<[ConductController, FakeApi]> {
  const api = new FakeApi();
  api.nextState = state;
  let n = 0;
  const controller = new ConductController(api, "s0001", () => `rq-${(n += 1)}`);
  await controller.refresh(0);
  return [controller, api];
}

describe("conduct view model", () => {
  it("disables advance before the phase minimum", async () => {
    const [controller] = await controllerAt(liveState());
    const view = controller.view(0);
    expect(view.phaseElapsedS).toBeCloseTo(570, 0);
    expect(view.phaseMinReached).toBe(false);
    expect(view.advanceEnabled).toBe(false);
    expect(view.advanceBlockedReason).toContain("acclimatization incomplete");
  });

  it("enables advance once the minimum elapses, without a new poll", async () => {
    const [controller] = await controllerAt(liveState());
    // 40 s of local time later the server-anchored elapsed passes 600 s
    const view = controller.view(40_000);
    expect(view.phaseMinReached).toBe(true);
    expect(view.advanceEnabled).toBe(true);
  });

  it("warns when the stimulus runs past its maximum", async () => {
    const [controller] = await controllerAt(liveState({
      phase: "stimulus",
      phase_started: "2019-02-21T09:49:55+00:00", // 10:05 elapsed
      phase_min_s: 120,
      phase_max_s: 600,
      advance_blocked_reason: "stimulus exceeded the 600 s maximum",
    }));
    const view = controller.view(0);
    expect(view.overMaximum).toBe(true);
    expect(view.phaseMinReached).toBe(true);
  });

  it("prompts when a capture is due within three seconds", async () => {
    const [controller] = await controllerAt(liveState());
    expect(controller.view(0).captureDue).toBe(true);
    const [quiet] = await controllerAt(liveState({
      next_capture_due: "2019-02-21T10:00:45+00:00",
      seconds_to_next_capture: 45,
    }));
    expect(quiet.view(0).captureDue).toBe(false);
  });
});

describe("command submission", () => {
  it("infers the phase-start role for the first stimulus capture", async () => {
    const [controller, api] = await controllerAt(liveState({
      phase: "stimulus",
      captures_per_phase: { acclimatization: 11, stimulus: 0 },
    }));
    await controller.confirmCapture();
    expect(api.calls[0].role).toBe("phase_start");
  });

  it("reuses one request id for a double-click", async () => {
    const [controller, api] = await controllerAt(liveState());
    const [a, b] = await Promise.all([
      controller.confirmCapture(),
      controller.confirmCapture(),
    ]);
    expect(api.calls.length).toBe(1);
    expect(a).toEqual(b);
  });

  it("rejects out-of-band env readings before any network call", async () => {
    const [controller, api] = await controllerAt(liveState({
      pending_checkpoint: "start_acclimatization",
    }));
    await expect(controller.recordEnv(21.0, 95.0)).rejects.toThrow("[10, 90]");
    expect(api.calls.length).toBe(0);
    expect(controller.lastError?.code).toBe("client_validation");
  });

  it("sends valid env readings against the pending checkpoint", async () => {
    const [controller, api] = await controllerAt(liveState({
      pending_checkpoint: "start_acclimatization",
    }));
    await controller.recordEnv(20.4, 36.8);
    expect(api.calls[0]).toMatchObject({
      verb: "record_env",
      checkpoint: "start_acclimatization",
      temp_c: 20.4,
      humidity_pct: 36.8,
    });
  });

  it("refreshes state and surfaces the rule when the server conflicts", async () => {
    const [controller, api] = await controllerAt(liveState());
    api.failWith = new ApiError("protocol_conflict",
      "acclimatization incomplete: 570 s < 600 s minimum", 409);
    const before = api.refreshes;
    await expect(controller.forceAdvance()).rejects.toThrow("incomplete");
    expect(controller.lastError?.code).toBe("protocol_conflict");
    expect(api.refreshes).toBeGreaterThan(before);
  });

  it("keeps the client-side advance guard", async () => {
    const [controller, api] = await controllerAt(liveState());
    await expect(controller.advancePhase(0)).rejects.toThrow("disabled");
    expect(api.calls.length).toBe(0);
  });
});
