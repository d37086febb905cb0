// Countdown math anchored to the server clock. Every state poll resyncs the
// anchor, so display drift against the server stays within the poll period's
// single round trip rather than accumulating.

export class ServerClock {
  private serverAnchorMs: number;
  private localAnchorMs: number;

  constructor(serverNowIso: string, localNowMs: number = Date.now()) {
    this.serverAnchorMs = Date.parse(serverNowIso);
    this.localAnchorMs = localNowMs;
  }

  resync(serverNowIso: string, localNowMs: number = Date.now()): void {
    this.serverAnchorMs = Date.parse(serverNowIso);
    this.localAnchorMs = localNowMs;
  }

  /** Best estimate of the server's current epoch milliseconds. */
  nowMs(localNowMs: number = Date.now()): number {
    return this.serverAnchorMs + (localNowMs - this.localAnchorMs);
  }

  secondsUntil(targetIso: string, localNowMs: number = Date.now()): number {
    return (Date.parse(targetIso) - this.nowMs(localNowMs)) / 1000;
  }

  secondsSince(startIso: string, localNowMs: number = Date.now()): number {
    return (this.nowMs(localNowMs) - Date.parse(startIso)) / 1000;
  }
}

export function formatCountdown(seconds: number): string {
  const overdue = seconds < 0;
  const magnitude = Math.abs(Math.round(seconds));
  const text = `${Math.floor(magnitude / 60)}:${String(magnitude % 60).padStart(2, "0")}`;
  return overdue ? `overdue ${text}` : text;
}
