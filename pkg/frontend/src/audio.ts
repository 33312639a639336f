// One-shot collision-risk audio. Each warning event plays the cue once
// when it first appears and never re-triggers while the same event stays
// live; approvals are always silent. The playback function is injected
// so the policy is testable without an AudioContext; if it throws or
// rejects, the cockpit drops to visual-only and warns once.

import type { FrameMessage } from "./protocol.js";
import { eventKey } from "./protocol.js";

export class AudioCue {
  private seen = new Map<string, number>(); // key -> expiry tick
  private failed = false;

  constructor(
    private play: () => void | Promise<void>,
    private onUnavailable: () => void = () => {},
  ) {}

  /** Returns how many playbacks this frame triggered. */
  onFrame(frame: FrameMessage): number {
    // forget events that expired so the set cannot grow unbounded
    for (const [key, expiry] of this.seen) {
      if (expiry <= frame.tick) this.seen.delete(key);
    }
    let fired = 0;
    for (const ev of frame.events) {
      if (ev.kind !== "warning" || !ev.audio || ev.remaining <= 0) continue;
      const key = eventKey(frame.tick, ev);
      if (this.seen.has(key)) continue;
      this.seen.set(key, frame.tick + ev.remaining);
      fired += 1;
      if (this.failed) continue;
      try {
        const p = this.play();
        if (p && typeof p.catch === "function") {
          p.catch(() => this.fail());
        }
      } catch {
        this.fail();
      }
    }
    return fired;
  }

  private fail(): void {
    if (!this.failed) {
      this.failed = true;
      this.onUnavailable();
    }
  }
}
