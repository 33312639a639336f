// Scripted frame sequences against the HUD reducer: glyph visibility
// must track event lifetimes within one frame, and warning and approval
// imagery must never show together.

import { describe, expect, it } from "vitest";
import { approvalVisible, hudFromFrame, warningVisible } from "../src/hud.js";
import type {
  Direction, EventState, FrameMessage,
} from "../src/protocol.js";
import { DIRECTIONS, LCL, LCR } from "../src/protocol.js";

const EVENT_TICKS = 40; // display lifetime at 20 Hz

function makeFrame(tick: number, events: EventState[]): FrameMessage {
  return {
    type: "frame",
    v: 1,
    tick,
    ego: {
      id: 0, lane: 2, s: 100 + tick, y: 3.5, v: 120,
      heading: 0, steering: 0, indicator: 0, gear: 5,
    },
    vehicles: [],
    events,
    pred: 0,
  };
}

/** Stream one event the way the bridge does: present while remaining > 0. */
function streamed(
  issued: number, lifetime: number, ev: Omit<EventState, "remaining">,
): (tick: number) => EventState[] {
  return (tick) => {
    const remaining = issued + lifetime - tick;
    if (tick < issued || remaining <= 0) return [];
    return [{ ...ev, remaining }];
  };
}

describe("glyph lifetime", () => {
  it("warning glyph shows for exactly the event lifetime (within 1 frame)", () => {
    const events = streamed(100, EVENT_TICKS, {
      kind: "warning", intention: LCL, directions: ["fl"], audio: true,
    });
    const visibleAt: number[] = [];
    for (let tick = 80; tick < 180; tick++) {
      const hud = hudFromFrame(makeFrame(tick, events(tick)));
      if (warningVisible(hud, "fl")) visibleAt.push(tick);
    }
    expect(Math.abs(visibleAt.length - EVENT_TICKS)).toBeLessThanOrEqual(1);
    expect(visibleAt[0]).toBe(100);
    expect(visibleAt[visibleAt.length - 1]).toBe(100 + EVENT_TICKS - 1);
    // contiguous: no flicker inside the event's life
    for (let i = 1; i < visibleAt.length; i++) {
      expect(visibleAt[i]).toBe(visibleAt[i - 1] + 1);
    }
  });

  it("approval glyph tracks its lifetime too", () => {
    const events = streamed(40, EVENT_TICKS, {
      kind: "approval", intention: LCR,
      directions: ["f", "b", "fr", "br"], audio: false,
    });
    let visible = 0;
    for (let tick = 20; tick < 120; tick++) {
      const hud = hudFromFrame(makeFrame(tick, events(tick)));
      if (approvalVisible(hud)) visible++;
    }
    expect(Math.abs(visible - EVENT_TICKS)).toBeLessThanOrEqual(1);
  });

  it("a multi-direction warning lights each named direction and no other", () => {
    const hud = hudFromFrame(makeFrame(7, [{
      kind: "warning", intention: LCL, directions: ["fl", "bl"],
      remaining: 12, audio: true,
    }]));
    for (const d of DIRECTIONS) {
      expect(warningVisible(hud, d)).toBe(d === "fl" || d === "bl");
    }
  });

  it("overlapping warnings on one direction keep the longest remaining", () => {
    const hud = hudFromFrame(makeFrame(0, [
      { kind: "warning", intention: LCL, directions: ["bl"],
        remaining: 5, audio: true },
      { kind: "warning", intention: LCL, directions: ["bl", "fl"],
        remaining: 30, audio: true },
    ]));
    expect(hud.warnings.bl).toBe(30);
    expect(hud.warnings.fl).toBe(30);
  });

  it("an expired event renders nothing even if a frame still carries it", () => {
    const hud = hudFromFrame(makeFrame(0, [{
      kind: "warning", intention: LCL, directions: ["f"],
      remaining: 0, audio: true,
    }]));
    for (const d of DIRECTIONS) expect(warningVisible(hud, d)).toBe(false);
  });
});

describe("warning/approval exclusion", () => {
  it("holds on every frame of an overlapping scripted sequence", () => {
    const warn = streamed(120, EVENT_TICKS, {
      kind: "warning", intention: LCR, directions: ["fr"], audio: true,
    });
    const appr = streamed(100, 3 * EVENT_TICKS, {
      kind: "approval", intention: LCR,
      directions: ["f", "b", "fr", "br"], audio: false,
    });
    let approvalFrames = 0;
    let warningFrames = 0;
    for (let tick = 90; tick < 240; tick++) {
      const hud = hudFromFrame(
        makeFrame(tick, [...warn(tick), ...appr(tick)]),
      );
      const anyWarning = DIRECTIONS.some((d) => warningVisible(hud, d));
      expect(anyWarning && approvalVisible(hud)).toBe(false);
      if (anyWarning) warningFrames++;
      if (approvalVisible(hud)) approvalFrames++;
    }
    // the approval still shows outside the warning's life, never inside
    expect(warningFrames).toBe(EVENT_TICKS);
    expect(approvalFrames).toBe(3 * EVENT_TICKS - EVENT_TICKS);
  });

  it("carries speed, prediction, and indicator through to the HUD", () => {
    const frame = makeFrame(5, []);
    frame.ego.v = 133.2;
    frame.ego.indicator = 1;
    frame.pred = LCL;
    const hud = hudFromFrame(frame);
    expect(hud.speedKmh).toBeCloseTo(133.2);
    expect(hud.indicator).toBe(1);
    expect(hud.pred).toBe(LCL);
  });
});
