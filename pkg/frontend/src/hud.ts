// HUD state derivation. The server only streams live events, so glyph
// visibility follows the frame's event list directly: a direction's
// warning glyph shows while any warning event covering it has remaining
// ticks, an approval arrow shows for a live approval. Warnings and
// approvals are mutually exclusive on screen; if a frame ever carried
// both, warnings win and the approval is suppressed.

import type { Direction, FrameMessage } from "./protocol.js";

export interface HudState {
  /** remaining display ticks per warned direction (absent = no glyph) */
  warnings: Partial<Record<Direction, number>>;
  /** live approval, or null (always null while any warning shows) */
  approval: { intention: number; remaining: number } | null;
  pred: number;
  speedKmh: number;
  indicator: number;
}

export function hudFromFrame(frame: FrameMessage): HudState {
  const warnings: Partial<Record<Direction, number>> = {};
  let approval: HudState["approval"] = null;
  for (const ev of frame.events) {
    if (ev.remaining <= 0) continue;
    if (ev.kind === "warning") {
      for (const d of ev.directions) {
        const cur = warnings[d];
        if (cur === undefined || ev.remaining > cur) {
          warnings[d] = ev.remaining;
        }
      }
    } else if (approval === null || ev.remaining > approval.remaining) {
      approval = { intention: ev.intention, remaining: ev.remaining };
    }
  }
  if (Object.keys(warnings).length > 0) {
    approval = null;
  }
  return {
    warnings,
    approval,
    pred: frame.pred,
    speedKmh: frame.ego.v,
    indicator: frame.ego.indicator,
  };
}

export function warningVisible(hud: HudState, d: Direction): boolean {
  return (hud.warnings[d] ?? 0) > 0;
}

export function approvalVisible(hud: HudState): boolean {
  return hud.approval !== null;
}
