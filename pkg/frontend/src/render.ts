// Top-down canvas renderer. Ego-centered camera, road scrolling under
// it; three lanes drawn horizontally with lane 1 (leftmost) on top.
// Directional warning glyphs sit at the six neighbor positions around
// the ego icon, the approval arrow above it; red warns, green approves.

import type { HudState } from "./hud.js";
import type { Direction, FrameMessage } from "./protocol.js";
import { INTENTION_NAMES, LCL, LCR } from "./protocol.js";

const LANE_COUNT = 3;
const LANE_WIDTH_M = 3.5;
const VIEW_HALF_M = 130; // longitudinal half-window around the ego
const CAR_LEN_M = 4.6;
const CAR_WIDTH_M = 2.0;

const GLYPH_OFFSETS: Record<Direction, [number, number]> = {
  f: [46, 0],
  b: [-46, 0],
  fl: [34, -30],
  bl: [-34, -30],
  fr: [34, 30],
  br: [-34, 30],
};

export class Renderer {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas unavailable");
    this.ctx = ctx;
  }

  draw(frame: FrameMessage, hud: HudState, status: string): void {
    const { ctx, canvas } = this;
    const W = canvas.width;
    const H = canvas.height;
    const pxPerM = W / (2 * VIEW_HALF_M);
    const roadH = LANE_COUNT * LANE_WIDTH_M * 9; // 9 px per lateral meter
    const roadTop = (H - roadH) / 2;
    const laneH = roadH / LANE_COUNT;
    // lateral meters -> px: y_m = LANE_WIDTH*(LANE_COUNT - lane), lane 1 top
    const yPx = (yM: number) =>
      roadTop + (LANE_COUNT * LANE_WIDTH_M - LANE_WIDTH_M / 2 - yM) *
      (laneH / LANE_WIDTH_M);
    const xPx = (dsM: number) => W / 2 + dsM * pxPerM;

    ctx.fillStyle = "#101418";
    ctx.fillRect(0, 0, W, H);
    ctx.fillStyle = "#2a2f36";
    ctx.fillRect(0, roadTop, W, roadH);

    // scrolling dashes keyed to the ego's absolute position
    ctx.strokeStyle = "#aab2bd";
    ctx.lineWidth = 2;
    const dash = 12 * pxPerM;
    const phase = -((frame.ego.s * pxPerM) % (2 * dash));
    for (let i = 1; i < LANE_COUNT; i++) {
      ctx.setLineDash([dash, dash]);
      ctx.lineDashOffset = phase;
      ctx.beginPath();
      ctx.moveTo(0, roadTop + i * laneH);
      ctx.lineTo(W, roadTop + i * laneH);
      ctx.stroke();
    }
    ctx.setLineDash([]);
    ctx.strokeStyle = "#e8edf2";
    ctx.strokeRect(0, roadTop, W, roadH);

    for (const nb of frame.vehicles) {
      this.car(xPx(nb.ds), yPx(nb.y), "#7f8c9a", nb.indicator);
    }
    this.car(xPx(0), yPx(frame.ego.y), "#4da3ff", frame.ego.indicator,
      frame.ego.heading);

    this.hudLayer(W / 2, yPx(frame.ego.y), hud);
    this.panel(frame, hud, status, W, H);
  }

  private car(
    x: number, y: number, color: string, indicator: number,
    heading = 0,
  ): void {
    const { ctx } = this;
    const pxPerM = this.canvas.width / (2 * VIEW_HALF_M);
    const len = CAR_LEN_M * pxPerM;
    const wid = CAR_WIDTH_M * 9;
    ctx.save();
    ctx.translate(x, y);
    ctx.rotate(-heading); // heading left = up on screen
    ctx.fillStyle = color;
    ctx.fillRect(-len / 2, -wid / 2, len, wid);
    if (indicator === 1 || indicator === 2) {
      // blink ~2 Hz off the wall clock; left indicator = top edge
      if (Math.floor(Date.now() / 250) % 2 === 0) {
        ctx.fillStyle = "#ffb300";
        const edge = indicator === 1 ? -wid / 2 - 4 : wid / 2;
        ctx.fillRect(-len / 2, edge, len, 4);
      }
    }
    ctx.restore();
  }

  private hudLayer(egoX: number, egoY: number, hud: HudState): void {
    const { ctx } = this;
    for (const [dir, off] of Object.entries(GLYPH_OFFSETS)) {
      if ((hud.warnings[dir as Direction] ?? 0) <= 0) continue;
      const [dx, dy] = off;
      this.wedge(egoX + dx, egoY + dy, Math.atan2(dy, dx), "#ff3b30");
    }
    if (hud.approval !== null) {
      const arrow = hud.approval.intention === LCL ? "↖" :
        hud.approval.intention === LCR ? "↗" : "↑";
      ctx.fillStyle = "#2ecc71";
      ctx.font = "bold 34px system-ui, sans-serif";
      ctx.textAlign = "center";
      ctx.fillText(arrow, egoX, egoY - 44);
    }
  }

  private wedge(x: number, y: number, angle: number, color: string): void {
    const { ctx } = this;
    ctx.save();
    ctx.translate(x, y);
    ctx.rotate(angle);
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.moveTo(12, 0);
    ctx.lineTo(-8, -9);
    ctx.lineTo(-8, 9);
    ctx.closePath();
    ctx.fill();
    ctx.restore();
  }

  private panel(
    frame: FrameMessage, hud: HudState, status: string,
    W: number, H: number,
  ): void {
    const { ctx } = this;
    ctx.fillStyle = "#e8edf2";
    ctx.font = "16px ui-monospace, monospace";
    ctx.textAlign = "left";
    ctx.fillText(`${hud.speedKmh.toFixed(0)} km/h`, 16, H - 40);
    ctx.fillText(`gear ${frame.ego.gear}  lane ${frame.ego.lane}`, 16,
      H - 18);
    const pred = hud.pred < 0 ? "--" : INTENTION_NAMES[hud.pred] ?? "?";
    ctx.textAlign = "right";
    ctx.fillText(`intent ${pred}`, W - 16, H - 40);
    ctx.fillText(status, W - 16, H - 18);
  }
}
