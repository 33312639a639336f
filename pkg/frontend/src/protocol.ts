// Wire types for the simulator bridge (JSON over a single WebSocket).
// Server messages are validated structurally; anything that does not
// parse into a known shape is reported as malformed and dropped so one
// bad frame can never wedge the cockpit.

export const PROTOCOL_VERSION = 1;

export type Direction = "f" | "b" | "fl" | "bl" | "fr" | "br";
export const DIRECTIONS: readonly Direction[] = [
  "f", "b", "fl", "bl", "fr", "br",
];

export const LK = 0;
export const LCL = 1;
export const LCR = 2;
export const INTENTION_NAMES: Record<number, string> = {
  [LK]: "LK",
  [LCL]: "LCL",
  [LCR]: "LCR",
};

export interface EgoState {
  id: number;
  lane: number;
  s: number;
  y: number;
  v: number; // km/h
  heading: number;
  steering: number;
  indicator: number;
  gear: number;
}

export interface NeighborState {
  id: number;
  lane: number;
  ds: number; // signed ring gap to the ego, m
  y: number;
  dv: number; // relative speed, km/h
  indicator: number;
}

export interface EventState {
  kind: "warning" | "approval";
  intention: number;
  directions: Direction[];
  remaining: number; // ticks of display life left
  audio: boolean;
}

export interface FrameMessage {
  type: "frame";
  v: number;
  tick: number;
  ego: EgoState;
  vehicles: NeighborState[];
  events: EventState[];
  pred: number; // -1 when the run carries no model
}

export interface HelloMessage {
  type: "hello";
  v: number;
  tick_hz: number;
}

export type ServerMessage = FrameMessage | HelloMessage;

export interface ControlMessage {
  type: "control";
  v: 1;
  steering: number;
  throttle: number;
  brake: number;
  indicator: number;
  ts: number;
}

const isNum = (x: unknown): x is number =>
  typeof x === "number" && Number.isFinite(x);

function isEgo(x: unknown): x is EgoState {
  if (typeof x !== "object" || x === null) return false;
  const r = x as Record<string, unknown>;
  return (
    isNum(r.id) && isNum(r.lane) && isNum(r.s) && isNum(r.y) &&
    isNum(r.v) && isNum(r.heading) && isNum(r.steering) &&
    isNum(r.indicator) && isNum(r.gear)
  );
}

function isNeighbor(x: unknown): x is NeighborState {
  if (typeof x !== "object" || x === null) return false;
  const r = x as Record<string, unknown>;
  return (
    isNum(r.id) && isNum(r.lane) && isNum(r.ds) && isNum(r.y) &&
    isNum(r.dv) && isNum(r.indicator)
  );
}

function isEvent(x: unknown): x is EventState {
  if (typeof x !== "object" || x === null) return false;
  const r = x as Record<string, unknown>;
  if (r.kind !== "warning" && r.kind !== "approval") return false;
  if (!isNum(r.intention) || !isNum(r.remaining)) return false;
  if (typeof r.audio !== "boolean") return false;
  return (
    Array.isArray(r.directions) &&
    r.directions.length > 0 &&
    r.directions.every((d) => (DIRECTIONS as readonly string[]).includes(d))
  );
}

/** Parse one server message; null means malformed (count it, keep going). */
export function parseMessage(raw: string): ServerMessage | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const r = msg as Record<string, unknown>;
  if (r.v !== PROTOCOL_VERSION) return null;
  if (r.type === "hello") {
    return isNum(r.tick_hz) ? (msg as HelloMessage) : null;
  }
  if (r.type === "frame") {
    const ok =
      isNum(r.tick) && isNum(r.pred) && isEgo(r.ego) &&
      Array.isArray(r.vehicles) && r.vehicles.every(isNeighbor) &&
      Array.isArray(r.events) && r.events.every(isEvent);
    return ok ? (msg as FrameMessage) : null;
  }
  return null;
}

const clamp = (x: number, lo: number, hi: number) =>
  Math.min(hi, Math.max(lo, x));

/** Build a schema-valid, range-clamped control message. */
export function makeControl(
  steering: number,
  throttle: number,
  brake: number,
  indicator: number,
  ts: number = Date.now(),
): ControlMessage {
  return {
    type: "control",
    v: 1,
    steering: clamp(steering, -1, 1),
    throttle: clamp(throttle, 0, 1),
    brake: clamp(brake, 0, 1),
    indicator: indicator === 1 || indicator === 2 ? indicator : 0,
    ts,
  };
}

/**
 * Stable identity for an event across the frames it lives in: the expiry
 * tick (frame tick + remaining) is constant for one event, so the key is
 * too. Used for one-shot audio.
 */
export function eventKey(frameTick: number, ev: EventState): string {
  return `${ev.kind}:${ev.intention}:${ev.directions.join("|")}:` +
    `${frameTick + ev.remaining}`;
}
