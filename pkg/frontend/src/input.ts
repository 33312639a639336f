// Keyboard to control-message state. Steering ramps toward full lock
// while a steer key is held and returns to center when released; the
// indicator is latched by dedicated keys (left/right toggle, explicit
// off) rather than held. sample() is driven by the send timer so the
// message stream stays schema-valid and range-clamped at >= 20 Hz.

import type { ControlMessage } from "./protocol.js";
import { makeControl } from "./protocol.js";

const STEER_RATE = 2.5; // full lock in 0.4 s
const CENTER_RATE = 5.0; // recenter in 0.2 s
const PEDAL_RATE = 4.0;

const LEFT = new Set(["ArrowLeft", "KeyA"]);
const RIGHT = new Set(["ArrowRight", "KeyD"]);
const THROTTLE = new Set(["ArrowUp", "KeyW"]);
const BRAKE = new Set(["ArrowDown", "KeyS"]);
const IND_LEFT = "KeyQ";
const IND_RIGHT = "KeyE";
const IND_OFF = "KeyX";

export class InputLoop {
  private held = new Set<string>();
  private steering = 0;
  private throttle = 0;
  private brake = 0;
  private indicator = 0;

  keyDown(code: string): void {
    if (code === IND_LEFT) {
      this.indicator = this.indicator === 1 ? 0 : 1;
    } else if (code === IND_RIGHT) {
      this.indicator = this.indicator === 2 ? 0 : 2;
    } else if (code === IND_OFF) {
      this.indicator = 0;
    } else {
      this.held.add(code);
    }
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  /** Advance held-key ramps by dt seconds and emit the next message. */
  sample(dtS: number, ts: number = Date.now()): ControlMessage {
    const any = (keys: Set<string>) =>
      [...keys].some((k) => this.held.has(k));
    const left = any(LEFT);
    const right = any(RIGHT);
    if (left !== right) {
      const target = left ? -1 : 1;
      const step = STEER_RATE * dtS;
      this.steering = left
        ? Math.max(target, this.steering - step)
        : Math.min(target, this.steering + step);
    } else {
      const step = CENTER_RATE * dtS;
      if (this.steering > 0) this.steering = Math.max(0, this.steering - step);
      else this.steering = Math.min(0, this.steering + step);
    }
    this.throttle = ramp(this.throttle, any(THROTTLE), dtS);
    this.brake = ramp(this.brake, any(BRAKE), dtS);
    return makeControl(
      this.steering, this.throttle, this.brake, this.indicator, ts,
    );
  }
}

function ramp(value: number, held: boolean, dtS: number): number {
  const step = PEDAL_RATE * dtS;
  return held ? Math.min(1, value + step) : Math.max(0, value - step);
}
