// Keyboard state machine: ramps, return-to-center, indicator latching.
// Samples are stepped at the 50 ms control period the cockpit uses.

import { describe, expect, it } from "vitest";
import { InputLoop } from "../src/input.js";

const DT = 0.05;

function run(loop: InputLoop, steps: number) {
  let last = loop.sample(DT, 0);
  for (let i = 1; i < steps; i++) last = loop.sample(DT, i);
  return last;
}

describe("steering", () => {
  it("is neutral with no keys held", () => {
    const loop = new InputLoop();
    for (let i = 0; i < 25; i++) {
      const c = loop.sample(DT, i);
      expect(c).toMatchObject({ steering: 0, throttle: 0, brake: 0,
                                indicator: 0 });
    }
  });

  it("ramps to full left lock and holds while the key stays down", () => {
    const loop = new InputLoop();
    loop.keyDown("ArrowLeft");
    const first = loop.sample(DT, 0);
    expect(first.steering).toBeLessThan(0);
    expect(first.steering).toBeGreaterThan(-1);
    const later = run(loop, 20);
    expect(later.steering).toBe(-1);
    expect(run(loop, 10).steering).toBe(-1);
  });

  it("returns to center after release", () => {
    const loop = new InputLoop();
    loop.keyDown("KeyD");
    run(loop, 20);
    loop.keyUp("KeyD");
    const settled = run(loop, 10);
    expect(settled.steering).toBe(0);
  });

  it("treats opposing keys as neutral input", () => {
    const loop = new InputLoop();
    loop.keyDown("ArrowLeft");
    run(loop, 20);
    loop.keyDown("ArrowRight");
    expect(run(loop, 10).steering).toBe(0);
  });

  it("never leaves the schema range mid-ramp", () => {
    const loop = new InputLoop();
    loop.keyDown("KeyA");
    for (let i = 0; i < 40; i++) {
      const c = loop.sample(DT, i);
      expect(c.steering).toBeGreaterThanOrEqual(-1);
      expect(c.steering).toBeLessThanOrEqual(1);
      if (i === 20) loop.keyUp("KeyA");
    }
  });
});

describe("pedals", () => {
  it("throttle ramps up while held and decays when released", () => {
    const loop = new InputLoop();
    loop.keyDown("KeyW");
    expect(run(loop, 10).throttle).toBe(1);
    loop.keyUp("KeyW");
    expect(run(loop, 10).throttle).toBe(0);
  });

  it("brake is independent of throttle", () => {
    const loop = new InputLoop();
    loop.keyDown("ArrowDown");
    const c = run(loop, 10);
    expect(c.brake).toBe(1);
    expect(c.throttle).toBe(0);
  });
});

describe("indicator latch", () => {
  it("left key sets 1 until toggled", () => {
    const loop = new InputLoop();
    loop.keyDown("KeyQ");
    loop.keyUp("KeyQ");
    expect(run(loop, 30).indicator).toBe(1);
    loop.keyDown("KeyQ");
    expect(loop.sample(DT).indicator).toBe(0);
  });

  it("right key sets 2; off key clears either side", () => {
    const loop = new InputLoop();
    loop.keyDown("KeyE");
    expect(loop.sample(DT).indicator).toBe(2);
    loop.keyDown("KeyX");
    expect(loop.sample(DT).indicator).toBe(0);
    loop.keyDown("KeyQ");
    loop.keyDown("KeyE"); // switching sides replaces, not stacks
    expect(loop.sample(DT).indicator).toBe(2);
  });
});
