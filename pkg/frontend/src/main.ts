// Cockpit entry point: connect to the bridge named by the page query
// (?host=&port=), render each frame as it arrives, sample the keyboard
// at the server tick rate, and fire the collision-risk cue per warning.

import { AudioCue } from "./audio.js";
import { hudFromFrame } from "./hud.js";
import { InputLoop } from "./input.js";
import { BridgeClient } from "./net.js";
import { Renderer } from "./render.js";

const params = new URLSearchParams(location.search);
const host = params.get("host") ?? "127.0.0.1";
const port = params.get("port") ?? "8700";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLElement;
const renderer = new Renderer(canvas);
const input = new InputLoop();

let tickHz = 20;
let connected = false;
let unlocked = false; // becomes true on first user gesture
let audioCtx: AudioContext | null = null;

function collisionRisk(): void {
  // two quick tones approximating the spoken alert; autoplay rules mean
  // nothing can sound before the first interaction
  if (!unlocked) return;
  audioCtx = audioCtx ?? new AudioContext();
  const t0 = audioCtx.currentTime;
  for (const [at, freq] of [[0, 880], [0.16, 660]] as const) {
    const osc = audioCtx.createOscillator();
    const gain = audioCtx.createGain();
    osc.frequency.value = freq;
    gain.gain.setValueAtTime(0.25, t0 + at);
    gain.gain.exponentialRampToValueAtTime(0.001, t0 + at + 0.14);
    osc.connect(gain).connect(audioCtx.destination);
    osc.start(t0 + at);
    osc.stop(t0 + at + 0.15);
  }
}

const cue = new AudioCue(collisionRisk, () => {
  banner.textContent = "audio unavailable; visual warnings only";
  banner.hidden = false;
});

const client = new BridgeClient(`ws://${host}:${port}/`, {
  onHello: (msg) => {
    tickHz = msg.tick_hz;
    restartSendLoop();
  },
  onFrame: (frame) => cue.onFrame(frame),
  onStatus: (up) => {
    connected = up;
  },
});

let sendTimer: ReturnType<typeof setInterval> | null = null;
function restartSendLoop(): void {
  if (sendTimer !== null) clearInterval(sendTimer);
  const periodMs = 1000 / tickHz;
  sendTimer = setInterval(() => {
    client.send(input.sample(periodMs / 1000));
  }, periodMs);
}
restartSendLoop();

window.addEventListener("keydown", (e) => {
  unlocked = true;
  if (!e.repeat) input.keyDown(e.code);
  if (e.code.startsWith("Arrow")) e.preventDefault();
});
window.addEventListener("keyup", (e) => input.keyUp(e.code));
window.addEventListener("pointerdown", () => {
  unlocked = true;
});

function paint(): void {
  const frame = client.lastFrame;
  if (frame !== null) {
    const status = connected
      ? `tick ${frame.tick}  bad ${client.malformed}`
      : "disconnected";
    renderer.draw(frame, hudFromFrame(frame), status);
  }
  requestAnimationFrame(paint);
}
requestAnimationFrame(paint);
