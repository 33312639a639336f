// Bridge connection: latest frame wins, malformed messages are counted
// and skipped with the last good frame retained, and the socket reopens
// with a short backoff if the server restarts.

import type { FrameMessage, HelloMessage } from "./protocol.js";
import { parseMessage } from "./protocol.js";

export interface BridgeHandlers {
  onHello?: (msg: HelloMessage) => void;
  onFrame?: (msg: FrameMessage) => void;
  onStatus?: (connected: boolean) => void;
}

export class BridgeClient {
  lastFrame: FrameMessage | null = null;
  malformed = 0;
  connected = false;
  private ws: WebSocket | null = null;
  private closed = false;

  constructor(private url: string, private handlers: BridgeHandlers) {
    this.open();
  }

  private open(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.connected = true;
      this.handlers.onStatus?.(true);
    };
    ws.onmessage = (e: MessageEvent) => {
      if (typeof e.data !== "string") {
        this.malformed += 1;
        return;
      }
      const msg = parseMessage(e.data);
      if (msg === null) {
        this.malformed += 1;
        return;
      }
      if (msg.type === "hello") {
        this.handlers.onHello?.(msg);
      } else {
        this.lastFrame = msg;
        this.handlers.onFrame?.(msg);
      }
    };
    ws.onclose = () => {
      this.connected = false;
      this.handlers.onStatus?.(false);
      if (!this.closed) {
        setTimeout(() => this.open(), 1000);
      }
    };
    ws.onerror = () => ws.close();
  }

  send(obj: unknown): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(obj));
    }
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
