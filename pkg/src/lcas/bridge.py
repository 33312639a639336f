"""Real-time streaming boundary between the tick loop and a cockpit client.

A minimal single-client WebSocket server (RFC 6455, text frames only)
carrying JSON messages. The tick-loop side is wait-free: publish_frame
drops the oldest queued frame when the client lags (a cockpit must show
now, not a backlog), and latest_controls falls back to neutral when the
newest control message is older than 250 ms, so a vanished client can
never leave the throttle pinned.

Wire protocol (every message carries "type" and protocol version "v": 1):
  server -> client  {"type": "hello", "v": 1, "tick_hz": 20}
  server -> client  {"type": "frame", "v": 1, "tick": t, "ego": {...},
                     "vehicles": [...], "events": [...], "pred": -1|0|1|2}
  client -> server  {"type": "control", "v": 1, "steering": -1..1,
                     "throttle": 0..1, "brake": 0..1, "indicator": 0|1|2,
                     "ts": any}
A later connection replaces the current one; one session at a time.
"""

import base64
import hashlib
import json
import socket
import struct
import threading
import time
from collections import deque

from lcas.sim import NEIGHBOR_RANGE, TICK_HZ, ControlInput

PROTOCOL_VERSION = 1
DEFAULT_PORT = 8700
STALE_S = 0.25
QUEUE_CAP = 4

_WS_GUID = b"258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_OP_TEXT, _OP_CLOSE, _OP_PING, _OP_PONG = 0x1, 0x8, 0x9, 0xA


def make_frame(world, active_events, pred):
    """World snapshot + display state as a frame message dict."""
    tick = world.tick
    idx = world.index_of(0)
    L = world.road_length
    half = L / 2.0
    ego = {
        "id": 0,
        "lane": int(world.lane[idx]),
        "s": round(float(world.s[idx]), 2),
        "y": round(float(world.y[idx]), 3),
        "v": round(float(world.v[idx]) * 3.6, 2),
        "heading": round(float(world.heading[idx]), 4),
        "steering": round(float(world.steering[idx]), 4),
        "indicator": int(world.indicator[idx]),
        "gear": int(world.gear[idx]),
    }
    vehicles = []
    for i in range(len(world.ids)):
        if i == idx:
            continue
        ds = (float(world.s[i]) - float(world.s[idx])) % L
        if ds > half:
            ds -= L
        if abs(ds) > NEIGHBOR_RANGE:
            continue
        vehicles.append({
            "id": int(world.ids[i]),
            "lane": int(world.lane[i]),
            "ds": round(ds, 2),
            "y": round(float(world.y[i]), 3),
            "dv": round((float(world.v[i]) - float(world.v[idx])) * 3.6, 2),
            "indicator": int(world.indicator[i]),
        })
    vehicles.sort(key=lambda r: r["id"])
    events = [{
        "kind": e.kind,
        "intention": int(e.intention),
        "directions": list(e.directions),
        "remaining": int(e.expires_tick - tick),
        "audio": bool(e.audio),
    } for e in active_events]
    return {"type": "frame", "v": PROTOCOL_VERSION, "tick": int(tick),
            "ego": ego, "vehicles": vehicles, "events": events,
            "pred": int(pred)}


def _encode_text(payload):
    """Server-side text frame: FIN set, unmasked."""
    data = payload.encode("utf-8")
    n = len(data)
    if n < 126:
        head = struct.pack("!BB", 0x80 | _OP_TEXT, n)
    elif n < 1 << 16:
        head = struct.pack("!BBH", 0x80 | _OP_TEXT, 126, n)
    else:
        head = struct.pack("!BBQ", 0x80 | _OP_TEXT, 127, n)
    return head + data


def _encode_ctrl(opcode, data=b""):
    return struct.pack("!BB", 0x80 | opcode, len(data)) + data


class _Session:
    """One connected client: reader + writer threads around a socket."""

    def __init__(self, server, conn):
        self.server = server
        self.conn = conn
        self.alive = True
        self._cond = threading.Condition()
        self._frames = deque(maxlen=QUEUE_CAP)
        self._ctrl_out = deque()
        self._hello_sent = False

    # -- handshake ------------------------------------------------------

    def handshake(self):
        self.conn.settimeout(5.0)
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.conn.recv(4096)
            if not chunk:
                raise OSError("client hung up during handshake")
            data += chunk
            if len(data) > 65536:
                raise OSError("oversized handshake request")
        head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
        key = None
        for line in head.split("\r\n")[1:]:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-key":
                key = value.strip()
        if key is None:
            raise OSError("not a websocket upgrade request")
        accept = base64.b64encode(
            hashlib.sha1(key.encode("latin-1") + _WS_GUID).digest())
        self.conn.sendall(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\n"
            b"Connection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + accept + b"\r\n\r\n")
        self.conn.settimeout(None)

    def start(self):
        threading.Thread(target=self._reader_loop, daemon=True).start()
        threading.Thread(target=self._writer_loop, daemon=True).start()

    # -- tick-loop side (wait-free) --------------------------------------

    def enqueue_frame(self, frame):
        """Queue latest-wins; returns count of frames displaced."""
        with self._cond:
            dropped = 1 if len(self._frames) == QUEUE_CAP else 0
            self._frames.append(frame)
            self._cond.notify()
        return dropped

    def _enqueue_ctrl(self, raw):
        with self._cond:
            self._ctrl_out.append(raw)
            self._cond.notify()

    # -- network side -----------------------------------------------------

    def _recv_exact(self, n):
        buf = b""
        while len(buf) < n:
            chunk = self.conn.recv(n - len(buf))
            if not chunk:
                raise OSError("connection closed")
            buf += chunk
        return buf

    def _read_message(self):
        """One complete websocket message; returns (opcode, payload)."""
        payload = b""
        opcode = None
        while True:
            b1, b2 = self._recv_exact(2)
            op = b1 & 0x0F
            fin = b1 & 0x80
            masked = b2 & 0x80
            n = b2 & 0x7F
            if n == 126:
                (n,) = struct.unpack("!H", self._recv_exact(2))
            elif n == 127:
                (n,) = struct.unpack("!Q", self._recv_exact(8))
            if n > 1 << 20:
                raise OSError("oversized client frame")
            mask = self._recv_exact(4) if masked else None
            data = self._recv_exact(n) if n else b""
            if mask:
                data = bytes(c ^ mask[i % 4] for i, c in enumerate(data))
            if op != 0:
                opcode = op
            payload += data
            if fin:
                return opcode, payload

    def _reader_loop(self):
        try:
            while self.alive:
                opcode, payload = self._read_message()
                if opcode == _OP_TEXT:
                    self.server._handle_text(payload)
                elif opcode == _OP_PING:
                    self._enqueue_ctrl(_encode_ctrl(_OP_PONG, payload))
                elif opcode == _OP_CLOSE:
                    self._enqueue_ctrl(_encode_ctrl(_OP_CLOSE, payload[:125]))
                    break
        except OSError:
            pass
        finally:
            self.close()

    def _writer_loop(self):
        try:
            # Flag first: frames published from here on land in the queue
            # this thread drains after the hello write, so they cannot
            # overtake it, and a client that has read the hello is
            # guaranteed a queue that accepts.
            self._hello_sent = True
            self.conn.sendall(_encode_text(json.dumps(
                {"type": "hello", "v": PROTOCOL_VERSION, "tick_hz": TICK_HZ},
                sort_keys=True)))
            while True:
                with self._cond:
                    while self.alive and not self._frames \
                            and not self._ctrl_out:
                        self._cond.wait(timeout=1.0)
                    if not self.alive and not self._frames \
                            and not self._ctrl_out:
                        return
                    ctrl = list(self._ctrl_out)
                    self._ctrl_out.clear()
                    frames = list(self._frames)
                    self._frames.clear()
                for raw in ctrl:
                    self.conn.sendall(raw)
                for frame in frames:
                    self.conn.sendall(_encode_text(
                        json.dumps(frame, sort_keys=True)))
        except OSError:
            pass
        finally:
            self.close()

    def close(self):
        with self._cond:
            if not self.alive:
                return
            self.alive = False
            self._cond.notify_all()
        try:
            self.conn.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.conn.close()
        except OSError:
            pass
        self.server._session_gone(self)


class BridgeServer:
    """Single-client frame/control bridge for the tick loop.

    start() opens the listening socket; publish_frame and latest_controls
    are called from the tick loop and never block on the network.
    """

    def __init__(self, host="127.0.0.1", port=DEFAULT_PORT):
        self.host = host
        self.port = port
        self._listener = None
        self._session = None
        self._lock = threading.Lock()
        self._closed = False
        self.dropped_frames = 0
        self.malformed = 0
        self._controls = ControlInput()
        self._controls_rx = None  # monotonic receipt time of the last one

    def start(self):
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((self.host, self.port))
        sock.listen(2)
        self._listener = sock
        self.port = sock.getsockname()[1]
        threading.Thread(target=self._accept_loop, daemon=True).start()
        return self

    def _accept_loop(self):
        while not self._closed:
            try:
                conn, _addr = self._listener.accept()
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            session = _Session(self, conn)
            try:
                session.handshake()
            except OSError:
                try:
                    conn.close()
                except OSError:
                    pass
                continue
            with self._lock:
                old, self._session = self._session, session
            if old is not None:
                old.close()
            session.start()

    def _session_gone(self, session):
        with self._lock:
            if self._session is session:
                self._session = None

    def _handle_text(self, payload):
        try:
            msg = json.loads(payload.decode("utf-8"))
            if not isinstance(msg, dict) or msg.get("type") != "control":
                raise ValueError("unexpected message")
            controls = ControlInput(
                steering=float(msg.get("steering", 0.0)),
                throttle=float(msg.get("throttle", 0.0)),
                brake=float(msg.get("brake", 0.0)),
                indicator=int(msg.get("indicator", 0))).clamped()
        except (ValueError, TypeError, UnicodeDecodeError):
            with self._lock:
                self.malformed += 1
            return
        with self._lock:
            self._controls = controls
            self._controls_rx = time.monotonic()

    # -- tick-loop interface ----------------------------------------------

    def publish_frame(self, world, active_events, pred):
        with self._lock:
            session = self._session
        if session is None or not session.alive or not session._hello_sent:
            return
        self.dropped_frames += session.enqueue_frame(
            make_frame(world, active_events, pred))

    def latest_controls(self):
        """(controls, stale): neutral + stale=True past the watchdog."""
        now = time.monotonic()
        with self._lock:
            if self._controls_rx is None \
                    or now - self._controls_rx > STALE_S:
                return ControlInput(), True
            return self._controls, False

    def close(self):
        self._closed = True
        with self._lock:
            session, self._session = self._session, None
        if session is not None:
            session.close()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
