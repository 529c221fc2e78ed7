"""TCP transport: binary envelope frames over a stream socket.

Lets nodes in other processes (or machines) join the in-process bus.
Clients send ordinary encoded frames; frames on the reserved control
topics "!sub:<topic>" and "!unsub:<topic>" manage that connection's
subscription set instead of being published.
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading

from .bus import MessageBus, SubscriptionQueue
from .messages import ClockMsg, Envelope
from .wire import decode_frame, encode_frame, WireError

DEFAULT_TCP_PORT = 9870
_LEN = struct.Struct("<I")
_CONTROL_PAYLOAD = ClockMsg(0)  # control frames carry no meaningful payload


def _read_frame(sock: socket.socket) -> bytes | None:
    head = _read_exact(sock, 4)
    if head is None:
        return None
    (total,) = _LEN.unpack(head)
    body = _read_exact(sock, total - 4)
    if body is None:
        return None
    return head + body


def _read_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


class _Handler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        bus: MessageBus = self.server.bus  # type: ignore[attr-defined]
        subs: dict[str, SubscriptionQueue] = {}
        stop = threading.Event()
        send_lock = threading.Lock()

        def pump():
            while not stop.is_set():
                for q in list(subs.values()):
                    while True:
                        env = q.get_nowait()
                        if env is None:
                            break
                        try:
                            with send_lock:
                                self.request.sendall(encode_frame(env))
                        except OSError:
                            stop.set()
                            return
                stop.wait(0.005)

        thread = threading.Thread(target=pump, daemon=True)
        thread.start()
        try:
            while not stop.is_set():
                frame = _read_frame(self.request)
                if frame is None:
                    break
                try:
                    env = decode_frame(frame)
                except WireError:
                    break  # stream framing is lost; drop the connection
                if env.topic.startswith("!sub:"):
                    topic = env.topic[len("!sub:"):]
                    if topic not in subs:
                        subs[topic] = bus.subscribe(topic)
                elif env.topic.startswith("!unsub:"):
                    q = subs.pop(env.topic[len("!unsub:"):], None)
                    if q is not None:
                        bus.unsubscribe(q)
                else:
                    bus.publish(env)
        finally:
            stop.set()
            thread.join(timeout=2.0)
            for q in subs.values():
                bus.unsubscribe(q)


class TcpServer:
    def __init__(self, bus: MessageBus, host: str = "127.0.0.1",
                 port: int = DEFAULT_TCP_PORT):
        self.host = host
        self.port = port
        self._srv = socketserver.ThreadingTCPServer((host, port), _Handler,
                                                    bind_and_activate=False)
        self._srv.allow_reuse_address = True
        self._srv.daemon_threads = True
        self._srv.bus = bus  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._srv.server_bind()
        self._srv.server_activate()
        self._thread = threading.Thread(target=self._srv.serve_forever,
                                        kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._srv.shutdown()
        self._srv.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None


class TcpClient:
    """Blocking client: publish frames, subscribe, and receive."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_TCP_PORT):
        self._sock = socket.create_connection((host, port))

    def subscribe(self, topic: str) -> None:
        self._send_control("!sub:" + topic)

    def unsubscribe(self, topic: str) -> None:
        self._send_control("!unsub:" + topic)

    def _send_control(self, control_topic: str) -> None:
        self._sock.sendall(encode_frame(Envelope(control_topic, 0, _CONTROL_PAYLOAD)))

    def publish(self, env: Envelope) -> None:
        self._sock.sendall(encode_frame(env))

    def recv(self, timeout: float | None = None) -> Envelope | None:
        self._sock.settimeout(timeout)
        try:
            frame = _read_frame(self._sock)
        except socket.timeout:
            return None
        if frame is None:
            return None
        return decode_frame(frame)

    def close(self) -> None:
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
