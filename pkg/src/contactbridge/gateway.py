"""WebSocket JSON gateway: browser-facing bridge onto the message bus.

Clients exchange one JSON object per WebSocket text frame:

  -> {"op": "sub",   "topic": T}
  -> {"op": "unsub", "topic": T}
  -> {"op": "pub",   "topic": T, "type": NAME, "stamp_ns": N, "data": {...}}
  -> {"op": "call",  "service": S, "request": {...}, "id": I}
  <- {"op": "msg",   "topic": T, "type": NAME, "stamp_ns": N, "data": {...}}
  <- {"op": "result", "id": I, "ok": true, "response": {...}}
  <- {"op": "error", "detail": "..."}  (malformed input; connection stays open)
"""

from __future__ import annotations

import json
import threading

from websockets.sync.client import connect as ws_connect
from websockets.sync.server import serve as ws_serve

from .bus import BusError, MessageBus, SubscriptionQueue
from .messages import Envelope
from .wire import envelope_from_json, envelope_to_json

DEFAULT_WS_PORT = 9871


class GatewayServer:
    """One bus-facing WebSocket endpoint; per-client subscription state."""

    def __init__(self, bus: MessageBus, host: str = "127.0.0.1",
                 port: int = DEFAULT_WS_PORT):
        self.bus = bus
        self.host = host
        self.port = port
        self._server = None
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        # raises OSError here if the port is taken, before any thread starts
        self._server = ws_serve(self._handle, self.host, self.port)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server = None
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def _handle(self, ws) -> None:
        subs: dict[str, SubscriptionQueue] = {}
        stop = threading.Event()
        send_lock = threading.Lock()

        def pump():
            while not stop.is_set():
                for topic, q in list(subs.items()):
                    while True:
                        env = q.get_nowait()
                        if env is None:
                            break
                        msg = envelope_to_json(env)
                        msg["op"] = "msg"
                        try:
                            with send_lock:
                                ws.send(json.dumps(msg))
                        except Exception:
                            stop.set()
                            return
                stop.wait(0.005)

        pump_thread = threading.Thread(target=pump, daemon=True)
        pump_thread.start()
        try:
            for raw in ws:
                reply = self._dispatch(raw, subs)
                if reply is not None:
                    with send_lock:
                        ws.send(json.dumps(reply))
        finally:
            stop.set()
            pump_thread.join(timeout=2.0)
            for q in subs.values():
                self.bus.unsubscribe(q)

    def _dispatch(self, raw, subs: dict[str, SubscriptionQueue]):
        obj: dict = {}
        try:
            obj = json.loads(raw)
            if not isinstance(obj, dict):
                obj = {}
                raise ValueError("expected a JSON object")
            op = obj.get("op")
            if op == "sub":
                topic = obj["topic"]
                if topic not in subs:
                    subs[topic] = self.bus.subscribe(topic)
                return None
            if op == "unsub":
                q = subs.pop(obj["topic"], None)
                if q is not None:
                    self.bus.unsubscribe(q)
                return None
            if op == "pub":
                self.bus.publish(envelope_from_json(obj))
                return None
            if op == "call":
                response = self.bus.call(obj["service"], obj.get("request", {}))
                return {"op": "result", "id": obj.get("id"), "ok": True,
                        "response": response}
            raise ValueError(f"unknown op {op!r}")
        except BusError as err:
            if obj.get("op") == "call":
                return {"op": "result", "id": obj.get("id"), "ok": False,
                        "detail": str(err)}
            return {"op": "error", "detail": str(err)}
        except (ValueError, KeyError, TypeError) as err:
            return {"op": "error", "detail": str(err)}


class GatewayClient:
    """Small synchronous client for tools (the rpbag CLI, tests)."""

    def __init__(self, url: str):
        self._ws = ws_connect(url)
        self._results: list[dict] = []

    def subscribe(self, topic: str) -> None:
        self._ws.send(json.dumps({"op": "sub", "topic": topic}))

    def unsubscribe(self, topic: str) -> None:
        self._ws.send(json.dumps({"op": "unsub", "topic": topic}))

    def publish(self, env: Envelope) -> None:
        msg = envelope_to_json(env)
        msg["op"] = "pub"
        self._ws.send(json.dumps(msg))

    def send_raw(self, text: str) -> None:
        self._ws.send(text)

    def recv(self, timeout: float | None = None) -> Envelope | None:
        """Next subscribed message as an Envelope, or None on timeout."""
        obj = self.recv_json(timeout)
        if obj is None:
            return None
        if obj.get("op") == "msg":
            return envelope_from_json(obj)
        self._results.append(obj)
        return None

    def recv_json(self, timeout: float | None = None) -> dict | None:
        try:
            raw = self._ws.recv(timeout=timeout)
        except TimeoutError:
            return None
        return json.loads(raw)

    def call(self, service: str, request: dict | None = None,
             timeout: float = 5.0) -> dict:
        self._ws.send(json.dumps({"op": "call", "service": service,
                                  "request": request or {}, "id": 1}))
        while True:
            obj = self.recv_json(timeout)
            if obj is None:
                raise TimeoutError(f"no reply from service {service!r}")
            if obj.get("op") in ("result", "error"):
                return obj

    def close(self) -> None:
        self._ws.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
