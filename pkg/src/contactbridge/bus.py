"""In-process typed pub/sub and request/response bus.

Topics carry Envelopes to bounded per-subscriber FIFO queues (drop-oldest on
overflow, default depth 64).  Services are named request/response endpoints;
each service handles one request at a time and calls have a configurable
timeout.  Topic and service names are remapped once, at node construction.
"""

from __future__ import annotations

import threading
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor, TimeoutError as FutureTimeout
from typing import Any, Callable

from .messages import Envelope, Payload

DEFAULT_QUEUE_DEPTH = 64
DEFAULT_CALL_TIMEOUT_S = 2.0


class BusError(Exception):
    pass


class ServiceNotFound(BusError):
    pass


class ServiceTimeout(BusError):
    pass


class ServiceFailed(BusError):
    """The server raised; the original message is preserved."""


class SubscriptionQueue:
    """Bounded single-consumer FIFO with a drop-oldest overflow policy."""

    def __init__(self, topic: str, depth: int = DEFAULT_QUEUE_DEPTH):
        self.topic = topic
        self.depth = depth
        self.dropped = 0
        self._items: deque[Envelope] = deque()
        self._cond = threading.Condition()
        self._closed = False

    def _push(self, env: Envelope) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._items) >= self.depth:
                self._items.popleft()
                self.dropped += 1
            self._items.append(env)
            self._cond.notify()

    def get(self, timeout: float | None = None) -> Envelope | None:
        """Next envelope, or None on timeout / closed-and-empty."""
        with self._cond:
            if not self._cond.wait_for(lambda: self._items or self._closed, timeout):
                return None
            if self._items:
                return self._items.popleft()
            return None

    def get_nowait(self) -> Envelope | None:
        with self._cond:
            return self._items.popleft() if self._items else None

    def drain(self) -> list[Envelope]:
        with self._cond:
            out = list(self._items)
            self._items.clear()
            return out

    def latest(self) -> Envelope | None:
        """Drop everything but the newest envelope and return it."""
        with self._cond:
            if not self._items:
                return None
            env = self._items[-1]
            self._items.clear()
            return env

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class _Service:
    def __init__(self, name: str, handler: Callable[[Any], Any]):
        self.name = name
        self.handler = handler
        # one worker: a service handles one request at a time
        self.executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix=f"svc-{name}")


class MessageBus:
    """Process-wide message router; all entry points are thread-safe."""

    def __init__(self):
        self._lock = threading.RLock()
        self._subs: dict[str, list[SubscriptionQueue]] = {}
        self._services: dict[str, _Service] = {}

    # --- pub/sub ---

    def subscribe(self, topic: str, depth: int = DEFAULT_QUEUE_DEPTH) -> SubscriptionQueue:
        q = SubscriptionQueue(topic, depth)
        with self._lock:
            self._subs.setdefault(topic, []).append(q)
        return q

    def unsubscribe(self, q: SubscriptionQueue) -> None:
        with self._lock:
            subs = self._subs.get(q.topic, [])
            if q in subs:
                subs.remove(q)
        q.close()

    def publish(self, env: Envelope) -> None:
        with self._lock:
            subs = list(self._subs.get(env.topic, ()))
        for q in subs:
            q._push(env)

    def topics(self) -> list[str]:
        with self._lock:
            return sorted(t for t, subs in self._subs.items() if subs)

    # --- services ---

    def register_service(self, name: str, handler: Callable[[Any], Any]) -> None:
        with self._lock:
            if name in self._services:
                raise BusError(f"service {name!r} already registered")
            self._services[name] = _Service(name, handler)

    def unregister_service(self, name: str) -> None:
        with self._lock:
            svc = self._services.pop(name, None)
        if svc is not None:
            svc.executor.shutdown(wait=False, cancel_futures=True)

    def call(self, name: str, request: Any, timeout: float = DEFAULT_CALL_TIMEOUT_S) -> Any:
        with self._lock:
            svc = self._services.get(name)
        if svc is None:
            raise ServiceNotFound(f"no server for service {name!r}")
        fut: Future = svc.executor.submit(svc.handler, request)
        try:
            return fut.result(timeout=timeout)
        except FutureTimeout:
            raise ServiceTimeout(f"service {name!r} timed out after {timeout}s") from None
        except BusError:
            raise
        except Exception as err:
            raise ServiceFailed(f"service {name!r} failed: {err}") from err

    def services(self) -> list[str]:
        with self._lock:
            return sorted(self._services)

    def shutdown(self) -> None:
        with self._lock:
            services = list(self._services.values())
            self._services.clear()
            subs = [q for qs in self._subs.values() for q in qs]
            self._subs.clear()
        for svc in services:
            svc.executor.shutdown(wait=False, cancel_futures=True)
        for q in subs:
            q.close()


def remap(table: dict[str, str], name: str) -> str:
    """Single-lookup name remapping (no chaining)."""
    return table.get(name, name)


class NodeHandle:
    """A named participant on the bus; applies its remap table to every name."""

    def __init__(self, bus: MessageBus, name: str, remaps: dict[str, str] | None = None):
        self.bus = bus
        self.name = name
        self.remaps = dict(remaps or {})
        self._advertised: set[str] = set()
        self._last_stamp: dict[str, int] = {}
        self._subs: list[SubscriptionQueue] = []
        self._service_names: list[str] = []

    def resolve(self, name: str) -> str:
        return remap(self.remaps, name)

    def advertise(self, topic: str) -> str:
        resolved = self.resolve(topic)
        self._advertised.add(resolved)
        return resolved

    def publish(self, topic: str, payload: Payload, stamp_ns: int) -> None:
        resolved = self.resolve(topic)
        if resolved not in self._advertised:
            raise BusError(f"node {self.name!r} publishing to unadvertised topic {resolved!r}")
        # stamps are monotone non-decreasing per publisher
        stamp_ns = max(stamp_ns, self._last_stamp.get(resolved, 0))
        self._last_stamp[resolved] = stamp_ns
        self.bus.publish(Envelope(resolved, stamp_ns, payload))

    def subscribe(self, topic: str, depth: int = DEFAULT_QUEUE_DEPTH) -> SubscriptionQueue:
        q = self.bus.subscribe(self.resolve(topic), depth)
        self._subs.append(q)
        return q

    def register_service(self, name: str, handler: Callable[[Any], Any]) -> None:
        resolved = self.resolve(name)
        self.bus.register_service(resolved, handler)
        self._service_names.append(resolved)

    def call(self, name: str, request: Any, timeout: float = DEFAULT_CALL_TIMEOUT_S) -> Any:
        return self.bus.call(self.resolve(name), request, timeout)

    def close(self) -> None:
        for q in self._subs:
            self.bus.unsubscribe(q)
        self._subs.clear()
        for name in self._service_names:
            self.bus.unregister_service(name)
        self._service_names.clear()
