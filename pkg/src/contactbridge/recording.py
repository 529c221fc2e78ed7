"""Bag recording, playback, and CSV export, plus the `rpbag` CLI.

Bag layout: magic b"RPBAG01\\n", then stamp-ordered records of
(u64 stamp_ns, u16 type_id, u16 topic length + UTF-8 topic,
u32 payload length + payload bytes).  Single file, no index: these bags
are desk-scale and a sequential scan is fine.
"""

from __future__ import annotations

import argparse
import csv
import io
import struct
import sys
import threading
import time
from dataclasses import dataclass

from .bus import MessageBus, SubscriptionQueue
from .messages import (
    ClockMsg,
    Envelope,
    Float64ArrayMsg,
    JointStateMsg,
    TransformMsg,
    TYPES_BY_ID,
    WrenchMsg,
)
from .wire import decode_payload, encode_payload

BAG_MAGIC = b"RPBAG01\n"
_HEAD = struct.Struct("<QHH")  # stamp_ns, type_id, topic length


class BagError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (at byte offset {offset})")
        self.offset = offset


def _encode_record(env: Envelope) -> bytes:
    topic = env.topic.encode("utf-8")
    payload = encode_payload(env.payload)
    return (_HEAD.pack(env.stamp_ns, env.type_id, len(topic))
            + topic + struct.pack("<I", len(payload)) + payload)


class BagWriter:
    """Append-only writer; every write is one complete record."""

    def __init__(self, path: str):
        self.path = path
        self._fh = open(path, "wb")
        self._fh.write(BAG_MAGIC)
        self.count = 0
        self._last_stamp = -1

    def write(self, env: Envelope) -> None:
        if env.stamp_ns < self._last_stamp:
            raise BagError(f"out-of-order stamp {env.stamp_ns} after {self._last_stamp}")
        self._fh.write(_encode_record(env))
        self._last_stamp = env.stamp_ns
        self.count += 1

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_bag(path: str) -> list[Envelope]:
    """Decode every record; a corrupt record raises naming its byte offset."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(BAG_MAGIC)] != BAG_MAGIC:
        raise BagError("not a bag file (bad magic)", 0)
    out: list[Envelope] = []
    pos = len(BAG_MAGIC)
    while pos < len(blob):
        start = pos
        if pos + _HEAD.size > len(blob):
            raise BagError("truncated record header", start)
        stamp_ns, type_id, tlen = _HEAD.unpack_from(blob, pos)
        pos += _HEAD.size
        if pos + tlen + 4 > len(blob):
            raise BagError("truncated record", start)
        topic = blob[pos : pos + tlen].decode("utf-8")
        pos += tlen
        (plen,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        if pos + plen > len(blob):
            raise BagError("truncated payload", start)
        if type_id not in TYPES_BY_ID:
            raise BagError(f"unknown type id {type_id}", start)
        try:
            payload = decode_payload(type_id, blob[pos : pos + plen])
        except ValueError as err:
            raise BagError(f"undecodable payload: {err}", start) from err
        pos += plen
        out.append(Envelope(topic, stamp_ns, payload))
    return out


def bag_info(path: str) -> dict:
    envs = read_bag(path)
    topics: dict[str, int] = {}
    for e in envs:
        topics[e.topic] = topics.get(e.topic, 0) + 1
    span = (envs[-1].stamp_ns - envs[0].stamp_ns) / 1e9 if envs else 0.0
    return {"count": len(envs), "topics": topics, "duration_s": span}


class Recorder:
    """Subscribes to the listed topics and writes every envelope seen."""

    def __init__(self, bus: MessageBus, topics: list[str], path: str):
        self._queues: list[SubscriptionQueue] = [bus.subscribe(t, depth=4096) for t in topics]
        self._bus = bus
        self._writer = BagWriter(path)
        self._lock = threading.Lock()

    def drain(self) -> int:
        """Flush everything received so far to disk, merged in stamp order."""
        with self._lock:
            pending: list[Envelope] = []
            for q in self._queues:
                pending.extend(q.drain())
            pending.sort(key=lambda e: e.stamp_ns)
            for env in pending:
                self._writer.write(env)
            return len(pending)

    def stop(self) -> int:
        self.drain()
        for q in self._queues:
            self._bus.unsubscribe(q)
        count = self._writer.count
        self._writer.close()
        return count


def playback(path: str, bus: MessageBus, rate: float = 1.0,
             use_sim_time: bool = False, sleep=time.sleep) -> int:
    """Republish a bag; delays scaled by 1/rate, or clock-driven if sim time."""
    if rate <= 0:
        raise BagError("playback rate must be positive")
    envs = read_bag(path)
    prev = None
    for env in envs:
        if prev is not None and not use_sim_time:
            sleep((env.stamp_ns - prev) / 1e9 / rate)
        bus.publish(env)
        if use_sim_time:
            bus.publish(Envelope("rpbi/clock", env.stamp_ns, ClockMsg(env.stamp_ns)))
        prev = env.stamp_ns
    return len(envs)


# --- CSV export ---------------------------------------------------------------

def _flatten(payload) -> tuple[list[str], list[float]]:
    if isinstance(payload, JointStateMsg):
        return list(payload.names), list(payload.positions)
    if isinstance(payload, WrenchMsg):
        f, t = payload.wrench.force, payload.wrench.torque
        return ["fx", "fy", "fz", "tx", "ty", "tz"], [f.x, f.y, f.z, t.x, t.y, t.z]
    if isinstance(payload, Float64ArrayMsg):
        return [f"v{i}" for i in range(len(payload.data))], list(payload.data)
    if isinstance(payload, TransformMsg):
        p, q = payload.pose.translation, payload.pose.rotation
        return (["x", "y", "z", "qw", "qx", "qy", "qz"],
                [p.x, p.y, p.z, q.w, q.x, q.y, q.z])
    if isinstance(payload, ClockMsg):
        return ["sim_time_ns"], [payload.sim_time_ns]
    raise BagError(f"cannot export {type(payload).__name__} to CSV")


def export_csv(path: str, topic: str, fields: list[str] | None = None) -> str:
    """CSV text for one topic; schema fixed by the first record."""
    envs = [e for e in read_bag(path) if e.topic == topic]
    buf = io.StringIO()
    writer = csv.writer(buf)
    if not envs:
        writer.writerow(["time"] + (fields or []))
        return buf.getvalue()
    names, _ = _flatten(envs[0].payload)
    if fields:
        missing = [f for f in fields if f not in names]
        if missing:
            raise BagError(f"unknown field(s): {', '.join(missing)}")
        select = [names.index(f) for f in fields]
        header = fields
    else:
        select = list(range(len(names)))
        header = names
    writer.writerow(["time"] + list(header))
    for env in envs:
        row_names, values = _flatten(env.payload)
        if row_names != names:
            raise BagError(f"record schema changed on topic {topic!r}")
        writer.writerow([env.stamp_ns / 1e9] + [values[i] for i in select])
    return buf.getvalue()


# --- CLI ------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rpbag", description="Bag recording tools")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_rec = sub.add_parser("record", help="record topics from a live gateway")
    p_rec.add_argument("-o", "--output", required=True)
    p_rec.add_argument("topics", nargs="+")
    p_rec.add_argument("--url", default="ws://127.0.0.1:9871")
    p_rec.add_argument("--duration", type=float, default=None,
                       help="stop after this many seconds")

    p_play = sub.add_parser("play", help="republish a bag to a live gateway")
    p_play.add_argument("file")
    p_play.add_argument("-r", "--rate", type=float, default=1.0)
    p_play.add_argument("--url", default="ws://127.0.0.1:9871")

    p_exp = sub.add_parser("export", help="export one topic to CSV")
    p_exp.add_argument("file")
    p_exp.add_argument("--topic", required=True)
    p_exp.add_argument("--fields", default=None, help="comma-separated field names")
    p_exp.add_argument("-o", "--output", default="-")

    p_info = sub.add_parser("info", help="summarize a bag file")
    p_info.add_argument("file")

    args = parser.parse_args(argv)

    try:
        if args.cmd == "info":
            info = bag_info(args.file)
            print(f"records:  {info['count']}")
            print(f"duration: {info['duration_s']:.3f} s")
            for topic, n in sorted(info["topics"].items()):
                print(f"  {topic}: {n}")
            return 0
        if args.cmd == "export":
            fields = args.fields.split(",") if args.fields else None
            text = export_csv(args.file, args.topic, fields)
            if args.output == "-":
                sys.stdout.write(text)
            else:
                with open(args.output, "w", newline="") as fh:
                    fh.write(text)
            return 0
        if args.cmd == "record":
            return _cli_record(args)
        if args.cmd == "play":
            return _cli_play(args)
    except (BagError, OSError) as err:
        print(f"rpbag: {err}", file=sys.stderr)
        return 1
    return 2


def _cli_record(args) -> int:
    from .gateway import GatewayClient

    writer = BagWriter(args.output)
    deadline = None if args.duration is None else time.monotonic() + args.duration
    try:
        with GatewayClient(args.url) as client:
            for topic in args.topics:
                client.subscribe(topic)
            while deadline is None or time.monotonic() < deadline:
                timeout = 0.5 if deadline is None else max(0.0, deadline - time.monotonic())
                env = client.recv(timeout=min(timeout, 0.5))
                if env is not None:
                    writer.write(env)
    except KeyboardInterrupt:
        pass
    finally:
        writer.close()
    print(f"recorded {writer.count} records to {args.output}")
    return 0


def _cli_play(args) -> int:
    from .gateway import GatewayClient

    envs = read_bag(args.file)
    with GatewayClient(args.url) as client:
        prev = None
        for env in envs:
            if prev is not None:
                time.sleep((env.stamp_ns - prev) / 1e9 / args.rate)
            client.publish(env)
            prev = env.stamp_ns
    print(f"played {len(envs)} records")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
