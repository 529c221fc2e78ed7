"""Binary wire frames and JSON conversion for bus envelopes.

Frame layout (all little-endian):

    u32 total frame length (including this field)
    u8  version (0x01)
    u16 type_id
    u64 stamp_ns
    u16 topic byte length, UTF-8 topic
    payload, fixed layout per variant

Payload layouts use length-prefixed strings (u16 + UTF-8) and f64 reals.
"""

from __future__ import annotations

import struct
from typing import Any

from .geometry import Pose, Quat, Vec3, Wrench
from .messages import (
    CameraInfoMsg,
    ClockMsg,
    Envelope,
    Float64ArrayMsg,
    ImageMsg,
    JointStateMsg,
    Payload,
    PointCloudMsg,
    TransformMsg,
    TYPES_BY_ID,
    TYPES_BY_NAME,
    TYPE_IDS,
    TYPE_NAMES,
    WrenchMsg,
)

WIRE_VERSION = 0x01

_ENCODINGS = {"rgb8": 0, "depth32f": 1}
_ENCODINGS_BY_ID = {v: k for k, v in _ENCODINGS.items()}


class WireError(ValueError):
    """Malformed frame; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.reason = message
        self.offset = offset


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v):
        self.parts.append(struct.pack("<B", v))

    def u16(self, v):
        self.parts.append(struct.pack("<H", v))

    def u32(self, v):
        self.parts.append(struct.pack("<I", v))

    def u64(self, v):
        self.parts.append(struct.pack("<Q", v))

    def f64(self, v):
        self.parts.append(struct.pack("<d", v))

    def f64s(self, vals):
        self.parts.append(struct.pack(f"<{len(vals)}d", *vals))

    def string(self, s: str):
        raw = s.encode("utf-8")
        self.u16(len(raw))
        self.parts.append(raw)

    def raw(self, b: bytes):
        self.parts.append(b)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, buf: bytes, offset: int = 0):
        self.buf = buf
        self.pos = offset

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise WireError("truncated frame", self.pos)
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def f64s(self, n: int) -> tuple[float, ...]:
        return struct.unpack(f"<{n}d", self._take(8 * n))

    def string(self) -> str:
        n = self.u16()
        return self._take(n).decode("utf-8")


def _write_pose(w: _Writer, p: Pose):
    t, q = p
    w.f64s((t.x, t.y, t.z, q.w, q.x, q.y, q.z))


def _read_pose(r: _Reader) -> Pose:
    tx, ty, tz, qw, qx, qy, qz = r.f64s(7)
    return Pose(Vec3(tx, ty, tz), Quat(qw, qx, qy, qz))


def encode_payload(payload: Payload) -> bytes:
    w = _Writer()
    if isinstance(payload, JointStateMsg):
        w.u16(len(payload.names))
        for name in payload.names:
            w.string(name)
        w.f64s(payload.positions)
        w.f64s(payload.velocities)
        w.f64s(payload.efforts)
    elif isinstance(payload, TransformMsg):
        w.string(payload.parent)
        w.string(payload.child)
        _write_pose(w, payload.pose)
    elif isinstance(payload, WrenchMsg):
        w.string(payload.frame)
        f, tau = payload.wrench
        w.f64s((f.x, f.y, f.z, tau.x, tau.y, tau.z))
    elif isinstance(payload, Float64ArrayMsg):
        w.u32(len(payload.data))
        w.f64s(payload.data)
    elif isinstance(payload, ImageMsg):
        w.u32(payload.width)
        w.u32(payload.height)
        w.u8(_ENCODINGS[payload.encoding])
        w.u32(len(payload.data))
        w.raw(payload.data)
    elif isinstance(payload, CameraInfoMsg):
        w.u32(payload.width)
        w.u32(payload.height)
        w.f64s((payload.fx, payload.fy, payload.cx, payload.cy))
    elif isinstance(payload, PointCloudMsg):
        w.u32(len(payload.points))
        w.u8(1 if payload.colors is not None else 0)
        flat = []
        for p in payload.points:
            flat.extend(p)
        w.f64s(flat)
        if payload.colors is not None:
            w.raw(bytes(c for rgb in payload.colors for c in rgb))
    elif isinstance(payload, ClockMsg):
        w.u64(payload.sim_time_ns)
    else:
        raise WireError(f"unknown payload type {type(payload).__name__}", 0)
    return w.getvalue()


def decode_payload(type_id: int, buf: bytes, base_offset: int = 0) -> Payload:
    cls = TYPES_BY_ID.get(type_id)
    if cls is None:
        raise WireError(f"unknown type_id {type_id}", base_offset)
    r = _Reader(buf)
    try:
        if cls is JointStateMsg:
            n = r.u16()
            names = tuple(r.string() for _ in range(n))
            return JointStateMsg(names, r.f64s(n), r.f64s(n), r.f64s(n))
        if cls is TransformMsg:
            return TransformMsg(r.string(), r.string(), _read_pose(r))
        if cls is WrenchMsg:
            frame = r.string()
            fx, fy, fz, tx, ty, tz = r.f64s(6)
            return WrenchMsg(frame, Wrench(Vec3(fx, fy, fz), Vec3(tx, ty, tz)))
        if cls is Float64ArrayMsg:
            n = r.u32()
            return Float64ArrayMsg(r.f64s(n))
        if cls is ImageMsg:
            width, height = r.u32(), r.u32()
            encoding = _ENCODINGS_BY_ID.get(r.u8())
            if encoding is None:
                raise WireError("unknown image encoding", base_offset + r.pos - 1)
            n = r.u32()
            return ImageMsg(width, height, encoding, r._take(n))
        if cls is CameraInfoMsg:
            width, height = r.u32(), r.u32()
            fx, fy, cx, cy = r.f64s(4)
            return CameraInfoMsg(width, height, fx, fy, cx, cy)
        if cls is PointCloudMsg:
            n = r.u32()
            has_colors = r.u8()
            pts = []
            for _ in range(n):
                x, y, z = r.f64s(3)
                pts.append(Vec3(x, y, z))
            colors = None
            if has_colors:
                raw = r._take(3 * n)
                colors = tuple(
                    (raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]) for i in range(n)
                )
            return PointCloudMsg(tuple(pts), colors)
        if cls is ClockMsg:
            return ClockMsg(r.u64())
    except WireError as err:
        raise WireError(err.reason, base_offset + err.offset) from None
    raise WireError(f"unhandled type_id {type_id}", base_offset)


def encode_frame(env: Envelope) -> bytes:
    body = _Writer()
    body.u8(WIRE_VERSION)
    body.u16(env.type_id)
    body.u64(env.stamp_ns)
    body.string(env.topic)
    body.raw(encode_payload(env.payload))
    raw = body.getvalue()
    return struct.pack("<I", len(raw) + 4) + raw


def decode_frame(buf: bytes) -> Envelope:
    r = _Reader(buf)
    total = r.u32()
    if total > len(buf):
        raise WireError(f"frame length {total} exceeds buffer {len(buf)}", 0)
    if total < 4:
        raise WireError(f"frame length {total} too small", 0)
    version = r.u8()
    if version != WIRE_VERSION:
        raise WireError(f"bad version {version:#x}", 4)
    type_id = r.u16()
    stamp_ns = r.u64()
    topic = r.string()
    payload = decode_payload(type_id, buf[r.pos : total], r.pos)
    return Envelope(topic, stamp_ns, payload)


# --- JSON gateway representation -------------------------------------------

def _pose_to_json(p: Pose) -> dict:
    return {
        "translation": list(p.translation),
        "rotation": {"w": p.rotation.w, "x": p.rotation.x, "y": p.rotation.y, "z": p.rotation.z},
    }


def _pose_from_json(d: dict) -> Pose:
    t = d["translation"]
    q = d["rotation"]
    return Pose(Vec3(*map(float, t)), Quat(float(q["w"]), float(q["x"]), float(q["y"]), float(q["z"])))


def payload_to_json(payload: Payload) -> dict[str, Any]:
    if isinstance(payload, JointStateMsg):
        return {
            "names": list(payload.names),
            "positions": list(payload.positions),
            "velocities": list(payload.velocities),
            "efforts": list(payload.efforts),
        }
    if isinstance(payload, TransformMsg):
        return {"parent": payload.parent, "child": payload.child, "pose": _pose_to_json(payload.pose)}
    if isinstance(payload, WrenchMsg):
        return {
            "frame": payload.frame,
            "force": list(payload.wrench.force),
            "torque": list(payload.wrench.torque),
        }
    if isinstance(payload, Float64ArrayMsg):
        return {"data": list(payload.data)}
    if isinstance(payload, ImageMsg):
        import base64

        return {
            "width": payload.width,
            "height": payload.height,
            "encoding": payload.encoding,
            "data_b64": base64.b64encode(payload.data).decode("ascii"),
        }
    if isinstance(payload, CameraInfoMsg):
        return {
            "width": payload.width,
            "height": payload.height,
            "fx": payload.fx,
            "fy": payload.fy,
            "cx": payload.cx,
            "cy": payload.cy,
        }
    if isinstance(payload, PointCloudMsg):
        out: dict[str, Any] = {"points": [list(p) for p in payload.points]}
        if payload.colors is not None:
            out["colors"] = [list(c) for c in payload.colors]
        return out
    if isinstance(payload, ClockMsg):
        return {"sim_time_ns": payload.sim_time_ns}
    raise WireError(f"unknown payload type {type(payload).__name__}", 0)


def payload_from_json(type_name: str, data: dict) -> Payload:
    cls = TYPES_BY_NAME.get(type_name)
    if cls is None:
        raise WireError(f"unknown type name {type_name!r}", 0)
    if cls is JointStateMsg:
        return JointStateMsg(
            tuple(data["names"]),
            tuple(map(float, data["positions"])),
            tuple(map(float, data["velocities"])),
            tuple(map(float, data["efforts"])),
        )
    if cls is TransformMsg:
        return TransformMsg(data["parent"], data["child"], _pose_from_json(data["pose"]))
    if cls is WrenchMsg:
        return WrenchMsg(
            data["frame"],
            Wrench(Vec3(*map(float, data["force"])), Vec3(*map(float, data["torque"]))),
        )
    if cls is Float64ArrayMsg:
        return Float64ArrayMsg(tuple(map(float, data["data"])))
    if cls is ImageMsg:
        import base64

        return ImageMsg(
            int(data["width"]),
            int(data["height"]),
            data["encoding"],
            base64.b64decode(data["data_b64"]),
        )
    if cls is CameraInfoMsg:
        return CameraInfoMsg(
            int(data["width"]),
            int(data["height"]),
            float(data["fx"]),
            float(data["fy"]),
            float(data["cx"]),
            float(data["cy"]),
        )
    if cls is PointCloudMsg:
        colors = None
        if "colors" in data and data["colors"] is not None:
            colors = tuple(tuple(int(c) for c in rgb) for rgb in data["colors"])
        return PointCloudMsg(tuple(Vec3(*map(float, p)) for p in data["points"]), colors)
    if cls is ClockMsg:
        return ClockMsg(int(data["sim_time_ns"]))
    raise WireError(f"unhandled type name {type_name!r}", 0)


def envelope_to_json(env: Envelope) -> dict[str, Any]:
    return {
        "topic": env.topic,
        "type": TYPE_NAMES[type(env.payload)],
        "stamp_ns": env.stamp_ns,
        "data": payload_to_json(env.payload),
    }


def envelope_from_json(obj: dict) -> Envelope:
    return Envelope(
        obj["topic"],
        int(obj.get("stamp_ns", 0)),
        payload_from_json(obj["type"], obj.get("data", {})),
    )
