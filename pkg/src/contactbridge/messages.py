"""Typed message payloads carried by bus envelopes.

Each payload variant has a stable numeric type id used by the binary wire
format and the bag file format, and a short name used by the JSON gateway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Pose, Vec3, Wrench


class MessageError(ValueError):
    """Invalid message construction or encoding."""


@dataclass(frozen=True)
class JointStateMsg:
    names: tuple[str, ...]
    positions: tuple[float, ...]
    velocities: tuple[float, ...]
    efforts: tuple[float, ...]

    def __post_init__(self):
        n = len(self.names)
        if not (len(self.positions) == len(self.velocities) == len(self.efforts) == n):
            raise MessageError("joint state lists must have equal length")
        if len(set(self.names)) != n:
            raise MessageError("joint names must be unique")


def joint_state(names, positions, velocities=None, efforts=None) -> JointStateMsg:
    n = len(names)
    return JointStateMsg(
        tuple(names),
        tuple(positions),
        tuple(velocities) if velocities is not None else (0.0,) * n,
        tuple(efforts) if efforts is not None else (0.0,) * n,
    )


@dataclass(frozen=True)
class TransformMsg:
    parent: str
    child: str
    pose: Pose

    def __post_init__(self):
        if self.parent == self.child:
            raise MessageError("transform parent and child must differ")


@dataclass(frozen=True)
class WrenchMsg:
    frame: str
    wrench: Wrench

    def __post_init__(self):
        if not self.frame:
            raise MessageError("wrench frame must be non-empty")


@dataclass(frozen=True)
class Float64ArrayMsg:
    data: tuple[float, ...]

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.data):
            raise MessageError("float array entries must be finite")


@dataclass(frozen=True)
class ImageMsg:
    width: int
    height: int
    encoding: str  # "rgb8" | "depth32f"
    data: bytes

    def __post_init__(self):
        if self.encoding == "rgb8":
            expected = self.width * self.height * 3
        elif self.encoding == "depth32f":
            expected = self.width * self.height * 4
        else:
            raise MessageError(f"unknown image encoding {self.encoding!r}")
        if len(self.data) != expected:
            raise MessageError(
                f"image data length {len(self.data)} != expected {expected}"
            )


@dataclass(frozen=True)
class CameraInfoMsg:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise MessageError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise MessageError("principal point outside image")


@dataclass(frozen=True)
class PointCloudMsg:
    points: tuple[Vec3, ...]
    colors: tuple[tuple[int, int, int], ...] | None = None

    def __post_init__(self):
        if self.colors is not None and len(self.colors) != len(self.points):
            raise MessageError("colors must parallel points")


@dataclass(frozen=True)
class ClockMsg:
    sim_time_ns: int

    def __post_init__(self):
        if self.sim_time_ns < 0:
            raise MessageError("sim time must be non-negative")


Payload = (
    JointStateMsg
    | TransformMsg
    | WrenchMsg
    | Float64ArrayMsg
    | ImageMsg
    | CameraInfoMsg
    | PointCloudMsg
    | ClockMsg
)

TYPE_IDS: dict[type, int] = {
    JointStateMsg: 1,
    TransformMsg: 2,
    WrenchMsg: 3,
    Float64ArrayMsg: 4,
    ImageMsg: 5,
    CameraInfoMsg: 6,
    PointCloudMsg: 7,
    ClockMsg: 8,
}
TYPES_BY_ID = {v: k for k, v in TYPE_IDS.items()}

TYPE_NAMES: dict[type, str] = {
    JointStateMsg: "joint_state",
    TransformMsg: "transform",
    WrenchMsg: "wrench",
    Float64ArrayMsg: "float64_array",
    ImageMsg: "image",
    CameraInfoMsg: "camera_info",
    PointCloudMsg: "point_cloud",
    ClockMsg: "clock",
}
TYPES_BY_NAME = {v: k for k, v in TYPE_NAMES.items()}


@dataclass(frozen=True)
class Envelope:
    topic: str
    stamp_ns: int
    payload: Payload
    type_id: int = field(default=0)

    def __post_init__(self):
        if not self.topic or any(c.isspace() for c in self.topic):
            raise MessageError(f"bad topic {self.topic!r}")
        tid = TYPE_IDS.get(type(self.payload))
        if tid is None:
            raise MessageError(f"unknown payload type {type(self.payload).__name__}")
        if self.type_id == 0:
            object.__setattr__(self, "type_id", tid)
        elif self.type_id != tid:
            raise MessageError("type_id does not match payload variant")
