"""Frame algebra: rigid transforms, spatial velocities, wrench transport.

Conventions: right-handed frames, Z-up world, quaternions stored (w, x, y, z)
and renormalized after composition.  A Pose maps points from its child frame
into its parent frame: x_parent = R * x_child + t.
"""

from __future__ import annotations

import math
from typing import NamedTuple


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def __add__(self, other):  # type: ignore[override]
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other):
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, s: float):  # type: ignore[override]
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def __neg__(self):
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)


VEC3_ZERO = Vec3(0.0, 0.0, 0.0)


class Quat(NamedTuple):
    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "Quat":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize zero quaternion")
        return Quat(self.w / n, self.x / n, self.y / n, self.z / n)

    def conjugate(self) -> "Quat":
        return Quat(self.w, -self.x, -self.y, -self.z)


QUAT_IDENTITY = Quat(1.0, 0.0, 0.0, 0.0)


def quat_multiply(a: Quat, b: Quat) -> Quat:
    """Hamilton product a ⊗ b (no renormalization)."""
    return Quat(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    """Rotate v by unit quaternion q."""
    # v' = v + 2 w (u x v) + 2 u x (u x v), u = (x, y, z)
    ux, uy, uz = q.x, q.y, q.z
    cx = uy * v.z - uz * v.y
    cy = uz * v.x - ux * v.z
    cz = ux * v.y - uy * v.x
    ccx = uy * cz - uz * cy
    ccy = uz * cx - ux * cz
    ccz = ux * cy - uy * cx
    return Vec3(
        v.x + 2.0 * (q.w * cx + ccx),
        v.y + 2.0 * (q.w * cy + ccy),
        v.z + 2.0 * (q.w * cz + ccz),
    )


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    a = axis.normalized()
    h = 0.5 * angle
    s = math.sin(h)
    return Quat(math.cos(h), a.x * s, a.y * s, a.z * s)


def quat_to_axis_angle(q: Quat) -> tuple[Vec3, float]:
    """Axis-angle of a unit quaternion; angle in [0, pi]."""
    q = q if q.w >= 0.0 else Quat(-q.w, -q.x, -q.y, -q.z)
    s = math.sqrt(max(0.0, 1.0 - q.w * q.w))
    angle = 2.0 * math.atan2(s, q.w)
    if s < 1e-12:
        return Vec3(1.0, 0.0, 0.0), 0.0
    return Vec3(q.x / s, q.y / s, q.z / s), angle


def quat_log(q: Quat) -> Vec3:
    """Rotation vector (axis * angle) of a unit quaternion."""
    axis, angle = quat_to_axis_angle(q)
    return axis * angle


def quat_to_matrix(q: Quat) -> list[list[float]]:
    """3x3 rotation matrix, row-major nested lists."""
    w, x, y, z = q
    return [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]


def quat_slerp(q0: Quat, q1: Quat, s: float) -> Quat:
    """Shortest-arc spherical interpolation; s in [0, 1]."""
    dot = q0.w * q1.w + q0.x * q1.x + q0.y * q1.y + q0.z * q1.z
    if dot < 0.0:
        q1 = Quat(-q1.w, -q1.x, -q1.y, -q1.z)
        dot = -dot
    if dot > 1.0 - 1e-12:
        # nearly parallel: nlerp avoids the 0/0 in the slerp weights
        out = Quat(
            q0.w + s * (q1.w - q0.w),
            q0.x + s * (q1.x - q0.x),
            q0.y + s * (q1.y - q0.y),
            q0.z + s * (q1.z - q0.z),
        )
        return out.normalized()
    theta = math.acos(min(1.0, dot))
    sin_theta = math.sin(theta)
    a = math.sin((1.0 - s) * theta) / sin_theta
    b = math.sin(s * theta) / sin_theta
    return Quat(
        a * q0.w + b * q1.w,
        a * q0.x + b * q1.x,
        a * q0.y + b * q1.y,
        a * q0.z + b * q1.z,
    ).normalized()


class Pose(NamedTuple):
    translation: Vec3
    rotation: Quat


POSE_IDENTITY = Pose(VEC3_ZERO, QUAT_IDENTITY)


def pose_compose(a: Pose, b: Pose) -> Pose:
    """a ∘ b: apply b in a's frame."""
    return Pose(
        a.translation + quat_rotate(a.rotation, b.translation),
        quat_multiply(a.rotation, b.rotation).normalized(),
    )


def pose_inverse(p: Pose) -> Pose:
    rinv = p.rotation.conjugate()
    return Pose(-quat_rotate(rinv, p.translation), rinv)


def transform_point(p: Pose, x: Vec3) -> Vec3:
    return p.translation + quat_rotate(p.rotation, x)


def rotate_vector(p: Pose, v: Vec3) -> Vec3:
    """Rotation part only (for free vectors: velocities, axes)."""
    return quat_rotate(p.rotation, v)


class Twist(NamedTuple):
    linear: Vec3
    angular: Vec3


TWIST_ZERO = Twist(VEC3_ZERO, VEC3_ZERO)


class Wrench(NamedTuple):
    force: Vec3
    torque: Vec3


WRENCH_ZERO = Wrench(VEC3_ZERO, VEC3_ZERO)


def transform_wrench(p: Pose, w: Wrench) -> Wrench:
    """Express a wrench acting at the source-frame origin in the target frame.

    p maps the source frame to the target frame: f' = R f, tau' = R tau + t x (R f).
    """
    f = quat_rotate(p.rotation, w.force)
    tau = quat_rotate(p.rotation, w.torque) + p.translation.cross(f)
    return Wrench(f, tau)
