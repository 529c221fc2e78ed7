"""Collision/render primitives: plane, sphere, box, capsule."""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import Vec3


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Plane:
    """Half-space boundary: points x with normal . x = offset (local frame)."""

    normal: Vec3
    offset: float = 0.0

    def __post_init__(self):
        n = self.normal.norm()
        if n == 0.0:
            raise ShapeError("plane normal must be non-zero")
        object.__setattr__(self, "normal", self.normal.normalized())


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ShapeError("sphere radius must be positive")


@dataclass(frozen=True)
class Box:
    half_extents: Vec3

    def __post_init__(self):
        he = self.half_extents
        if he.x <= 0 or he.y <= 0 or he.z <= 0:
            raise ShapeError("box half extents must be positive")


@dataclass(frozen=True)
class Capsule:
    """Segment along local Z from -half_length to +half_length, inflated by radius."""

    radius: float
    half_length: float

    def __post_init__(self):
        if self.radius <= 0 or self.half_length <= 0:
            raise ShapeError("capsule dimensions must be positive")


Shape = Plane | Sphere | Box | Capsule


def bounding_radius(shape: Shape) -> float:
    """Radius of a local-origin-centered bounding sphere; inf for planes."""
    if isinstance(shape, Sphere):
        return shape.radius
    if isinstance(shape, Box):
        return shape.half_extents.norm()
    if isinstance(shape, Capsule):
        return shape.half_length + shape.radius
    return float("inf")
