"""Safety guard: joint/velocity limits, link workspace boxes, self-collision.

Every target is checked against all rules (no short-circuit); on rejection
the guard holds the last safe command.  A clamp-to-limits mode exists behind
a flag but reject-and-hold is the default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Vec3
from .kinematics import fk
from .urdf import RobotModel


class SafetyConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorkspaceBox:
    link: str
    minimum: Vec3
    maximum: Vec3

    def __post_init__(self):
        if not (self.minimum.x <= self.maximum.x
                and self.minimum.y <= self.maximum.y
                and self.minimum.z <= self.maximum.z):
            raise SafetyConfigError(f"workspace box for {self.link!r} has min > max")

    def contains(self, p: Vec3) -> bool:
        return (self.minimum.x <= p.x <= self.maximum.x
                and self.minimum.y <= p.y <= self.maximum.y
                and self.minimum.z <= p.z <= self.maximum.z)


@dataclass(frozen=True)
class SafetyLimits:
    position_lower: tuple[float, ...]
    position_upper: tuple[float, ...]
    velocity_max: tuple[float, ...]
    workspace: tuple[WorkspaceBox, ...] = ()
    self_collision_min_distance: float | None = None
    dt_ref: float = 0.02

    def __post_init__(self):
        n = len(self.position_lower)
        if len(self.position_upper) != n or len(self.velocity_max) != n:
            raise SafetyConfigError("limit vectors must have equal length")
        for lo, hi in zip(self.position_lower, self.position_upper):
            if lo > hi:
                raise SafetyConfigError("position lower > upper")
        if any(v <= 0 for v in self.velocity_max):
            raise SafetyConfigError("velocity limits must be positive")
        if self.dt_ref <= 0:
            raise SafetyConfigError("dt_ref must be positive")

    @classmethod
    def from_model(cls, model: RobotModel, *, workspace=(),
                   self_collision_min_distance=None, dt_ref: float = 0.02) -> "SafetyLimits":
        joints = model.actuated_joints()
        return cls(
            tuple(j.lower for j in joints),
            tuple(j.upper for j in joints),
            tuple(j.velocity if j.velocity > 0 else 1e9 for j in joints),
            tuple(workspace),
            self_collision_min_distance,
            dt_ref,
        )


@dataclass(frozen=True)
class Violation:
    kind: str  # position | velocity | workspace | self_collision
    subject: str  # joint or link name (or link pair)
    value: float
    bound: float


@dataclass(frozen=True)
class SafetyReport:
    verdict: str  # pass | reject
    violations: tuple[Violation, ...]

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def self_collision_distance(model: RobotModel, q, base_pose=None) -> float:
    """Min (center distance - r_a - r_b) over non-adjacent link sphere sets."""
    sphere_links = [l for l in model.links if l.self_collision_spheres]
    if not sphere_links:
        raise SafetyConfigError("no self-collision spheres declared in the model")
    from .geometry import POSE_IDENTITY, transform_point

    poses = fk(model, q, base_pose or POSE_IDENTITY)
    adjacent = {(j.parent, j.child) for j in model.joints}
    adjacent |= {(b, a) for a, b in adjacent}
    best = float("inf")
    for i in range(len(sphere_links)):
        for j in range(i + 1, len(sphere_links)):
            la, lb = sphere_links[i], sphere_links[j]
            if (la.name, lb.name) in adjacent:
                continue
            pa, pb = poses[la.name], poses[lb.name]
            for ca, ra in la.self_collision_spheres:
                wa = transform_point(pa, ca)
                for cb, rb in lb.self_collision_spheres:
                    wb = transform_point(pb, cb)
                    best = min(best, (wb - wa).norm() - ra - rb)
    return best


def check_target(q_target, q_current, limits: SafetyLimits, model: RobotModel,
                 base_pose=None) -> SafetyReport:
    """Run every configured rule and aggregate all violations."""
    n = len(limits.position_lower)
    if len(q_target) != n or len(q_current) != n:
        raise SafetyConfigError(f"expected {n} joint values")
    violations: list[Violation] = []
    joints = model.actuated_joints()

    for i, q in enumerate(q_target):
        if q < limits.position_lower[i]:
            violations.append(Violation("position", joints[i].name, q, limits.position_lower[i]))
        elif q > limits.position_upper[i]:
            violations.append(Violation("position", joints[i].name, q, limits.position_upper[i]))

    for i, (qt, qc) in enumerate(zip(q_target, q_current)):
        v = abs(qt - qc) / limits.dt_ref
        if v > limits.velocity_max[i]:
            violations.append(Violation("velocity", joints[i].name, v, limits.velocity_max[i]))

    if limits.workspace:
        from .geometry import POSE_IDENTITY

        poses = fk(model, q_target, base_pose or POSE_IDENTITY)
        for box in limits.workspace:
            if box.link not in poses:
                raise SafetyConfigError(f"workspace box references unknown link {box.link!r}")
            p = poses[box.link].translation
            if not box.contains(p):
                # report the largest per-axis excursion
                excess = max(
                    box.minimum.x - p.x, p.x - box.maximum.x,
                    box.minimum.y - p.y, p.y - box.maximum.y,
                    box.minimum.z - p.z, p.z - box.maximum.z,
                )
                violations.append(Violation("workspace", box.link, excess, 0.0))

    if limits.self_collision_min_distance is not None:
        dist = self_collision_distance(model, q_target, base_pose)
        if dist < limits.self_collision_min_distance:
            violations.append(
                Violation("self_collision", "<min pair>", dist, limits.self_collision_min_distance)
            )

    return SafetyReport("reject" if violations else "pass", tuple(violations))


@dataclass
class SafetyGuard:
    """Stateful reject-and-hold filter in front of a robot's command stream."""

    limits: SafetyLimits
    model: RobotModel
    base_pose: object = None
    clamp_mode: bool = False
    last_safe: tuple[float, ...] | None = None
    reports: list[SafetyReport] = field(default_factory=list)

    def forward(self, q_target, q_current) -> tuple[tuple[float, ...] | None, SafetyReport]:
        """(command-to-forward or None, report). Holds last safe on reject."""
        report = check_target(q_target, q_current, self.limits, self.model, self.base_pose)
        self.reports.append(report)
        if report.passed:
            self.last_safe = tuple(q_target)
            return self.last_safe, report
        if self.clamp_mode:
            clamped = tuple(
                min(max(q, lo), hi)
                for q, lo, hi in zip(q_target, self.limits.position_lower, self.limits.position_upper)
            )
            inner = check_target(clamped, q_current, self.limits, self.model, self.base_pose)
            if inner.passed:
                self.last_safe = clamped
                return clamped, report
        return self.last_safe, report
