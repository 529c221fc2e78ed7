"""Position-controlled robots embedded in the world as kinematic colliders."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import (
    Pose,
    pose_compose,
    quat_log,
    quat_multiply,
    Vec3,
)
from .kinematics import fk
from .sceneconfig import MaterialParams, RobotSpec
from .urdf import RobotModel
from .world import Body, SimWorld


@dataclass
class DriveDiagnostics:
    position_clamps: int = 0
    velocity_clamps: int = 0


class RobotInstance:
    """One articulated robot: joint state plus its kinematic collider bodies."""

    def __init__(self, spec: RobotSpec, model: RobotModel, world: SimWorld):
        self.spec = spec
        self.model = model
        self.world = world
        actuated = model.actuated_joints()
        if spec.initial_q and len(spec.initial_q) != len(actuated):
            raise ValueError(
                f"robot {spec.name!r}: initial_q has {len(spec.initial_q)} values, "
                f"model has {len(actuated)} dof"
            )
        self.q: list[float] = list(spec.initial_q) if spec.initial_q else [0.0] * len(actuated)
        self.q_target: list[float] = list(self.q)
        self.diagnostics = DriveDiagnostics()
        self._collider_names: list[tuple[str, str]] = []  # (body name, link name)
        if not spec.is_visual_robot:
            self._spawn_colliders()
        self._place_colliders(initial=True)

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def ndof(self) -> int:
        return len(self.model.actuated_joints())

    def link_poses(self) -> dict[str, Pose]:
        return fk(self.model, self.q, self.spec.base_pose)

    def _spawn_colliders(self) -> None:
        for link in self.model.links:
            for i, col in enumerate(link.collisions):
                name = f"{self.spec.name}/{link.name}/{i}"
                body = Body(
                    name,
                    col.shape,
                    Pose(Vec3(0, 0, 0), self.spec.base_pose.rotation),
                    kinematic=True,
                    material=self.spec.material,
                    group=self.spec.name,
                    link=link.name,
                    kinematic_integrate=False,
                    color=(120, 140, 200),
                )
                self.world.add_body(body)
                self._collider_names.append((name, link.name))

    def _place_colliders(self, initial: bool = False, dt: float = 0.0) -> None:
        poses = self.link_poses()
        for body_name, link_name in self._collider_names:
            body = self.world.bodies.get(body_name)
            if body is None:
                continue
            link = self.model.link(link_name)
            col = link.collisions[int(body_name.rsplit("/", 1)[1])]
            new_pose = pose_compose(poses[link_name], col.local_pose)
            if initial or dt <= 0:
                body.lin_vel = Vec3(0, 0, 0)
                body.ang_vel = Vec3(0, 0, 0)
            else:
                # finite-difference surface twist, used by friction coupling
                body.lin_vel = (new_pose.translation - body.pose.translation) * (1.0 / dt)
                q_rel = quat_multiply(new_pose.rotation, body.pose.rotation.conjugate())
                body.ang_vel = quat_log(q_rel.normalized()) * (1.0 / dt)
            body.pose = new_pose

    def set_target(self, q_target) -> None:
        if len(q_target) != self.ndof:
            raise ValueError(f"target has {len(q_target)} values, robot has {self.ndof} dof")
        self.q_target = list(q_target)

    def drive(self, dt: float) -> None:
        """Advance joints toward the target under velocity and position limits."""
        actuated = self.model.actuated_joints()
        for i, joint in enumerate(actuated):
            target = self.q_target[i]
            if target < joint.lower or target > joint.upper:
                target = min(max(target, joint.lower), joint.upper)
                self.diagnostics.position_clamps += 1
            vmax = joint.velocity
            if self.spec.max_joint_velocity is not None:
                vmax = min(vmax, self.spec.max_joint_velocity)
            delta = target - self.q[i]
            limit = vmax * dt
            if abs(delta) > limit:
                delta = limit if delta > 0 else -limit
                self.diagnostics.velocity_clamps += 1
            self.q[i] += delta
        self._place_colliders(dt=dt)

    def joint_names(self) -> list[str]:
        return [j.name for j in self.model.actuated_joints()]

    def collider_links(self) -> dict[str, str]:
        """Map collider body name -> link name (for contact attribution)."""
        return dict(self._collider_names)

    def remove(self) -> None:
        for body_name, _ in self._collider_names:
            if body_name in self.world.bodies:
                self.world.remove_body(body_name)
        self._collider_names.clear()
