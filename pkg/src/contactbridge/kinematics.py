"""Forward kinematics, geometric Jacobian, and pluggable inverse kinematics.

IK solvers live in a string-keyed registry so configs can switch between
them; damped-least-squares variants ("dls" full pose, "dls_position") ship
built in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    Pose,
    POSE_IDENTITY,
    pose_compose,
    pose_inverse,
    quat_from_axis_angle,
    quat_log,
    quat_multiply,
    quat_rotate,
    Vec3,
)
from .urdf import JointModel, RobotModel, UrdfError


class KinematicsError(ValueError):
    pass


def _joint_motion(joint: JointModel, q: float) -> Pose:
    if joint.type == "revolute":
        return Pose(Vec3(0, 0, 0), quat_from_axis_angle(joint.axis, q))
    if joint.type == "prismatic":
        return Pose(joint.axis * q, POSE_IDENTITY.rotation)
    return POSE_IDENTITY


def fk(model: RobotModel, q, base_pose: Pose = POSE_IDENTITY) -> dict[str, Pose]:
    """World pose of every link for joint vector q (actuated-joint order)."""
    actuated = model.actuated_joints()
    if len(q) != len(actuated):
        raise KinematicsError(f"expected {len(actuated)} joint values, got {len(q)}")
    qmap = {j.name: qi for j, qi in zip(actuated, q)}
    poses: dict[str, Pose] = {model.root: base_pose}
    pending = list(model.joints)
    while pending:
        progressed = False
        remaining = []
        for joint in pending:
            parent_pose = poses.get(joint.parent)
            if parent_pose is None:
                remaining.append(joint)
                continue
            motion = _joint_motion(joint, qmap.get(joint.name, 0.0))
            poses[joint.child] = pose_compose(pose_compose(parent_pose, joint.origin), motion)
            progressed = True
        if not progressed:
            raise KinematicsError("disconnected joints in model")
        pending = remaining
    return poses


def joint_world_frames(model: RobotModel, q, base_pose: Pose = POSE_IDENTITY) -> dict[str, Pose]:
    """World pose of each joint frame (origin applied, motion not)."""
    link_poses = fk(model, q, base_pose)
    return {j.name: pose_compose(link_poses[j.parent], j.origin) for j in model.joints}


def jacobian(model: RobotModel, q, link: str, local_point: Vec3 = Vec3(0, 0, 0),
             base_pose: Pose = POSE_IDENTITY) -> np.ndarray:
    """Geometric Jacobian (3 linear rows, then 3 angular) at a link-frame point."""
    poses = fk(model, q, base_pose)
    if link not in poses:
        raise KinematicsError(f"unknown link {link!r}")
    target = poses[link]
    point_w = target.translation + quat_rotate(target.rotation, local_point)

    # links between root and target
    chain: set[str] = set()
    cur: str | None = link
    parent_of = {j.child: (j.parent, j) for j in model.joints}
    while cur is not None and cur in parent_of:
        chain.add(cur)
        cur = parent_of[cur][0]

    actuated = model.actuated_joints()
    if len(q) != len(actuated):
        raise KinematicsError(f"expected {len(actuated)} joint values, got {len(q)}")
    J = np.zeros((6, len(actuated)))
    for col, joint in enumerate(actuated):
        if joint.child not in chain:
            continue
        frame = pose_compose(poses[joint.parent], joint.origin)
        axis_w = quat_rotate(frame.rotation, joint.axis)
        if joint.type == "revolute":
            r = point_w - frame.translation
            lin = axis_w.cross(r)
            J[0:3, col] = lin
            J[3:6, col] = axis_w
        else:  # prismatic
            J[0:3, col] = axis_w
    return J


@dataclass(frozen=True)
class IkParams:
    damping: float = 0.1
    max_iters: int = 100
    pos_tol: float = 1e-4
    ori_tol: float = 1e-3
    step_clamp: float = 0.2

    def __post_init__(self):
        for name in ("damping", "max_iters", "pos_tol", "ori_tol", "step_clamp"):
            if getattr(self, name) <= 0:
                raise KinematicsError(f"IK parameter {name} must be positive")


@dataclass(frozen=True)
class IkResult:
    q: tuple[float, ...]
    converged: bool
    iterations: int
    pos_err: float
    ori_err: float


def _clamp_to_limits(model: RobotModel, q: np.ndarray) -> np.ndarray:
    out = q.copy()
    for i, joint in enumerate(model.actuated_joints()):
        out[i] = min(max(out[i], joint.lower), joint.upper)
    return out


def _pose_error(current: Pose, target: Pose) -> tuple[Vec3, Vec3]:
    pos_err = target.translation - current.translation
    q_err = quat_multiply(target.rotation, current.rotation.conjugate())
    return pos_err, quat_log(q_err.normalized())


def _dls(model: RobotModel, target: Pose, q0, params: IkParams,
         base_pose: Pose, position_only: bool) -> IkResult:
    actuated = model.actuated_joints()
    if len(q0) != len(actuated):
        raise KinematicsError(f"expected {len(actuated)} joint values, got {len(q0)}")
    eef = _end_link(model)
    q = _clamp_to_limits(model, np.array(q0, dtype=float))
    lam2 = params.damping**2

    def residual(qv: np.ndarray) -> tuple[np.ndarray, float, float]:
        pose = fk(model, qv, base_pose)[eef]
        pe, oe = _pose_error(pose, target)
        perr = math.sqrt(pe.dot(pe))
        oerr = math.sqrt(oe.dot(oe))
        if position_only:
            return np.array(pe), perr, oerr
        return np.array([*pe, *oe]), perr, oerr

    err, pos_err, ori_err = residual(q)
    best = (q.copy(), pos_err, ori_err)
    iterations = 0
    for iterations in range(1, params.max_iters + 1):
        if pos_err <= params.pos_tol and (position_only or ori_err <= params.ori_tol):
            return IkResult(tuple(q), True, iterations - 1, pos_err, ori_err)
        J = jacobian(model, q, eef, base_pose=base_pose)
        if position_only:
            J = J[0:3, :]
        JJt = J @ J.T + lam2 * np.eye(J.shape[0])
        dq = J.T @ np.linalg.solve(JJt, err)
        mag = np.max(np.abs(dq)) if dq.size else 0.0
        if mag > params.step_clamp:
            dq *= params.step_clamp / mag
        # accept only non-increasing residuals (halve the step otherwise)
        scale = 1.0
        accepted = False
        for _ in range(8):
            q_try = _clamp_to_limits(model, q + scale * dq)
            err_try, pe_try, oe_try = residual(q_try)
            if np.linalg.norm(err_try) <= np.linalg.norm(err) + 1e-15:
                q, err, pos_err, ori_err = q_try, err_try, pe_try, oe_try
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break
        if pos_err < best[1]:
            best = (q.copy(), pos_err, ori_err)
    converged = pos_err <= params.pos_tol and (position_only or ori_err <= params.ori_tol)
    if not converged:
        q, pos_err, ori_err = best
    return IkResult(tuple(q), converged, iterations, pos_err, ori_err)


def _end_link(model: RobotModel) -> str:
    """Deepest link with no children (tie broken by declaration order)."""
    parents = {j.parent for j in model.joints}
    leaves = [l.name for l in model.links if l.name not in parents]
    if not leaves:
        return model.root
    depth = {model.root: 0}
    parent_of = {j.child: j.parent for j in model.joints}

    def link_depth(name: str) -> int:
        if name in depth:
            return depth[name]
        depth[name] = link_depth(parent_of[name]) + 1
        return depth[name]

    return max(leaves, key=link_depth)


IkSolver = Callable[[RobotModel, Pose, "list[float] | tuple[float, ...]", IkParams, Pose], IkResult]

_SOLVERS: dict[str, IkSolver] = {}


def register_ik_solver(name: str, solver: IkSolver) -> None:
    _SOLVERS[name] = solver


def ik_solvers() -> list[str]:
    return sorted(_SOLVERS)


def ik_solve(solver: str, model: RobotModel, target: Pose, q0,
             params: IkParams = IkParams(), base_pose: Pose = POSE_IDENTITY) -> IkResult:
    fn = _SOLVERS.get(solver)
    if fn is None:
        raise KinematicsError(f"unknown IK solver {solver!r} (have {ik_solvers()})")
    return fn(model, target, q0, params, base_pose)


register_ik_solver("dls", lambda m, t, q0, p, b: _dls(m, t, q0, p, b, position_only=False))
register_ik_solver("dls_position", lambda m, t, q0, p, b: _dls(m, t, q0, p, b, position_only=True))

end_effector_link = _end_link
