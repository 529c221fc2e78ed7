"""Simulated sensing: joint force-torque readings and pinhole RGB-D rendering.

The F/T sensor is quasi-static: it reports the reaction wrench the parent
side exerts on the child side, computed from distal gravity loads and the
contact impulses of the last physics step.  The camera is a CPU raycaster
(numpy-vectorized) storing z-depth, with point-cloud back-projection.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import (
    Pose,
    pose_inverse,
    quat_rotate,
    quat_to_matrix,
    Vec3,
    Wrench,
)
from .messages import CameraInfoMsg, ImageMsg, MessageError, PointCloudMsg
from .robots import RobotInstance
from .sceneconfig import CameraSpec
from .shapes import bounding_radius, Box, Capsule, Plane, Shape, Sphere
from .world import _tangent_basis, SimWorld, StepReport


class SensorError(ValueError):
    pass


# --- force-torque ------------------------------------------------------------

def ft_read(robot: RobotInstance, world: SimWorld, joint_name: str,
            report: StepReport | None = None) -> Wrench:
    """Reaction wrench at the named joint, in the joint (child link) frame."""
    model = robot.model
    if not any(j.name == joint_name for j in model.joints):
        raise SensorError(f"robot {robot.name!r} has no joint {joint_name!r}")
    report = report if report is not None else world.last_report
    distal = set(model.subtree_links(joint_name))
    link_poses = robot.link_poses()
    joint = next(j for j in model.joints if j.name == joint_name)
    joint_frame = link_poses[joint.child]
    p_joint = joint_frame.translation

    g = world.gravity
    force = Vec3(0.0, 0.0, 0.0)
    torque = Vec3(0.0, 0.0, 0.0)
    for link_name in distal:
        link = model.link(link_name)
        if link.mass <= 0:
            continue
        com_w = link_poses[link_name].translation + quat_rotate(
            link_poses[link_name].rotation, link.com
        )
        f = g * link.mass
        force = force + f
        torque = torque + (com_w - p_joint).cross(f)

    collider_links = robot.collider_links()
    dt = world.dt
    for c in report.contacts:
        on_a = collider_links.get(c.body_a)
        on_b = collider_links.get(c.body_b)
        link_name, sign = (on_a, -1.0) if on_a in distal else (on_b, 1.0)
        if link_name not in distal:
            continue
        t1, t2 = _tangent_basis(c.normal)
        impulse = c.normal * c.normal_impulse + t1 * c.friction_impulse[0] + t2 * c.friction_impulse[1]
        f = impulse * (sign / dt)
        force = force + f
        torque = torque + (c.point - p_joint).cross(f)

    # reaction: what the parent side must exert to hold the distal subtree
    rinv = joint_frame.rotation.conjugate()
    return Wrench(quat_rotate(rinv, -force), quat_rotate(rinv, -torque))


# --- camera ------------------------------------------------------------------

def camera_intrinsics(spec: CameraSpec) -> CameraInfoMsg:
    fy = spec.height / (2.0 * math.tan(spec.fov_v / 2.0))
    return CameraInfoMsg(spec.width, spec.height, fy, fy, spec.width / 2.0, spec.height / 2.0)


def _ray_grid(info: CameraInfoMsg) -> np.ndarray:
    """Per-pixel camera-frame ray directions with unit z (so t == z-depth)."""
    u = (np.arange(info.width) - info.cx) / info.fx
    v = (np.arange(info.height) - info.cy) / info.fy
    uu, vv = np.meshgrid(u, v)
    return np.stack([uu, vv, np.ones_like(uu)], axis=-1)  # (H, W, 3)


def _pose_matrix(pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    R = np.array(quat_to_matrix(pose.rotation))
    t = np.array(pose.translation)
    return R, t


def _ray_shape(shape: Shape, pose: Pose, origin: np.ndarray, dirs: np.ndarray
               ) -> tuple[np.ndarray, np.ndarray]:
    """(t, normal) per ray in world coordinates; t = inf for misses."""
    inf = np.full(dirs.shape[:-1], np.inf)
    R, tvec = _pose_matrix(pose)
    o = (origin - tvec) @ R  # into shape frame
    d = dirs @ R

    if isinstance(shape, Plane):
        n_local = np.array(shape.normal)
        denom = d @ n_local
        t = np.where(np.abs(denom) > 1e-12, (shape.offset - o @ n_local) / np.where(denom == 0, 1, denom), np.inf)
        t = np.where(t > 0, t, np.inf)
        n_world = R @ n_local
        normals = np.broadcast_to(n_world, dirs.shape).copy()
        flip = (dirs @ n_world) > 0
        normals[flip] = -n_world
        return t, normals

    if isinstance(shape, Sphere):
        a = np.einsum("...i,...i", d, d)
        b = 2.0 * (d @ o)
        c = o @ o - shape.radius**2
        disc = b * b - 4 * a * c
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0))
        t = np.where(ok, (-b - sq) / (2 * a), np.inf)
        t = np.where(t > 0, t, np.inf)
        hit_local = o + d * t[..., None]
        normals = (hit_local / shape.radius) @ R.T
        return t, normals

    if isinstance(shape, Box):
        he = np.array(shape.half_extents)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / d
            t1 = (-he - o) * inv
            t2 = (he - o) * inv
        tmin = np.nanmax(np.minimum(t1, t2), axis=-1)
        tmax = np.nanmin(np.maximum(t1, t2), axis=-1)
        hit = (tmax >= tmin) & (tmax > 0)
        t = np.where(hit, np.where(tmin > 0, tmin, np.inf), np.inf)
        hit_local = o + d * t[..., None]
        # face normal: dominant axis of the local hit point scaled by extents
        scaled = hit_local / he
        axis = np.argmax(np.abs(scaled), axis=-1)
        n_local = np.zeros_like(d)
        idx = np.indices(axis.shape)
        n_local[(*idx, axis)] = np.sign(scaled[(*idx, axis)])
        return t, n_local @ R.T

    if isinstance(shape, Capsule):
        r, h = shape.radius, shape.half_length
        dx, dy = d[..., 0], d[..., 1]
        ox, oy = o[..., 0], o[..., 1]
        a = dx * dx + dy * dy
        b = 2 * (dx * ox + dy * oy)
        c = ox * ox + oy * oy - r * r
        disc = b * b - 4 * a * c
        ok = (disc >= 0) & (a > 1e-14)
        sq = np.sqrt(np.where(ok, disc, 0))
        t_cyl = np.where(ok, (-b - sq) / np.where(a > 1e-14, 2 * a, 1), np.inf)
        z = o[..., 2] + d[..., 2] * t_cyl
        t_cyl = np.where((t_cyl > 0) & (np.abs(z) <= h), t_cyl, np.inf)
        best = t_cyl
        n_local = np.zeros_like(d)
        hit_local = o + d * best[..., None]
        n_local[..., 0] = hit_local[..., 0]
        n_local[..., 1] = hit_local[..., 1]
        for zc in (h, -h):
            center = np.array([0.0, 0.0, zc])
            oc = o - center
            a2 = np.einsum("...i,...i", d, d)
            b2 = 2.0 * np.einsum("...i,...i", d, oc)
            c2 = np.einsum("...i,...i", oc, oc) - r * r
            disc2 = b2 * b2 - 4 * a2 * c2
            ok2 = disc2 >= 0
            sq2 = np.sqrt(np.where(ok2, disc2, 0))
            t_cap = np.where(ok2, (-b2 - sq2) / (2 * a2), np.inf)
            zcap = o[..., 2] + d[..., 2] * t_cap
            valid = (t_cap > 0) & (t_cap < best) & (np.sign(zcap - zc) == np.sign(zc))
            best = np.where(valid, t_cap, best)
            cap_hit = o + d * t_cap[..., None] - center
            n_local = np.where(valid[..., None], cap_hit, n_local)
        norms = np.linalg.norm(n_local, axis=-1, keepdims=True)
        n_local = n_local / np.where(norms > 0, norms, 1)
        return best, n_local @ R.T

    raise SensorError(f"cannot render shape {type(shape).__name__}")


def _pixel_rect(shape: Shape, pose: Pose, info: CameraInfoMsg, cam_pose: Pose
                ) -> tuple[int, int, int, int] | None:
    """Conservative screen bounding box of the shape, or None if offscreen.

    Returns the full image for planes and for shapes too close to the camera.
    """
    full = (0, info.height, 0, info.width)
    radius = bounding_radius(shape)
    if not math.isfinite(radius):
        return full
    # shape center in camera coordinates
    from .geometry import pose_inverse as _pinv, transform_point as _tp

    c = _tp(_pinv(cam_pose), pose.translation)
    near_z = c.z - radius
    if near_z <= 1e-3:
        return full if c.z + radius > 0 else None
    du = info.fx * radius / near_z
    dv = info.fy * radius / near_z
    u0 = int(math.floor(info.fx * c.x / c.z + info.cx - du)) - 1
    u1 = int(math.ceil(info.fx * c.x / c.z + info.cx + du)) + 2
    v0 = int(math.floor(info.fy * c.y / c.z + info.cy - dv)) - 1
    v1 = int(math.ceil(info.fy * c.y / c.z + info.cy + dv)) + 2
    u0, u1 = max(u0, 0), min(u1, info.width)
    v0, v1 = max(v0, 0), min(v1, info.height)
    if u0 >= u1 or v0 >= v1:
        return None
    return v0, v1, u0, u1


def render_rgbd(renderables: list[tuple[Shape, Pose, tuple[int, int, int]]],
                spec: CameraSpec) -> tuple[ImageMsg, ImageMsg]:
    """Ray-cast RGB and z-depth images; depth 0 marks no hit / beyond far."""
    info = camera_intrinsics(spec)
    dirs_cam = _ray_grid(info)
    R, origin = _pose_matrix(spec.pose)
    dirs = dirs_cam @ R.T

    depth = np.full((spec.height, spec.width), np.inf)
    color = np.zeros((spec.height, spec.width, 3), dtype=np.uint8)
    ray_norm = np.linalg.norm(dirs, axis=-1)

    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for shape, pose, rgb in renderables:
            rect = _pixel_rect(shape, pose, info, spec.pose)
            if rect is None:
                continue
            v0, v1, u0, u1 = rect
            sub = (slice(v0, v1), slice(u0, u1))
            t, normals = _ray_shape(shape, pose, origin, dirs[sub])
            closer = t < depth[sub]
            if not closer.any():
                continue
            # Lambert shading from a headlight at the camera
            view = dirs[sub] / ray_norm[sub][..., None]
            lambert = np.clip(-np.einsum("...i,...i", normals, view), 0.0, 1.0)
            shade = 0.25 + 0.75 * lambert
            shaded = np.clip(np.array(rgb) * shade[..., None], 0, 255)
            color[sub] = np.where(closer[..., None], shaded.astype(np.uint8), color[sub])
            depth[sub] = np.where(closer, t, depth[sub])

    depth = np.where((depth >= spec.near) & (depth <= spec.far), depth, 0.0)
    color[depth == 0.0] = 0
    depth_msg = ImageMsg(spec.width, spec.height, "depth32f",
                         depth.astype("<f4").tobytes())
    rgb_msg = ImageMsg(spec.width, spec.height, "rgb8", color.tobytes())
    return rgb_msg, depth_msg


def back_project(depth: ImageMsg, color: ImageMsg | None, info: CameraInfoMsg) -> PointCloudMsg:
    """Colored point cloud in the camera frame (+Z optical, +X right, +Y down)."""
    if depth.encoding != "depth32f":
        raise MessageError("back_project requires a depth32f image")
    if (depth.width, depth.height) != (info.width, info.height):
        raise MessageError("depth image dimensions do not match camera info")
    if color is not None and (color.width, color.height) != (depth.width, depth.height):
        raise MessageError("color image dimensions do not match depth")
    z = np.frombuffer(depth.data, dtype="<f4").reshape(depth.height, depth.width).astype(float)
    vv, uu = np.indices(z.shape, dtype=float)
    mask = z > 0
    zs = z[mask]
    xs = (uu[mask] - info.cx) * zs / info.fx
    ys = (vv[mask] - info.cy) * zs / info.fy
    points = tuple(Vec3(float(x), float(y), float(d)) for x, y, d in zip(xs, ys, zs))
    colors = None
    if color is not None:
        rgb = np.frombuffer(color.data, dtype=np.uint8).reshape(color.height, color.width, 3)
        sel = rgb[mask]
        colors = tuple((int(r), int(g), int(b)) for r, g, b in sel)
    return PointCloudMsg(points, colors)


def project(point: Vec3, info: CameraInfoMsg) -> tuple[float, float, float]:
    """Camera-frame point -> (u, v, z); inverse of back_project's pixel mapping."""
    if point.z <= 0:
        raise SensorError("point behind the camera")
    u = info.fx * point.x / point.z + info.cx
    v = info.fy * point.y / point.z + info.cy
    return u, v, point.z
