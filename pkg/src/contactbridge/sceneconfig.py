"""Declarative world description parsed from YAML.

Every validation error names the offending YAML path (e.g.
``dynamic_objects[0].mass``).  Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .geometry import (
    Pose,
    POSE_IDENTITY,
    Quat,
    quat_from_axis_angle,
    quat_multiply,
    Twist,
    TWIST_ZERO,
    Vec3,
)
from .shapes import Box, Capsule, Plane, Shape, ShapeError, Sphere

DEFAULT_GRAVITY = Vec3(0.0, 0.0, -9.81)
DEFAULT_TIMESTEP_S = 1.0 / 240.0
WORLD_FRAME = "rpbi/world"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class MaterialParams:
    friction: float = 0.5
    restitution: float = 0.0

    def __post_init__(self):
        if self.friction < 0:
            raise ShapeError("friction must be >= 0")
        if not 0.0 <= self.restitution <= 1.0:
            raise ShapeError("restitution must be in [0, 1]")


@dataclass(frozen=True)
class FtSensorSpec:
    joint: str
    rate_hz: float


@dataclass(frozen=True)
class RobotSpec:
    name: str
    urdf_path: str
    base_pose: Pose = POSE_IDENTITY
    initial_q: tuple[float, ...] = ()
    is_visual_robot: bool = False
    ft_sensors: tuple[FtSensorSpec, ...] = ()
    max_joint_velocity: float | None = None
    material: MaterialParams = MaterialParams()


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    kind: str  # visual | collision | dynamic
    shape: Shape
    pose: Pose = POSE_IDENTITY
    mass: float = 0.0
    material: MaterialParams = MaterialParams()
    initial_twist: Twist = TWIST_ZERO
    pose_topic: str | None = None  # visual objects only; None = fixed
    color: tuple[int, int, int] = (180, 180, 180)


@dataclass(frozen=True)
class CameraSpec:
    width: int = 320
    height: int = 240
    fov_v: float = math.pi / 2
    near: float = 0.05
    far: float = 10.0
    pose: Pose = POSE_IDENTITY
    rate_hz: float = 10.0
    emit_pointcloud: bool = False

    def __post_init__(self):
        if not 0 < self.near < self.far:
            raise ShapeError("camera requires 0 < near < far")
        if not 0 < self.fov_v < math.pi:
            raise ShapeError("vertical fov must be in (0, pi)")


@dataclass(frozen=True)
class UrdfLoadSpec:
    """Articulated body loaded without robot services (limited bus presence)."""

    path: str
    base_pose: Pose = POSE_IDENTITY
    initial_q: tuple[float, ...] = ()


@dataclass(frozen=True)
class SceneConfig:
    robots: tuple[RobotSpec, ...] = ()
    visual_objects: tuple[ObjectSpec, ...] = ()
    collision_objects: tuple[ObjectSpec, ...] = ()
    dynamic_objects: tuple[ObjectSpec, ...] = ()
    urdfs: tuple[UrdfLoadSpec, ...] = ()
    camera: CameraSpec | None = None
    gravity: Vec3 = DEFAULT_GRAVITY
    timestep_s: float = DEFAULT_TIMESTEP_S
    use_sim_time: bool = True

    def all_names(self) -> list[str]:
        names = [r.name for r in self.robots]
        for group in (self.visual_objects, self.collision_objects, self.dynamic_objects):
            names.extend(o.name for o in group)
        return names


# --- parsing helpers ---------------------------------------------------------

def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(path, f"expected mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, path: str, allowed: set[str], required: set[str] = frozenset()):
    for key in node:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in node:
            raise ConfigError(f"{path}.{key}", "missing required key")


def _real(node, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(path, f"expected number, got {type(node).__name__}")
    v = float(node)
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    return v


def _string(node, path: str) -> str:
    if not isinstance(node, str) or not node:
        raise ConfigError(path, "expected non-empty string")
    return node


def _bool(node, path: str) -> bool:
    if not isinstance(node, bool):
        raise ConfigError(path, f"expected boolean, got {type(node).__name__}")
    return node


def _vec3(node, path: str) -> Vec3:
    if not isinstance(node, (list, tuple)) or len(node) != 3:
        raise ConfigError(path, "expected list of 3 numbers")
    return Vec3(*(_real(v, f"{path}[{i}]") for i, v in enumerate(node)))


def parse_pose(node, path: str) -> Pose:
    node = _require_mapping(node, path)
    _check_keys(node, path, {"translation", "rpy", "quaternion"})
    t = _vec3(node["translation"], f"{path}.translation") if "translation" in node else Vec3(0, 0, 0)
    if "quaternion" in node:
        qv = node["quaternion"]
        if not isinstance(qv, (list, tuple)) or len(qv) != 4:
            raise ConfigError(f"{path}.quaternion", "expected [w, x, y, z]")
        q = Quat(*(_real(v, f"{path}.quaternion[{i}]") for i, v in enumerate(qv)))
        if abs(q.norm() - 1.0) > 1e-6:
            raise ConfigError(f"{path}.quaternion", "must be unit norm")
        q = q.normalized()
    elif "rpy" in node:
        r, p, y = _vec3(node["rpy"], f"{path}.rpy")
        q = quat_multiply(
            quat_multiply(
                quat_from_axis_angle(Vec3(0, 0, 1), y),
                quat_from_axis_angle(Vec3(0, 1, 0), p),
            ),
            quat_from_axis_angle(Vec3(1, 0, 0), r),
        ).normalized()
    else:
        q = Quat(1.0, 0.0, 0.0, 0.0)
    return Pose(t, q)


def parse_shape(node, path: str) -> Shape:
    node = _require_mapping(node, path)
    _check_keys(node, path, {"kind", "radius", "half_extents", "half_length", "normal", "offset"}, {"kind"})
    kind = _string(node["kind"], f"{path}.kind")
    try:
        if kind == "sphere":
            _check_keys(node, path, {"kind", "radius"}, {"radius"})
            return Sphere(_real(node["radius"], f"{path}.radius"))
        if kind == "box":
            _check_keys(node, path, {"kind", "half_extents"}, {"half_extents"})
            return Box(_vec3(node["half_extents"], f"{path}.half_extents"))
        if kind == "capsule":
            _check_keys(node, path, {"kind", "radius", "half_length"}, {"radius", "half_length"})
            return Capsule(
                _real(node["radius"], f"{path}.radius"),
                _real(node["half_length"], f"{path}.half_length"),
            )
        if kind == "plane":
            _check_keys(node, path, {"kind", "normal", "offset"})
            normal = _vec3(node["normal"], f"{path}.normal") if "normal" in node else Vec3(0, 0, 1)
            offset = _real(node["offset"], f"{path}.offset") if "offset" in node else 0.0
            return Plane(normal, offset)
    except ShapeError as err:
        raise ConfigError(path, str(err)) from None
    raise ConfigError(f"{path}.kind", f"unknown shape kind {kind!r}")


def _parse_material(node, path: str) -> MaterialParams:
    node = _require_mapping(node, path)
    _check_keys(node, path, {"friction", "restitution"})
    try:
        return MaterialParams(
            friction=_real(node["friction"], f"{path}.friction") if "friction" in node else 0.5,
            restitution=_real(node["restitution"], f"{path}.restitution") if "restitution" in node else 0.0,
        )
    except ShapeError as err:
        raise ConfigError(path, str(err)) from None


def _parse_color(node, path: str) -> tuple[int, int, int]:
    if not isinstance(node, (list, tuple)) or len(node) != 3:
        raise ConfigError(path, "expected [r, g, b] with 0-255 entries")
    out = []
    for i, v in enumerate(node):
        if not isinstance(v, int) or not 0 <= v <= 255:
            raise ConfigError(f"{path}[{i}]", "expected integer in [0, 255]")
        out.append(v)
    return tuple(out)


_OBJECT_KEYS = {
    "visual": {"name", "shape", "pose", "pose_topic", "color"},
    "collision": {"name", "shape", "pose", "material", "color"},
    "dynamic": {"name", "shape", "pose", "mass", "material", "initial_twist", "color"},
}


def _parse_object(node, path: str, kind: str) -> ObjectSpec:
    node = _require_mapping(node, path)
    required = {"name", "shape"} | ({"mass"} if kind == "dynamic" else set())
    _check_keys(node, path, _OBJECT_KEYS[kind], required)
    mass = 0.0
    if kind == "dynamic":
        mass = _real(node["mass"], f"{path}.mass")
        if mass <= 0:
            raise ConfigError(f"{path}.mass", "must be positive")
    twist = TWIST_ZERO
    if "initial_twist" in node:
        tw = _require_mapping(node["initial_twist"], f"{path}.initial_twist")
        _check_keys(tw, f"{path}.initial_twist", {"linear", "angular"})
        twist = Twist(
            _vec3(tw["linear"], f"{path}.initial_twist.linear") if "linear" in tw else Vec3(0, 0, 0),
            _vec3(tw["angular"], f"{path}.initial_twist.angular") if "angular" in tw else Vec3(0, 0, 0),
        )
    return ObjectSpec(
        name=_string(node["name"], f"{path}.name"),
        kind=kind,
        shape=parse_shape(node["shape"], f"{path}.shape"),
        pose=parse_pose(node["pose"], f"{path}.pose") if "pose" in node else POSE_IDENTITY,
        mass=mass,
        material=_parse_material(node["material"], f"{path}.material") if "material" in node else MaterialParams(),
        initial_twist=twist,
        pose_topic=_string(node["pose_topic"], f"{path}.pose_topic") if "pose_topic" in node else None,
        color=_parse_color(node["color"], f"{path}.color") if "color" in node else (180, 180, 180),
    )


def _parse_robot(node, path: str) -> RobotSpec:
    node = _require_mapping(node, path)
    _check_keys(
        node,
        path,
        {"name", "urdf_path", "base_pose", "initial_q", "is_visual_robot", "ft_sensors",
         "max_joint_velocity", "material"},
        {"name", "urdf_path"},
    )
    sensors = []
    for i, item in enumerate(node.get("ft_sensors", []) or []):
        spath = f"{path}.ft_sensors[{i}]"
        item = _require_mapping(item, spath)
        _check_keys(item, spath, {"joint", "rate"}, {"joint"})
        rate = _real(item["rate"], f"{spath}.rate") if "rate" in item else 240.0
        if rate <= 0:
            raise ConfigError(f"{spath}.rate", "must be positive")
        sensors.append(FtSensorSpec(_string(item["joint"], f"{spath}.joint"), rate))
    initial_q = tuple(
        _real(v, f"{path}.initial_q[{i}]") for i, v in enumerate(node.get("initial_q", []) or [])
    )
    vmax = None
    if "max_joint_velocity" in node:
        vmax = _real(node["max_joint_velocity"], f"{path}.max_joint_velocity")
        if vmax <= 0:
            raise ConfigError(f"{path}.max_joint_velocity", "must be positive")
    return RobotSpec(
        name=_string(node["name"], f"{path}.name"),
        urdf_path=_string(node["urdf_path"], f"{path}.urdf_path"),
        base_pose=parse_pose(node["base_pose"], f"{path}.base_pose") if "base_pose" in node else POSE_IDENTITY,
        initial_q=initial_q,
        is_visual_robot=_bool(node["is_visual_robot"], f"{path}.is_visual_robot")
        if "is_visual_robot" in node
        else False,
        ft_sensors=tuple(sensors),
        max_joint_velocity=vmax,
        material=_parse_material(node["material"], f"{path}.material") if "material" in node else MaterialParams(),
    )


def _parse_camera(node, path: str) -> CameraSpec:
    node = _require_mapping(node, path)
    _check_keys(node, path, {"width", "height", "fov_v_deg", "near", "far", "pose", "rate", "emit_pointcloud"})
    kwargs = {}
    for key in ("width", "height"):
        if key in node:
            v = node[key]
            if not isinstance(v, int) or v <= 0:
                raise ConfigError(f"{path}.{key}", "expected positive integer")
            kwargs[key] = v
    if "fov_v_deg" in node:
        kwargs["fov_v"] = math.radians(_real(node["fov_v_deg"], f"{path}.fov_v_deg"))
    for key in ("near", "far"):
        if key in node:
            kwargs[key] = _real(node[key], f"{path}.{key}")
    if "pose" in node:
        kwargs["pose"] = parse_pose(node["pose"], f"{path}.pose")
    if "rate" in node:
        kwargs["rate_hz"] = _real(node["rate"], f"{path}.rate")
    if "emit_pointcloud" in node:
        kwargs["emit_pointcloud"] = _bool(node["emit_pointcloud"], f"{path}.emit_pointcloud")
    try:
        return CameraSpec(**kwargs)
    except ShapeError as err:
        raise ConfigError(path, str(err)) from None


def parse_scene_config(text: str) -> SceneConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError("<document>", f"invalid YAML: {err}") from None
    if doc is None:
        doc = {}
    doc = _require_mapping(doc, "<document>")
    allowed = {
        "robots", "visual_objects", "collision_objects", "dynamic_objects", "urdfs",
        "soft_objects", "camera", "gravity", "timestep_s", "use_sim_time",
    }
    _check_keys(doc, "<document>", allowed)
    if "soft_objects" in doc:
        raise ConfigError("soft_objects", "unsupported (soft bodies are out of scope)")

    def seq(key) -> list:
        v = doc.get(key, []) or []
        if not isinstance(v, list):
            raise ConfigError(key, "expected list")
        return v

    robots = tuple(_parse_robot(n, f"robots[{i}]") for i, n in enumerate(seq("robots")))
    visual = tuple(_parse_object(n, f"visual_objects[{i}]", "visual") for i, n in enumerate(seq("visual_objects")))
    collision = tuple(
        _parse_object(n, f"collision_objects[{i}]", "collision") for i, n in enumerate(seq("collision_objects"))
    )
    dynamic = tuple(
        _parse_object(n, f"dynamic_objects[{i}]", "dynamic") for i, n in enumerate(seq("dynamic_objects"))
    )
    urdfs = []
    for i, n in enumerate(seq("urdfs")):
        upath = f"urdfs[{i}]"
        n = _require_mapping(n, upath)
        _check_keys(n, upath, {"path", "base_pose", "initial_q"}, {"path"})
        urdfs.append(
            UrdfLoadSpec(
                path=_string(n["path"], f"{upath}.path"),
                base_pose=parse_pose(n["base_pose"], f"{upath}.base_pose") if "base_pose" in n else POSE_IDENTITY,
                initial_q=tuple(
                    _real(v, f"{upath}.initial_q[{j}]") for j, v in enumerate(n.get("initial_q", []) or [])
                ),
            )
        )

    timestep = DEFAULT_TIMESTEP_S
    if "timestep_s" in doc:
        timestep = _real(doc["timestep_s"], "timestep_s")
        if timestep <= 0:
            raise ConfigError("timestep_s", "must be positive")

    config = SceneConfig(
        robots=robots,
        visual_objects=visual,
        collision_objects=collision,
        dynamic_objects=dynamic,
        urdfs=tuple(urdfs),
        camera=_parse_camera(doc["camera"], "camera") if "camera" in doc else None,
        gravity=_vec3(doc["gravity"], "gravity") if "gravity" in doc else DEFAULT_GRAVITY,
        timestep_s=timestep,
        use_sim_time=_bool(doc["use_sim_time"], "use_sim_time") if "use_sim_time" in doc else True,
    )

    seen: set[str] = set()
    groups = [("robots", config.robots), ("visual_objects", config.visual_objects),
              ("collision_objects", config.collision_objects), ("dynamic_objects", config.dynamic_objects)]
    for group_key, group in groups:
        for i, item in enumerate(group):
            if item.name in seen:
                raise ConfigError(f"{group_key}[{i}].name", f"duplicate name {item.name!r}")
            seen.add(item.name)
    for i, obj in enumerate(config.visual_objects):
        if obj.mass or obj.material != MaterialParams():
            raise ConfigError(f"visual_objects[{i}]", "visual objects carry no mass/material")
    return config
