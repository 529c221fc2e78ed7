"""URDF-subset robot models: fixed-base link/joint trees with primitive geometry.

Supported geometry: box, sphere, cylinder (mapped to a capsule of equal radius
and half-length).  A ``<collision_spheres>`` extension element per link
declares the sphere sets used for self-collision checking.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .geometry import (
    Pose,
    POSE_IDENTITY,
    Quat,
    quat_from_axis_angle,
    quat_multiply,
    quat_to_axis_angle,
    Vec3,
)
from .shapes import Box, Capsule, Shape, Sphere

JOINT_TYPES = ("revolute", "prismatic", "fixed")


class UrdfError(ValueError):
    pass


@dataclass(frozen=True)
class CollisionShape:
    shape: Shape
    local_pose: Pose = POSE_IDENTITY
    # cylinders parse to capsules; remembered so serialization round-trips
    from_cylinder: bool = False


@dataclass(frozen=True)
class LinkModel:
    name: str
    collisions: tuple[CollisionShape, ...] = ()
    mass: float = 0.0
    com: Vec3 = Vec3(0.0, 0.0, 0.0)
    inertia_diag: Vec3 = Vec3(0.0, 0.0, 0.0)
    self_collision_spheres: tuple[tuple[Vec3, float], ...] = ()


@dataclass(frozen=True)
class JointModel:
    name: str
    type: str
    parent: str
    child: str
    origin: Pose = POSE_IDENTITY
    axis: Vec3 = Vec3(0.0, 0.0, 1.0)
    lower: float = 0.0
    upper: float = 0.0
    velocity: float = math.inf
    effort: float = math.inf


@dataclass(frozen=True)
class RobotModel:
    name: str
    links: tuple[LinkModel, ...]
    joints: tuple[JointModel, ...]
    root: str

    def link(self, name: str) -> LinkModel:
        for l in self.links:
            if l.name == name:
                return l
        raise UrdfError(f"unknown link {name!r}")

    def actuated_joints(self) -> tuple[JointModel, ...]:
        return tuple(j for j in self.joints if j.type != "fixed")

    @property
    def ndof(self) -> int:
        return len(self.actuated_joints())

    def parent_joint(self, link_name: str) -> JointModel | None:
        for j in self.joints:
            if j.child == link_name:
                return j
        return None

    def child_joints(self, link_name: str) -> tuple[JointModel, ...]:
        return tuple(j for j in self.joints if j.parent == link_name)

    def subtree_links(self, joint_name: str) -> tuple[str, ...]:
        """All links on the distal (child) side of the named joint."""
        joint = next((j for j in self.joints if j.name == joint_name), None)
        if joint is None:
            raise UrdfError(f"unknown joint {joint_name!r}")
        out: list[str] = []
        stack = [joint.child]
        while stack:
            link = stack.pop()
            out.append(link)
            for j in self.child_joints(link):
                stack.append(j.child)
        return tuple(out)


def _parse_floats(text: str, n: int, where: str) -> tuple[float, ...]:
    parts = text.split()
    if len(parts) != n:
        raise UrdfError(f"{where}: expected {n} values, got {len(parts)}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as err:
        raise UrdfError(f"{where}: {err}") from None


def _rpy_to_quat(r: float, p: float, y: float) -> Quat:
    return quat_multiply(
        quat_multiply(
            quat_from_axis_angle(Vec3(0, 0, 1), y),
            quat_from_axis_angle(Vec3(0, 1, 0), p),
        ),
        quat_from_axis_angle(Vec3(1, 0, 0), r),
    ).normalized()


def _quat_to_rpy(q: Quat) -> tuple[float, float, float]:
    # ZYX convention (yaw-pitch-roll), matching _rpy_to_quat
    w, x, y, z = q
    roll = math.atan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y))
    sinp = 2 * (w * y - z * x)
    pitch = math.copysign(math.pi / 2, sinp) if abs(sinp) >= 1 else math.asin(sinp)
    yaw = math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z))
    return roll, pitch, yaw


def _parse_origin(elem: ET.Element | None, where: str) -> Pose:
    if elem is None:
        return POSE_IDENTITY
    xyz = Vec3(0, 0, 0)
    q = Quat(1, 0, 0, 0)
    if "xyz" in elem.attrib:
        xyz = Vec3(*_parse_floats(elem.attrib["xyz"], 3, f"{where}/origin@xyz"))
    if "rpy" in elem.attrib:
        r, p, y = _parse_floats(elem.attrib["rpy"], 3, f"{where}/origin@rpy")
        q = _rpy_to_quat(r, p, y)
    return Pose(xyz, q)


def _parse_geometry(elem: ET.Element, where: str) -> tuple[Shape, bool]:
    children = list(elem)
    if len(children) != 1:
        raise UrdfError(f"{where}/geometry: expected exactly one shape element")
    g = children[0]
    if g.tag == "box":
        sx, sy, sz = _parse_floats(g.attrib.get("size", ""), 3, f"{where}/box@size")
        return Box(Vec3(sx / 2, sy / 2, sz / 2)), False
    if g.tag == "sphere":
        return Sphere(float(g.attrib["radius"])), False
    if g.tag == "cylinder":
        radius = float(g.attrib["radius"])
        length = float(g.attrib["length"])
        return Capsule(radius, length / 2), True
    raise UrdfError(f"{where}/geometry: unsupported shape {g.tag!r}")


def parse_urdf(text: str) -> RobotModel:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as err:
        raise UrdfError(f"invalid XML: {err}") from None
    if root.tag != "robot":
        raise UrdfError(f"expected <robot> root, got <{root.tag}>")
    name = root.attrib.get("name", "robot")

    links: list[LinkModel] = []
    for link_el in root.findall("link"):
        lname = link_el.attrib.get("name")
        if not lname:
            raise UrdfError("link missing name attribute")
        where = f"link {lname!r}"
        mass = 0.0
        com = Vec3(0, 0, 0)
        inertia = Vec3(0, 0, 0)
        inertial = link_el.find("inertial")
        if inertial is not None:
            mass_el = inertial.find("mass")
            if mass_el is not None:
                mass = float(mass_el.attrib["value"])
            com = _parse_origin(inertial.find("origin"), where).translation
            inertia_el = inertial.find("inertia")
            if inertia_el is not None:
                inertia = Vec3(
                    float(inertia_el.attrib.get("ixx", 0)),
                    float(inertia_el.attrib.get("iyy", 0)),
                    float(inertia_el.attrib.get("izz", 0)),
                )
        collisions = []
        for col_el in link_el.findall("collision"):
            geom = col_el.find("geometry")
            if geom is None:
                raise UrdfError(f"{where}: collision without geometry")
            shape, from_cyl = _parse_geometry(geom, where)
            collisions.append(CollisionShape(shape, _parse_origin(col_el.find("origin"), where), from_cyl))
        spheres = []
        sph_el = link_el.find("collision_spheres")
        if sph_el is not None:
            for s in sph_el.findall("sphere"):
                center = Vec3(*_parse_floats(s.attrib.get("xyz", "0 0 0"), 3, f"{where}/collision_spheres"))
                spheres.append((center, float(s.attrib["radius"])))
        links.append(LinkModel(lname, tuple(collisions), mass, com, inertia, tuple(spheres)))

    link_names = {l.name for l in links}
    if len(link_names) != len(links):
        raise UrdfError("duplicate link names")

    joints: list[JointModel] = []
    for joint_el in root.findall("joint"):
        jname = joint_el.attrib.get("name")
        jtype = joint_el.attrib.get("type")
        where = f"joint {jname!r}"
        if not jname:
            raise UrdfError("joint missing name attribute")
        if jtype not in JOINT_TYPES:
            raise UrdfError(f"{where}: unknown joint type {jtype!r}")
        parent_el = joint_el.find("parent")
        child_el = joint_el.find("child")
        if parent_el is None or child_el is None:
            raise UrdfError(f"{where}: missing parent/child")
        parent, child = parent_el.attrib["link"], child_el.attrib["link"]
        if parent not in link_names or child not in link_names:
            raise UrdfError(f"{where}: parent/child references unknown link")
        axis = Vec3(0, 0, 1)
        axis_el = joint_el.find("axis")
        if axis_el is not None:
            axis = Vec3(*_parse_floats(axis_el.attrib["xyz"], 3, f"{where}/axis"))
            if abs(axis.norm() - 1.0) > 1e-9:
                raise UrdfError(f"{where}: axis must be unit norm")
        lower = upper = 0.0
        velocity = effort = math.inf
        limit_el = joint_el.find("limit")
        if limit_el is not None:
            lower = float(limit_el.attrib.get("lower", 0))
            upper = float(limit_el.attrib.get("upper", 0))
            if "velocity" in limit_el.attrib:
                velocity = float(limit_el.attrib["velocity"])
            if "effort" in limit_el.attrib:
                effort = float(limit_el.attrib["effort"])
        elif jtype != "fixed":
            raise UrdfError(f"{where}: {jtype} joint requires a <limit> element")
        if lower > upper:
            raise UrdfError(f"{where}: lower > upper")
        joints.append(
            JointModel(jname, jtype, parent, child, _parse_origin(joint_el.find("origin"), where),
                       axis, lower, upper, velocity, effort)
        )

    if len({j.name for j in joints}) != len(joints):
        raise UrdfError("duplicate joint names")

    children = {j.child for j in joints}
    if len(children) != len(joints):
        raise UrdfError("a link has multiple parent joints (not a tree)")
    roots = link_names - children
    if len(roots) != 1:
        raise UrdfError(f"expected a single root link, found {sorted(roots)}")
    root_link = roots.pop()

    # cycle check: walk up from every link; must terminate at the root
    parent_of = {j.child: j.parent for j in joints}
    for start in link_names:
        seen = set()
        cur = start
        while cur in parent_of:
            if cur in seen:
                raise UrdfError(f"cycle detected through link {cur!r}")
            seen.add(cur)
            cur = parent_of[cur]

    return RobotModel(name, tuple(links), tuple(joints), root_link)


def serialize_urdf(model: RobotModel) -> str:
    """Emit the parseable URDF subset for the given model (round-trips)."""

    def origin_attrs(pose: Pose) -> str:
        t = pose.translation
        r, p, y = _quat_to_rpy(pose.rotation)
        return f'xyz="{t.x} {t.y} {t.z}" rpy="{r} {p} {y}"'

    out = [f'<robot name="{model.name}">']
    for link in model.links:
        out.append(f'  <link name="{link.name}">')
        if link.mass > 0 or link.inertia_diag != Vec3(0, 0, 0):
            out.append("    <inertial>")
            out.append(f'      <origin xyz="{link.com.x} {link.com.y} {link.com.z}" rpy="0 0 0"/>')
            out.append(f'      <mass value="{link.mass}"/>')
            i = link.inertia_diag
            out.append(f'      <inertia ixx="{i.x}" iyy="{i.y}" izz="{i.z}" ixy="0" ixz="0" iyz="0"/>')
            out.append("    </inertial>")
        for col in link.collisions:
            out.append("    <collision>")
            out.append(f"      <origin {origin_attrs(col.local_pose)}/>")
            out.append("      <geometry>")
            s = col.shape
            if isinstance(s, Box):
                he = s.half_extents
                out.append(f'        <box size="{2 * he.x} {2 * he.y} {2 * he.z}"/>')
            elif isinstance(s, Sphere):
                out.append(f'        <sphere radius="{s.radius}"/>')
            elif isinstance(s, Capsule):
                out.append(f'        <cylinder radius="{s.radius}" length="{2 * s.half_length}"/>')
            else:
                raise UrdfError(f"cannot serialize shape {type(s).__name__}")
            out.append("      </geometry>")
            out.append("    </collision>")
        if link.self_collision_spheres:
            out.append("    <collision_spheres>")
            for center, radius in link.self_collision_spheres:
                out.append(f'      <sphere xyz="{center.x} {center.y} {center.z}" radius="{radius}"/>')
            out.append("    </collision_spheres>")
        out.append("  </link>")
    for j in model.joints:
        out.append(f'  <joint name="{j.name}" type="{j.type}">')
        out.append(f'    <parent link="{j.parent}"/>')
        out.append(f'    <child link="{j.child}"/>')
        out.append(f"    <origin {origin_attrs(j.origin)}/>")
        out.append(f'    <axis xyz="{j.axis.x} {j.axis.y} {j.axis.z}"/>')
        if j.type != "fixed":
            vel = "" if math.isinf(j.velocity) else f' velocity="{j.velocity}"'
            eff = "" if math.isinf(j.effort) else f' effort="{j.effort}"'
            out.append(f'    <limit lower="{j.lower}" upper="{j.upper}"{vel}{eff}/>')
        out.append("  </joint>")
    out.append("</robot>")
    return "\n".join(out) + "\n"
