"""Fixed-timestep rigid-body world.

Semi-implicit Euler integration with a sequential-impulse contact solver:
Baumgarte positional correction, two-direction Coulomb friction, restitution
above an approach-speed threshold, and warm starting.  Robot links enter as
kinematic colliders whose poses and surface twists are prescribed each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .collision import collide, pair_supported, RawContact, UnsupportedPair
from .geometry import (
    Pose,
    Quat,
    quat_multiply,
    quat_to_matrix,
    Vec3,
)
from .sceneconfig import MaterialParams
from .shapes import Box, Capsule, Plane, Shape, Sphere

DEFAULT_VELOCITY_ITERATIONS = 10
BAUMGARTE_BETA = 0.2
PENETRATION_SLOP = 1e-3  # m
RESTITUTION_THRESHOLD = 0.1  # m/s approach speed


class SimulationError(RuntimeError):
    pass


def inertia_diag_for(shape: Shape, mass: float) -> Vec3:
    if isinstance(shape, Sphere):
        i = 0.4 * mass * shape.radius**2
        return Vec3(i, i, i)
    if isinstance(shape, Box):
        he = shape.half_extents
        return Vec3(
            mass / 3.0 * (he.y**2 + he.z**2),
            mass / 3.0 * (he.x**2 + he.z**2),
            mass / 3.0 * (he.x**2 + he.y**2),
        )
    if isinstance(shape, Capsule):
        # solid capsule about its local Z axis
        r, h = shape.radius, 2 * shape.half_length
        m_cyl = mass * h / (h + 4 * r / 3)
        m_hemi = (mass - m_cyl) / 2
        izz = m_cyl * r**2 / 2 + 2 * m_hemi * (2 * r**2 / 5)
        ixx = (
            m_cyl * (h**2 / 12 + r**2 / 4)
            + 2 * m_hemi * (2 * r**2 / 5 + h**2 / 4 + 3 * h * r / 8)
        )
        return Vec3(ixx, ixx, izz)
    raise SimulationError(f"no inertia for shape {type(shape).__name__}")


class Body:
    """One rigid body; kinematic bodies follow prescribed poses/twists."""

    __slots__ = (
        "name", "shape", "pose", "lin_vel", "ang_vel", "mass", "inv_mass",
        "inertia_diag", "material", "kinematic", "kinematic_integrate",
        "group", "link", "color",
    )

    def __init__(self, name: str, shape: Shape, pose: Pose, *, mass: float = 0.0,
                 material: MaterialParams = MaterialParams(), kinematic: bool = False,
                 lin_vel: Vec3 = Vec3(0, 0, 0), ang_vel: Vec3 = Vec3(0, 0, 0),
                 inertia_diag: Vec3 | None = None, group: str | None = None,
                 link: str | None = None, color: tuple[int, int, int] = (180, 180, 180),
                 kinematic_integrate: bool = True):
        if not kinematic and mass <= 0:
            raise SimulationError(f"dynamic body {name!r} requires positive mass")
        self.name = name
        self.shape = shape
        self.pose = pose
        self.lin_vel = lin_vel
        self.ang_vel = ang_vel
        self.mass = mass
        self.inv_mass = 0.0 if kinematic else 1.0 / mass
        self.kinematic = kinematic
        if kinematic:
            self.inertia_diag = Vec3(0, 0, 0)
        else:
            self.inertia_diag = inertia_diag if inertia_diag is not None else inertia_diag_for(shape, mass)
        self.material = material
        # pose-driven kinematic bodies (robot links) skip twist integration
        self.kinematic_integrate = kinematic_integrate
        self.group = group
        self.link = link
        self.color = color

    def inv_inertia_world(self):
        """World-frame inverse inertia, 3x3 row tuples (zeros when kinematic)."""
        if self.kinematic:
            return ((0.0,) * 3,) * 3
        R = quat_to_matrix(self.pose.rotation)
        inv = (1.0 / self.inertia_diag.x, 1.0 / self.inertia_diag.y, 1.0 / self.inertia_diag.z)
        out = []
        for r in range(3):
            row = []
            for c in range(3):
                row.append(sum(R[r][k] * inv[k] * R[c][k] for k in range(3)))
            out.append(tuple(row))
        return tuple(out)

    def velocity_at(self, point: Vec3) -> Vec3:
        r = point - self.pose.translation
        return self.lin_vel + self.ang_vel.cross(r)


def _matvec(m, v: Vec3) -> Vec3:
    return Vec3(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )


def _tangent_basis(n: Vec3) -> tuple[Vec3, Vec3]:
    ref = Vec3(1, 0, 0) if abs(n.x) < 0.9 else Vec3(0, 1, 0)
    t1 = n.cross(ref).normalized()
    return t1, n.cross(t1)


@dataclass
class ContactPoint:
    body_a: str
    body_b: str
    point: Vec3
    normal: Vec3  # unit, from a to b
    depth: float
    normal_impulse: float = 0.0
    friction_impulse: tuple[float, float] = (0.0, 0.0)


@dataclass
class StepReport:
    contacts: list[ContactPoint]
    sim_time_ns: int
    step_count: int


class _Constraint:
    __slots__ = ("a", "b", "point", "n", "t1", "t2", "ra", "rb", "mass_n", "mass_t1",
                 "mass_t2", "bias", "mu", "Pn", "Pt1", "Pt2", "key", "depth",
                 "inv_ia", "inv_ib")

    def __init__(self, a: Body, b: Body, raw: RawContact, dt: float, warm,
                 gravity_dt: Vec3 = Vec3(0.0, 0.0, 0.0)):
        self.a = a
        self.b = b
        self.point = raw.point
        self.depth = raw.depth
        n = raw.normal
        self.n = n
        self.t1, self.t2 = _tangent_basis(n)
        self.ra = raw.point - a.pose.translation
        self.rb = raw.point - b.pose.translation
        inv_ia = self.inv_ia = a.inv_inertia_world()
        inv_ib = self.inv_ib = b.inv_inertia_world()

        def eff_mass(axis: Vec3) -> float:
            ran = self.ra.cross(axis)
            rbn = self.rb.cross(axis)
            k = a.inv_mass + b.inv_mass
            k += ran.dot(_matvec(inv_ia, ran))
            k += rbn.dot(_matvec(inv_ib, rbn))
            return 1.0 / k if k > 0 else 0.0

        self.mass_n = eff_mass(n)
        self.mass_t1 = eff_mass(self.t1)
        self.mass_t2 = eff_mass(self.t2)

        vrel = b.velocity_at(raw.point) - a.velocity_at(raw.point)
        vn0 = n.dot(vrel)
        # restitution targets the pre-gravity impact speed; without this the
        # e*g*dt added every bounce pumps energy into resting micro-bounces
        g_rel = n.dot(gravity_dt) * (float(not b.kinematic) - float(not a.kinematic))
        vn_impact = vn0 - g_rel
        e = max(a.material.restitution, b.material.restitution)
        bounce = -e * vn_impact if vn_impact < -RESTITUTION_THRESHOLD else 0.0
        baumgarte = (BAUMGARTE_BETA / dt) * max(raw.depth - PENETRATION_SLOP, 0.0)
        self.bias = max(bounce, baumgarte)
        self.mu = math.sqrt(a.material.friction * b.material.friction)
        self.key = (a.name, b.name, raw.feature)
        self.Pn, self.Pt1, self.Pt2 = warm.get(self.key, (0.0, 0.0, 0.0))

    def apply(self, impulse: Vec3) -> None:
        a, b = self.a, self.b
        if not a.kinematic:
            a.lin_vel = a.lin_vel - impulse * a.inv_mass
            a.ang_vel = a.ang_vel - _matvec(self.inv_ia, self.ra.cross(impulse))
        if not b.kinematic:
            b.lin_vel = b.lin_vel + impulse * b.inv_mass
            b.ang_vel = b.ang_vel + _matvec(self.inv_ib, self.rb.cross(impulse))

    def warm_start(self) -> None:
        if self.Pn or self.Pt1 or self.Pt2:
            self.apply(self.n * self.Pn + self.t1 * self.Pt1 + self.t2 * self.Pt2)

    def solve(self) -> None:
        # scalar-unrolled hot path: one Vec3 write-back per body per call
        a, b = self.a, self.b
        alx, aly, alz = a.lin_vel
        awx, awy, awz = a.ang_vel
        blx, bly, blz = b.lin_vel
        bwx, bwy, bwz = b.ang_vel
        rax, ray, raz = self.ra
        rbx, rby, rbz = self.rb
        a_im, b_im = a.inv_mass, b.inv_mass
        a_kin, b_kin = a.kinematic, b.kinematic
        ia, ib = self.inv_ia, self.inv_ib

        def apply_scalar(px, py, pz):
            nonlocal alx, aly, alz, awx, awy, awz, blx, bly, blz, bwx, bwy, bwz
            if not a_kin:
                alx -= px * a_im
                aly -= py * a_im
                alz -= pz * a_im
                lx = ray * pz - raz * py
                ly = raz * px - rax * pz
                lz = rax * py - ray * px
                awx -= ia[0][0] * lx + ia[0][1] * ly + ia[0][2] * lz
                awy -= ia[1][0] * lx + ia[1][1] * ly + ia[1][2] * lz
                awz -= ia[2][0] * lx + ia[2][1] * ly + ia[2][2] * lz
            if not b_kin:
                blx += px * b_im
                bly += py * b_im
                blz += pz * b_im
                lx = rby * pz - rbz * py
                ly = rbz * px - rbx * pz
                lz = rbx * py - rby * px
                bwx += ib[0][0] * lx + ib[0][1] * ly + ib[0][2] * lz
                bwy += ib[1][0] * lx + ib[1][1] * ly + ib[1][2] * lz
                bwz += ib[2][0] * lx + ib[2][1] * ly + ib[2][2] * lz

        def rel_vel():
            vx = (blx + bwy * rbz - bwz * rby) - (alx + awy * raz - awz * ray)
            vy = (bly + bwz * rbx - bwx * rbz) - (aly + awz * rax - awx * raz)
            vz = (blz + bwx * rby - bwy * rbx) - (alz + awx * ray - awy * rax)
            return vx, vy, vz

        # normal
        nx, ny, nz = self.n
        vx, vy, vz = rel_vel()
        vn = nx * vx + ny * vy + nz * vz
        new_Pn = self.Pn + (self.bias - vn) * self.mass_n
        if new_Pn < 0.0:
            new_Pn = 0.0
        d = new_Pn - self.Pn
        if d:
            apply_scalar(nx * d, ny * d, nz * d)
        self.Pn = new_Pn
        # friction, clamped by the accumulated normal impulse
        max_f = self.mu * self.Pn
        for t, mass_t, attr in ((self.t1, self.mass_t1, "Pt1"),
                                (self.t2, self.mass_t2, "Pt2")):
            tx, ty, tz = t
            vx, vy, vz = rel_vel()
            vt = tx * vx + ty * vy + tz * vz
            old = getattr(self, attr)
            new = old - vt * mass_t
            if new > max_f:
                new = max_f
            elif new < -max_f:
                new = -max_f
            d = new - old
            if d:
                apply_scalar(tx * d, ty * d, tz * d)
            setattr(self, attr, new)

        if not a_kin:
            a.lin_vel = Vec3(alx, aly, alz)
            a.ang_vel = Vec3(awx, awy, awz)
        if not b_kin:
            b.lin_vel = Vec3(blx, bly, blz)
            b.ang_vel = Vec3(bwx, bwy, bwz)


class SimWorld:
    def __init__(self, gravity: Vec3 = Vec3(0, 0, -9.81), timestep_s: float = 1.0 / 240.0,
                 velocity_iterations: int = DEFAULT_VELOCITY_ITERATIONS):
        if timestep_s <= 0:
            raise SimulationError("timestep must be positive")
        self.gravity = gravity
        self.dt = float(timestep_s)
        self._dt_frac = Fraction(timestep_s).limit_denominator(10**9)
        self.velocity_iterations = velocity_iterations
        self.bodies: dict[str, Body] = {}
        self.step_count = 0
        self._warm: dict[tuple, tuple[float, float, float]] = {}
        self._pending_ops: list = []
        self.last_report = StepReport([], 0, 0)

    @property
    def sim_time_ns(self) -> int:
        return int(self.step_count * self._dt_frac * 10**9)

    # --- world mutation (queued; applied between steps) ---

    def queue_op(self, fn) -> None:
        self._pending_ops.append(fn)

    def apply_pending(self) -> None:
        ops, self._pending_ops = self._pending_ops, []
        for fn in ops:
            fn()

    def add_body(self, body: Body) -> None:
        if body.name in self.bodies:
            raise SimulationError(f"duplicate body name {body.name!r}")
        for other in self.bodies.values():
            if self._may_collide(body, other) and not pair_supported(body.shape, other.shape):
                raise UnsupportedPair(
                    f"unsupported contact pair {type(body.shape).__name__}-"
                    f"{type(other.shape).__name__} ({body.name!r} vs {other.name!r})"
                )
        self.bodies[body.name] = body

    def remove_body(self, name: str) -> None:
        if name not in self.bodies:
            raise SimulationError(f"unknown body {name!r}")
        del self.bodies[name]

    @staticmethod
    def _may_collide(a: Body, b: Body) -> bool:
        if a.kinematic and b.kinematic:
            return False
        if a.group is not None and a.group == b.group:
            return False
        return True

    # --- stepping ---

    def detect_contacts(self) -> list[tuple[Body, Body, RawContact]]:
        out: list[tuple[Body, Body, RawContact]] = []
        bodies = list(self.bodies.values())
        for i in range(len(bodies)):
            for j in range(i + 1, len(bodies)):
                a, b = bodies[i], bodies[j]
                if not self._may_collide(a, b):
                    continue
                if not self._aabb_overlap(a, b):
                    continue
                for raw in collide(a.shape, a.pose, b.shape, b.pose):
                    out.append((a, b, raw))
        return out

    @staticmethod
    def _aabb_overlap(a: Body, b: Body) -> bool:
        from .shapes import bounding_radius

        ra = bounding_radius(a.shape)
        rb = bounding_radius(b.shape)
        if math.isinf(ra) or math.isinf(rb):
            return True
        d = b.pose.translation - a.pose.translation
        reach = ra + rb
        return d.dot(d) <= reach * reach

    def step(self) -> StepReport:
        self.apply_pending()
        dt = self.dt
        g = self.gravity
        for body in self.bodies.values():
            if not body.kinematic:
                body.lin_vel = body.lin_vel + g * dt

        raw_contacts = self.detect_contacts()
        g_dt = g * dt
        constraints = [_Constraint(a, b, raw, dt, self._warm, g_dt) for a, b, raw in raw_contacts]
        for c in constraints:
            c.warm_start()
        for _ in range(self.velocity_iterations):
            for c in constraints:
                c.solve()
        self._warm = {c.key: (c.Pn, c.Pt1, c.Pt2) for c in constraints}

        for body in self.bodies.values():
            if body.kinematic:
                if body.kinematic_integrate and (body.lin_vel != Vec3(0, 0, 0) or body.ang_vel != Vec3(0, 0, 0)):
                    t = body.pose.translation + body.lin_vel * dt
                    w = body.ang_vel
                    q = body.pose.rotation
                    dq = quat_multiply(Quat(0.0, w.x * 0.5 * dt, w.y * 0.5 * dt, w.z * 0.5 * dt), q)
                    q = Quat(q.w + dq.w, q.x + dq.x, q.y + dq.y, q.z + dq.z).normalized()
                    body.pose = Pose(t, q)
                continue
            t = body.pose.translation + body.lin_vel * dt
            w = body.ang_vel
            q = body.pose.rotation
            dq = quat_multiply(Quat(0.0, w.x * 0.5 * dt, w.y * 0.5 * dt, w.z * 0.5 * dt), q)
            q = Quat(q.w + dq.w, q.x + dq.x, q.y + dq.y, q.z + dq.z).normalized()
            body.pose = Pose(t, q)
            if not (t.is_finite() and body.lin_vel.is_finite() and body.ang_vel.is_finite()):
                raise SimulationError(f"non-finite state for body {body.name!r} at step {self.step_count}")

        self.step_count += 1
        contacts = [
            ContactPoint(c.a.name, c.b.name, c.point, c.n, c.depth, c.Pn, (c.Pt1, c.Pt2))
            for c in constraints
        ]
        self.last_report = StepReport(contacts, self.sim_time_ns, self.step_count)
        return self.last_report
