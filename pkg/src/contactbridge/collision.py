"""Narrowphase contact generation between primitive pairs.

Supported pairs: sphere-sphere, sphere-plane, sphere-box, sphere-capsule,
capsule-plane, capsule-box, box-plane, box-box (SAT with a clipped manifold
of up to 4 points).  Contact normals point from body a to body b; a pair
generates contacts when the gap is <= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose, quat_rotate, quat_to_matrix, transform_point, Vec3
from .shapes import Box, Capsule, Plane, Shape, Sphere


class UnsupportedPair(ValueError):
    pass


@dataclass
class RawContact:
    point: Vec3  # world
    normal: Vec3  # unit, from a to b
    depth: float  # >= 0
    feature: int  # stable id within the pair, for warm starting


def pair_supported(a: Shape, b: Shape) -> bool:
    kinds = {type(a), type(b)}
    if kinds == {Plane}:
        return False
    if kinds == {Capsule}:
        return False
    return True


def _flip(contacts: list[RawContact]) -> list[RawContact]:
    for c in contacts:
        c.normal = -c.normal
    return contacts


def collide(a: Shape, pa: Pose, b: Shape, pb: Pose) -> list[RawContact]:
    """Contacts between two posed shapes; normals point from a to b."""
    if isinstance(a, Plane):
        return _flip(_collide_vs_plane(b, pb, a, pa))
    if isinstance(b, Plane):
        return _collide_vs_plane(a, pa, b, pb)
    if isinstance(a, Sphere):
        if isinstance(b, Sphere):
            return _sphere_sphere(a, pa, b, pb)
        if isinstance(b, Box):
            return _sphere_box(a, pa, b, pb)
        if isinstance(b, Capsule):
            return _sphere_capsule(a, pa, b, pb)
    if isinstance(a, Box):
        if isinstance(b, Sphere):
            return _flip(_sphere_box(b, pb, a, pa))
        if isinstance(b, Box):
            return _box_box(a, pa, b, pb)
        if isinstance(b, Capsule):
            return _flip(_capsule_box(b, pb, a, pa))
    if isinstance(a, Capsule):
        if isinstance(b, Sphere):
            return _flip(_sphere_capsule(b, pb, a, pa))
        if isinstance(b, Box):
            return _capsule_box(a, pa, b, pb)
    raise UnsupportedPair(f"unsupported contact pair {type(a).__name__}-{type(b).__name__}")


def world_plane(plane: Plane, pose: Pose) -> tuple[Vec3, float]:
    """(normal, offset) with normal . x = offset in world coordinates."""
    n = quat_rotate(pose.rotation, plane.normal)
    point = transform_point(pose, plane.normal * plane.offset)
    return n, n.dot(point)


def _collide_vs_plane(shape: Shape, pose: Pose, plane: Plane, plane_pose: Pose) -> list[RawContact]:
    """Contacts with normals pointing from the shape toward the plane (flipped by caller)."""
    n, d = world_plane(plane, plane_pose)
    out: list[RawContact] = []
    if isinstance(shape, Sphere):
        c = pose.translation
        gap = n.dot(c) - d - shape.radius
        if gap <= 0.0:
            foot = c - n * (n.dot(c) - d)
            out.append(RawContact(foot, -n, -gap, 0))
        return out
    if isinstance(shape, Box):
        corners = _box_corners(shape, pose)
        hits = []
        for i, corner in enumerate(corners):
            gap = n.dot(corner) - d
            if gap <= 0.0:
                hits.append(RawContact(corner, -n, -gap, i))
        hits.sort(key=lambda c: -c.depth)
        return hits[:4]
    if isinstance(shape, Capsule):
        axis = quat_rotate(pose.rotation, Vec3(0, 0, 1))
        for i, end in enumerate((pose.translation + axis * shape.half_length,
                                 pose.translation - axis * shape.half_length)):
            gap = n.dot(end) - d - shape.radius
            if gap <= 0.0:
                foot = end - n * (n.dot(end) - d)
                out.append(RawContact(foot, -n, -gap, i))
        return out
    raise UnsupportedPair(f"unsupported pair {type(shape).__name__}-plane")


def _sphere_sphere(a: Sphere, pa: Pose, b: Sphere, pb: Pose) -> list[RawContact]:
    delta = pb.translation - pa.translation
    dist = delta.norm()
    gap = dist - a.radius - b.radius
    if gap > 0.0:
        return []
    n = delta.normalized() if dist > 1e-12 else Vec3(0, 0, 1)
    point = pa.translation + n * (a.radius + 0.5 * gap)
    return [RawContact(point, n, -gap, 0)]


def _box_corners(box: Box, pose: Pose) -> list[Vec3]:
    he = box.half_extents
    out = []
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                out.append(transform_point(pose, Vec3(sx * he.x, sy * he.y, sz * he.z)))
    return out


def _closest_point_on_box(box: Box, pose: Pose, p: Vec3) -> tuple[Vec3, bool]:
    """(closest surface/interior point, point-was-inside)."""
    R = quat_to_matrix(pose.rotation)
    d = p - pose.translation
    # into box frame (R^T d)
    local = Vec3(
        R[0][0] * d.x + R[1][0] * d.y + R[2][0] * d.z,
        R[0][1] * d.x + R[1][1] * d.y + R[2][1] * d.z,
        R[0][2] * d.x + R[1][2] * d.y + R[2][2] * d.z,
    )
    he = box.half_extents
    clamped = Vec3(
        min(max(local.x, -he.x), he.x),
        min(max(local.y, -he.y), he.y),
        min(max(local.z, -he.z), he.z),
    )
    inside = clamped == local
    if inside:
        # push to the nearest face
        dx = he.x - abs(local.x)
        dy = he.y - abs(local.y)
        dz = he.z - abs(local.z)
        if dx <= dy and dx <= dz:
            clamped = Vec3(math.copysign(he.x, local.x) if local.x != 0 else he.x, local.y, local.z)
        elif dy <= dz:
            clamped = Vec3(local.x, math.copysign(he.y, local.y) if local.y != 0 else he.y, local.z)
        else:
            clamped = Vec3(local.x, local.y, math.copysign(he.z, local.z) if local.z != 0 else he.z)
    return transform_point(pose, clamped), inside


def _sphere_box(sphere: Sphere, ps: Pose, box: Box, pb: Pose) -> list[RawContact]:
    surface, inside = _closest_point_on_box(box, pb, ps.translation)
    delta = surface - ps.translation
    dist = delta.norm()
    if inside:
        # center inside the box: normal points from sphere out through the face
        n = (surface - ps.translation)
        n = n.normalized() if n.norm() > 1e-12 else Vec3(0, 0, 1)
        return [RawContact(surface, -n, sphere.radius + dist, 0)]
    gap = dist - sphere.radius
    if gap > 0.0:
        return []
    n = delta.normalized() if dist > 1e-12 else Vec3(0, 0, 1)
    return [RawContact(surface, n, -gap, 0)]


def _capsule_segment(c: Capsule, pose: Pose) -> tuple[Vec3, Vec3]:
    axis = quat_rotate(pose.rotation, Vec3(0, 0, 1))
    return (pose.translation - axis * c.half_length, pose.translation + axis * c.half_length)


def _sphere_capsule(sphere: Sphere, ps: Pose, cap: Capsule, pc: Pose) -> list[RawContact]:
    a0, a1 = _capsule_segment(cap, pc)
    seg = a1 - a0
    t = 0.0
    seg_len2 = seg.dot(seg)
    if seg_len2 > 0:
        t = min(max((ps.translation - a0).dot(seg) / seg_len2, 0.0), 1.0)
    closest = a0 + seg * t
    delta = closest - ps.translation
    dist = delta.norm()
    gap = dist - sphere.radius - cap.radius
    if gap > 0.0:
        return []
    n = delta.normalized() if dist > 1e-12 else Vec3(0, 0, 1)
    point = ps.translation + n * (sphere.radius + 0.5 * gap)
    return [RawContact(point, n, -gap, 0)]


def _capsule_box(cap: Capsule, pc: Pose, box: Box, pb: Pose) -> list[RawContact]:
    # distance from a segment point to the box is convex in the segment
    # parameter; ternary search finds the closest point
    a0, a1 = _capsule_segment(cap, pc)

    def dist_at(t: float) -> float:
        p = a0 + (a1 - a0) * t
        surface, inside = _closest_point_on_box(box, pb, p)
        d = (surface - p).norm()
        return -d if inside else d

    lo, hi = 0.0, 1.0
    for _ in range(60):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if dist_at(m1) <= dist_at(m2):
            hi = m2
        else:
            lo = m1
    t_best = 0.5 * (lo + hi)
    contacts: list[RawContact] = []
    # probe both endpoints too, so a capsule lying on a face gets 2 points
    candidates = sorted({0.0, round(t_best, 9), 1.0})
    for i, t in enumerate(candidates):
        p = a0 + (a1 - a0) * t
        surface, inside = _closest_point_on_box(box, pb, p)
        delta = surface - p
        dist = delta.norm()
        if inside:
            n = delta.normalized() if dist > 1e-12 else Vec3(0, 0, 1)
            contacts.append(RawContact(surface, -n, cap.radius + dist, i))
            continue
        gap = dist - cap.radius
        if gap <= 0.0:
            n = delta.normalized() if dist > 1e-12 else Vec3(0, 0, 1)
            contacts.append(RawContact(surface, n, -gap, i))
    # drop near-duplicate points
    unique: list[RawContact] = []
    for c in contacts:
        if all((c.point - u.point).norm() > 1e-6 for u in unique):
            unique.append(c)
    return unique


# --- box-box SAT -------------------------------------------------------------

def _axes(pose: Pose) -> list[Vec3]:
    R = quat_to_matrix(pose.rotation)
    return [Vec3(R[0][i], R[1][i], R[2][i]) for i in range(3)]


def _box_box(a: Box, pa: Pose, b: Box, pb: Pose) -> list[RawContact]:
    ea = a.half_extents
    eb = b.half_extents
    A = _axes(pa)
    B = _axes(pb)
    T = pb.translation - pa.translation

    best_pen = math.inf
    best_axis: Vec3 | None = None
    best_kind = -1  # 0..2 face of A, 3..5 face of B, 6+ edge pair

    def test_axis(axis: Vec3, kind: int, face_bias: float) -> bool:
        nonlocal best_pen, best_axis, best_kind
        length = axis.norm()
        if length < 1e-9:
            return True
        axis = axis * (1.0 / length)
        ra = ea.x * abs(axis.dot(A[0])) + ea.y * abs(axis.dot(A[1])) + ea.z * abs(axis.dot(A[2]))
        rb = eb.x * abs(axis.dot(B[0])) + eb.y * abs(axis.dot(B[1])) + eb.z * abs(axis.dot(B[2]))
        pen = ra + rb - abs(T.dot(axis))
        if pen < 0.0:
            return False
        # favor face axes slightly to stabilize manifold selection
        if pen * face_bias < best_pen:
            best_pen = pen
            best_axis = axis if T.dot(axis) >= 0 else -axis
            best_kind = kind
        return True

    for i in range(3):
        if not test_axis(A[i], i, 1.0):
            return []
    for i in range(3):
        if not test_axis(B[i], 3 + i, 1.0):
            return []
    for i in range(3):
        for j in range(3):
            if not test_axis(A[i].cross(B[j]), 6 + 3 * i + j, 1.05):
                return []
    assert best_axis is not None
    n = best_axis  # points from a to b

    if best_kind >= 6:
        i, j = divmod(best_kind - 6, 3)
        return _edge_edge_contact(a, pa, A, i, b, pb, B, j, n, best_pen)

    if best_kind < 3:
        return _face_clip(a, pa, A, ea, b, pb, B, eb, n, ref_is_a=True)
    return _face_clip(b, pb, B, eb, a, pa, A, ea, -n, ref_is_a=False)


def _edge_edge_contact(a, pa, A, i, b, pb, B, j, n: Vec3, pen: float) -> list[RawContact]:
    ea, eb = a.half_extents, b.half_extents
    ea_t = (ea.x, ea.y, ea.z)
    eb_t = (eb.x, eb.y, eb.z)
    # pick the edge endpoints supporting the separating axis on each box
    pa_pt = pa.translation
    for k in range(3):
        if k == i:
            continue
        s = 1.0 if A[k].dot(n) > 0 else -1.0
        pa_pt = pa_pt + A[k] * (s * ea_t[k])
    pb_pt = pb.translation
    for k in range(3):
        if k == j:
            continue
        s = -1.0 if B[k].dot(n) > 0 else 1.0
        pb_pt = pb_pt + B[k] * (s * eb_t[k])
    # closest points between the two infinite edge lines
    da, db = A[i], B[j]
    r = pa_pt - pb_pt
    a_dd = da.dot(da)
    e_dd = db.dot(db)
    f = db.dot(r)
    c = da.dot(r)
    bb = da.dot(db)
    denom = a_dd * e_dd - bb * bb
    s = (bb * f - c * e_dd) / denom if abs(denom) > 1e-12 else 0.0
    s = min(max(s, -ea_t[i]), ea_t[i])
    t = (bb * s + f) / e_dd if e_dd > 1e-12 else 0.0
    t = min(max(t, -eb_t[j]), eb_t[j])
    p1 = pa_pt + da * s
    p2 = pb_pt + db * t
    mid = (p1 + p2) * 0.5
    return [RawContact(mid, n, pen, 100 + 3 * i + j)]


def _face_clip(ref_box, ref_pose, ref_axes, ref_e, inc_box, inc_pose, inc_axes, inc_e,
               n: Vec3, ref_is_a: bool) -> list[RawContact]:
    """Clip the incident face of inc_box against the reference face side planes.

    n points from the reference box toward the incident box.
    """
    re = (ref_e.x, ref_e.y, ref_e.z)
    ie = (inc_e.x, inc_e.y, inc_e.z)
    # reference face: axis most aligned with n
    ref_i = max(range(3), key=lambda k: abs(ref_axes[k].dot(n)))
    ref_sign = 1.0 if ref_axes[ref_i].dot(n) > 0 else -1.0
    face_normal = ref_axes[ref_i] * ref_sign
    face_center = ref_pose.translation + face_normal * re[ref_i]

    # incident face: the face of inc most anti-parallel to n
    inc_i = max(range(3), key=lambda k: abs(inc_axes[k].dot(n)))
    inc_sign = -1.0 if inc_axes[inc_i].dot(n) > 0 else 1.0
    inc_center = inc_pose.translation + inc_axes[inc_i] * (inc_sign * ie[inc_i])
    u_idx, v_idx = [k for k in range(3) if k != inc_i]
    u, v = inc_axes[u_idx], inc_axes[v_idx]
    eu, ev = ie[u_idx], ie[v_idx]
    poly = [
        inc_center + u * eu + v * ev,
        inc_center - u * eu + v * ev,
        inc_center - u * eu - v * ev,
        inc_center + u * eu - v * ev,
    ]

    # clip against the 4 side planes of the reference face
    for k in range(3):
        if k == ref_i:
            continue
        for sign in (1.0, -1.0):
            plane_n = ref_axes[k] * sign  # keep points with plane_n.(p - center) <= extent
            limit = re[k]
            clipped: list[Vec3] = []
            m = len(poly)
            for idx in range(m):
                p0, p1 = poly[idx], poly[(idx + 1) % m]
                d0 = plane_n.dot(p0 - ref_pose.translation) - limit
                d1 = plane_n.dot(p1 - ref_pose.translation) - limit
                if d0 <= 0:
                    clipped.append(p0)
                if (d0 < 0 < d1) or (d1 < 0 < d0):
                    t = d0 / (d0 - d1)
                    clipped.append(p0 + (p1 - p0) * t)
            poly = clipped
            if not poly:
                return []

    contacts = []
    for idx, p in enumerate(poly):
        sep = face_normal.dot(p - face_center)
        if sep <= 0.0:
            point = p - face_normal * (0.5 * sep)
            normal = n if ref_is_a else -n
            contacts.append(RawContact(point, normal, -sep, idx))
    contacts.sort(key=lambda c: -c.depth)
    return contacts[:4]
