"""FK, Jacobian, and IK against the closed-form planar 2R arm."""

import math

import numpy as np
import pytest

from contactbridge.geometry import (
    Pose,
    POSE_IDENTITY,
    Quat,
    quat_from_axis_angle,
    transform_point,
    Vec3,
)
from contactbridge.kinematics import (
    end_effector_link,
    fk,
    IkParams,
    ik_solve,
    ik_solvers,
    jacobian,
    joint_world_frames,
    KinematicsError,
    register_ik_solver,
)

L1, L2 = 0.5, 0.4


def ee_closed_form(q1, q2):
    # [DERIVED] planar 2R forward kinematics
    x = L1 * math.cos(q1) + L2 * math.cos(q1 + q2)
    y = L1 * math.sin(q1) + L2 * math.sin(q1 + q2)
    return Vec3(x, y, 0.0)


def jac_closed_form(q1, q2):
    # [DERIVED] analytic planar Jacobian of the ee point
    s1, c1 = math.sin(q1), math.cos(q1)
    s12, c12 = math.sin(q1 + q2), math.cos(q1 + q2)
    return np.array([
        [-L1 * s1 - L2 * s12, -L2 * s12],
        [L1 * c1 + L2 * c12, L2 * c12],
    ])


class TestFk:
    def test_matches_closed_form(self, arm2r, rng):
        for _ in range(100):
            q = (rng.uniform(-3, 3), rng.uniform(-3, 3))
            ee = fk(arm2r, q)["ee"].translation
            ref = ee_closed_form(*q)
            assert ee.x == pytest.approx(ref.x, abs=1e-12)
            assert ee.y == pytest.approx(ref.y, abs=1e-12)
            assert ee.z == pytest.approx(0.0, abs=1e-12)

    def test_zero_pose(self, arm2r):
        poses = fk(arm2r, (0.0, 0.0))
        assert poses["link_b"].translation == Vec3(0.5, 0, 0)
        assert poses["ee"].translation == Vec3(0.9, 0, 0)

    def test_base_pose_offsets_everything(self, arm2r):
        base = Pose(Vec3(1, 2, 3), quat_from_axis_angle(Vec3(0, 0, 1), 0.5))
        poses = fk(arm2r, (0.3, -0.4), base_pose=base)
        plain = fk(arm2r, (0.3, -0.4))
        for name, pose in poses.items():
            expect = transform_point(base, plain[name].translation)
            assert pose.translation.x == pytest.approx(expect.x, abs=1e-12)
            assert pose.translation.y == pytest.approx(expect.y, abs=1e-12)
            assert pose.translation.z == pytest.approx(expect.z, abs=1e-12)

    def test_wrong_dof_count(self, arm2r):
        with pytest.raises(KinematicsError):
            fk(arm2r, (0.0,))

    def test_joint_frames(self, arm2r):
        frames = joint_world_frames(arm2r, (math.pi / 2, 0.0))
        assert frames["q1"].translation == Vec3(0, 0, 0)
        assert frames["q2"].translation.x == pytest.approx(0.0, abs=1e-12)
        assert frames["q2"].translation.y == pytest.approx(0.5, abs=1e-12)


class TestJacobian:
    def test_matches_analytic(self, arm2r, rng):
        for _ in range(50):
            q = (rng.uniform(-3, 3), rng.uniform(-3, 3))
            J = jacobian(arm2r, q, "ee")
            ref = jac_closed_form(*q)
            assert np.allclose(J[0:2, :], ref, atol=1e-12)
            # planar arm about z: angular rows are (0, 0, 1) per column
            assert np.allclose(J[5, :], 1.0)

    def test_finite_difference_full_model(self, arm6, rng):
        # [DERIVED] central differences on FK, 100 random configurations
        eps = 1e-6
        link = end_effector_link(arm6)
        for _ in range(100):
            q = [rng.uniform(-1.5, 1.5) for _ in range(arm6.ndof)]
            J = jacobian(arm6, q, link)
            for col in range(arm6.ndof):
                qp, qm = list(q), list(q)
                qp[col] += eps
                qm[col] -= eps
                pp = fk(arm6, qp)[link].translation
                pm = fk(arm6, qm)[link].translation
                fd = [(a - b) / (2 * eps) for a, b in zip(pp, pm)]
                for row in range(3):
                    assert J[row, col] == pytest.approx(fd[row], abs=1e-5)

    def test_unknown_link(self, arm2r):
        with pytest.raises(KinematicsError):
            jacobian(arm2r, (0, 0), "ghost")


class TestIk:
    def test_registry(self):
        assert "dls" in ik_solvers() and "dls_position" in ik_solvers()

    def test_unknown_solver(self, arm2r):
        with pytest.raises(KinematicsError, match="unknown IK solver"):
            ik_solve("nope", arm2r, POSE_IDENTITY, (0, 0))

    def test_custom_solver_registration(self, arm2r):
        marker = []
        register_ik_solver("probe", lambda m, t, q0, p, b: marker.append(1) or None)
        ik_solve("probe", arm2r, POSE_IDENTITY, (0, 0))
        assert marker == [1]

    def test_planar_targets_converge(self, arm2r, rng):
        # 50 reachable targets from random reachable configurations
        params = IkParams(damping=0.05, max_iters=300, step_clamp=0.3)
        for _ in range(50):
            q_true = (rng.uniform(-2.5, 2.5), rng.uniform(0.3, 2.5))
            target = Pose(ee_closed_form(*q_true), Quat(1, 0, 0, 0))
            seed = (q_true[0] + rng.uniform(-0.3, 0.3), q_true[1] + rng.uniform(-0.3, 0.3))
            res = ik_solve("dls_position", arm2r, target, seed, params)
            assert res.converged
            got = fk(arm2r, res.q)["ee"].translation
            err = (got - target.translation).norm()
            assert err <= 1e-4

    def test_full_pose_targets_on_arm6(self, arm6, rng):
        params = IkParams(damping=0.05, max_iters=500, step_clamp=0.3)
        link = end_effector_link(arm6)
        hits = 0
        for _ in range(20):
            q_true = [rng.uniform(-1.2, 1.2) for _ in range(6)]
            target = fk(arm6, q_true)[link]
            seed = [qi + rng.uniform(-0.2, 0.2) for qi in q_true]
            res = ik_solve("dls", arm6, target, seed, params)
            if res.converged:
                hits += 1
                assert res.pos_err <= 1e-4
        assert hits >= 18  # near-seeded full-pose IK should almost always land

    def test_unreachable_reports_not_converged(self, arm2r):
        target = Pose(Vec3(5.0, 0.0, 0.0), Quat(1, 0, 0, 0))  # beyond 0.9 m reach
        res = ik_solve("dls_position", arm2r, target, (0.1, 0.1))
        assert not res.converged
        assert res.pos_err > 1.0

    def test_solution_respects_limits(self, arm2r, rng):
        params = IkParams(damping=0.05, max_iters=300, step_clamp=0.3)
        for _ in range(20):
            target = Pose(ee_closed_form(rng.uniform(-3, 3), rng.uniform(-3, 3)), Quat(1, 0, 0, 0))
            res = ik_solve("dls_position", arm2r, target, (0.0, 0.5), params)
            for qi, joint in zip(res.q, arm2r.actuated_joints()):
                assert joint.lower - 1e-12 <= qi <= joint.upper + 1e-12

    def test_end_effector_detection(self, arm2r, arm6):
        assert end_effector_link(arm2r) == "ee"
        assert end_effector_link(arm6) == "ee_link"
