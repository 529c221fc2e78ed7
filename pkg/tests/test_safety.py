"""Safety guard: every rule checked on every target, reject-and-hold default.

The fuzz test re-validates each guard verdict with an independent shadow
checker written directly from the rule definitions.
"""

import math
import random

import pytest

from contactbridge.geometry import Vec3
from contactbridge.kinematics import fk
from contactbridge.safety import (
    check_target,
    SafetyConfigError,
    SafetyGuard,
    SafetyLimits,
    self_collision_distance,
    WorkspaceBox,
)


def limits_for(model, **kw):
    return SafetyLimits.from_model(model, **kw)


class TestConfig:
    def test_vector_lengths(self):
        with pytest.raises(SafetyConfigError):
            SafetyLimits((0.0,), (1.0, 2.0), (1.0,))

    def test_lower_above_upper(self):
        with pytest.raises(SafetyConfigError):
            SafetyLimits((2.0,), (1.0,), (1.0,))

    def test_velocity_positive(self):
        with pytest.raises(SafetyConfigError):
            SafetyLimits((0.0,), (1.0,), (0.0,))

    def test_workspace_box_ordering(self):
        with pytest.raises(SafetyConfigError):
            WorkspaceBox("ee", Vec3(1, 0, 0), Vec3(0, 1, 1))

    def test_from_model(self, arm2r):
        lim = limits_for(arm2r)
        assert lim.position_lower == (-3.1, -3.1)
        assert lim.velocity_max == (2.0, 2.0)


class TestRules:
    def test_pass(self, arm2r):
        rep = check_target((0.1, 0.2), (0.1, 0.19), limits_for(arm2r), arm2r)
        assert rep.passed and rep.violations == ()

    def test_position_violation_names_joint(self, arm2r):
        rep = check_target((3.5, 0.0), (0.0, 0.0), limits_for(arm2r), arm2r)
        assert not rep.passed
        kinds = {(v.kind, v.subject) for v in rep.violations}
        assert ("position", "q1") in kinds

    def test_velocity_violation(self, arm2r):
        # dt_ref 0.02, vmax 2.0: a jump > 0.04 rad trips the rate rule
        rep = check_target((0.05, 0.0), (0.0, 0.0), limits_for(arm2r), arm2r)
        assert any(v.kind == "velocity" and v.subject == "q1" for v in rep.violations)

    def test_no_short_circuit(self, arm2r):
        # a target violating position and velocity reports both
        rep = check_target((3.5, 0.0), (0.0, 0.0), limits_for(arm2r), arm2r)
        kinds = {v.kind for v in rep.violations}
        assert {"position", "velocity"} <= kinds

    def test_workspace_rule(self, arm2r):
        box = WorkspaceBox("ee", Vec3(-0.5, -0.5, -0.1), Vec3(0.5, 0.5, 0.1))
        lim = limits_for(arm2r, workspace=(box,))
        # q = (0, 0): ee at x = 0.9, outside the 0.5 box
        rep = check_target((0.0, 0.0), (0.0, 0.0), lim, arm2r)
        assert any(v.kind == "workspace" and v.subject == "ee" for v in rep.violations)
        # folded configuration brings the ee inside
        rep2 = check_target((0.0, 2.8), (0.0, 2.8), lim, arm2r)
        assert not any(v.kind == "workspace" for v in rep2.violations)

    def test_workspace_unknown_link(self, arm2r):
        lim = limits_for(arm2r, workspace=(WorkspaceBox("ghost", Vec3(0, 0, 0), Vec3(1, 1, 1)),))
        with pytest.raises(SafetyConfigError, match="ghost"):
            check_target((0, 0), (0, 0), lim, arm2r)

    def test_self_collision_rule(self, arm2r):
        # fully folded: link_b sphere sits near link_a sphere
        lim = limits_for(arm2r, self_collision_min_distance=0.05)
        q_folded = (0.0, 3.1)
        d = self_collision_distance(arm2r, q_folded)
        rep = check_target(q_folded, q_folded, lim, arm2r)
        if d < 0.05:
            assert any(v.kind == "self_collision" for v in rep.violations)
        else:
            assert not any(v.kind == "self_collision" for v in rep.violations)

    def test_self_collision_requires_spheres(self, arm6):
        # arm6 declares spheres; strip them via a model lacking them
        from contactbridge.urdf import parse_urdf

        bare = parse_urdf(
            '<robot name="r"><link name="a"/><link name="b"/>'
            '<joint name="j" type="revolute"><parent link="a"/><child link="b"/>'
            '<origin xyz="0 0 1"/><axis xyz="0 0 1"/>'
            '<limit lower="-1" upper="1" velocity="1" effort="1"/></joint></robot>'
        )
        with pytest.raises(SafetyConfigError, match="spheres"):
            self_collision_distance(bare, (0.0,))

    def test_wrong_vector_length(self, arm2r):
        with pytest.raises(SafetyConfigError):
            check_target((0.0,), (0.0, 0.0), limits_for(arm2r), arm2r)


class TestGuard:
    def test_hold_on_reject(self, arm2r):
        guard = SafetyGuard(limits_for(arm2r), arm2r)
        cmd, rep = guard.forward((0.01, 0.0), (0.0, 0.0))
        assert rep.passed and cmd == (0.01, 0.0)
        cmd, rep = guard.forward((3.5, 0.0), (0.01, 0.0))
        assert not rep.passed
        assert cmd == (0.01, 0.0)  # held

    def test_nothing_safe_yet_returns_none(self, arm2r):
        guard = SafetyGuard(limits_for(arm2r), arm2r)
        cmd, rep = guard.forward((3.5, 0.0), (0.0, 0.0))
        assert cmd is None and not rep.passed

    def test_clamp_mode(self, arm2r):
        guard = SafetyGuard(limits_for(arm2r), arm2r, clamp_mode=True)
        # target just past the 3.1 position limit, close to current
        cmd, rep = guard.forward((3.12, 0.0), (3.09, 0.0))
        assert not rep.passed
        assert cmd == (3.1, 0.0)

    def test_clamp_mode_still_rejects_fast_motion(self, arm2r):
        guard = SafetyGuard(limits_for(arm2r), arm2r, clamp_mode=True)
        cmd, rep = guard.forward((3.5, 0.0), (0.0, 0.0))
        # clamped target still violates the velocity rule: hold
        assert cmd is None

    def test_reports_accumulate(self, arm2r):
        guard = SafetyGuard(limits_for(arm2r), arm2r)
        guard.forward((0.0, 0.0), (0.0, 0.0))
        guard.forward((9.0, 0.0), (0.0, 0.0))
        assert len(guard.reports) == 2
        assert guard.reports[0].passed and not guard.reports[1].passed


class TestFuzzAgainstShadowValidator:
    def shadow(self, qt, qc, lim, model):
        # independent re-derivation of the rule set
        bad = False
        for q, lo, hi in zip(qt, lim.position_lower, lim.position_upper):
            if q < lo or q > hi:
                bad = True
        for q, c, vm in zip(qt, qc, lim.velocity_max):
            if abs(q - c) / lim.dt_ref > vm:
                bad = True
        for box in lim.workspace:
            p = fk(model, qt)[box.link].translation
            if not (box.minimum.x <= p.x <= box.maximum.x
                    and box.minimum.y <= p.y <= box.maximum.y
                    and box.minimum.z <= p.z <= box.maximum.z):
                bad = True
        if lim.self_collision_min_distance is not None:
            if self_collision_distance(model, qt) < lim.self_collision_min_distance:
                bad = True
        return "reject" if bad else "pass"

    def test_ten_thousand_random_targets(self, arm2r):
        rng = random.Random(777)
        box = WorkspaceBox("ee", Vec3(-1.0, -1.0, -0.1), Vec3(1.0, 1.0, 0.1))
        lim = SafetyLimits(
            position_lower=(-3.1, -3.1),
            position_upper=(3.1, 3.1),
            velocity_max=(2.0, 2.0),
            workspace=(box,),
            self_collision_min_distance=0.02,
            dt_ref=0.02,
        )
        for _ in range(10_000):
            qc = (rng.uniform(-3.1, 3.1), rng.uniform(-3.1, 3.1))
            if rng.random() < 0.5:
                qt = tuple(c + rng.uniform(-0.06, 0.06) for c in qc)  # near the rate edge
            else:
                qt = (rng.uniform(-3.4, 3.4), rng.uniform(-3.4, 3.4))
            rep = check_target(qt, qc, lim, arm2r)
            assert rep.verdict == self.shadow(qt, qc, lim, arm2r)
