"""URDF-lite parsing, validation, and serialization."""

import math

import pytest

from contactbridge.geometry import Vec3
from contactbridge.shapes import Capsule
from contactbridge.urdf import parse_urdf, serialize_urdf, UrdfError

MINIMAL = """
<robot name="r">
  <link name="a"/>
  <link name="b"/>
  <joint name="j" type="revolute">
    <parent link="a"/><child link="b"/>
    <origin xyz="0 0 0.5"/><axis xyz="0 0 1"/>
    <limit lower="-1" upper="1" velocity="2" effort="5"/>
  </joint>
</robot>
"""


class TestParsing:
    def test_fixture_structure(self, arm2r):
        assert arm2r.name == "arm2r"
        assert arm2r.root == "base"
        assert arm2r.ndof == 2
        assert [j.name for j in arm2r.actuated_joints()] == ["q1", "q2"]
        for j in arm2r.actuated_joints():
            assert j.axis == Vec3(0, 0, 1)
            assert (j.lower, j.upper, j.velocity) == (-3.1, 3.1, 2.0)

    def test_fixed_joint_not_actuated(self, arm2r):
        fixed = arm2r.parent_joint("ee")
        assert fixed.type == "fixed"
        assert fixed.origin.translation == Vec3(0.4, 0, 0)

    def test_collision_spheres(self, arm2r):
        spheres = arm2r.link("link_a").self_collision_spheres
        assert spheres == ((Vec3(0.25, 0, 0), 0.08),)

    def test_subtree_links(self, arm2r):
        assert set(arm2r.subtree_links("q2")) == {"link_b", "ee"}

    def test_inertial(self, arm2r):
        link = arm2r.link("link_a")
        assert link.mass == 1.0
        assert link.com == Vec3(0.25, 0, 0)

    def test_cylinder_becomes_capsule(self):
        text = MINIMAL.replace(
            '<link name="b"/>',
            '<link name="b"><collision><geometry>'
            '<cylinder radius="0.04" length="0.22"/>'
            "</geometry></collision></link>",
        )
        model = parse_urdf(text)
        col = model.link("b").collisions[0]
        assert isinstance(col.shape, Capsule)
        assert col.shape.radius == pytest.approx(0.04)
        assert col.shape.half_length == pytest.approx(0.11)
        assert col.from_cylinder

    def test_shipped_arm_loads(self, arm6):
        assert arm6.ndof == 6
        assert arm6.root == "base_link"


class TestValidation:
    def test_cycle_rejected(self):
        text = MINIMAL.replace(
            "</robot>",
            '<joint name="back" type="fixed">'
            '<parent link="b"/><child link="a"/><origin xyz="0 0 0"/>'
            "</joint></robot>",
        )
        with pytest.raises(UrdfError):
            parse_urdf(text)

    def test_missing_limit_rejected(self):
        text = MINIMAL.replace('<limit lower="-1" upper="1" velocity="2" effort="5"/>', "")
        with pytest.raises(UrdfError, match="limit"):
            parse_urdf(text)

    def test_unknown_link_reference(self):
        text = MINIMAL.replace('<child link="b"/>', '<child link="ghost"/>')
        with pytest.raises(UrdfError):
            parse_urdf(text)

    def test_duplicate_link_names(self):
        text = MINIMAL.replace('<link name="b"/>', '<link name="b"/><link name="b"/>')
        with pytest.raises(UrdfError, match="duplicate"):
            parse_urdf(text)

    def test_non_unit_axis(self):
        text = MINIMAL.replace('<axis xyz="0 0 1"/>', '<axis xyz="0 0 2"/>')
        with pytest.raises(UrdfError, match="axis"):
            parse_urdf(text)

    def test_invalid_xml(self):
        with pytest.raises(UrdfError, match="XML"):
            parse_urdf("<robot name='r'>")

    def test_lower_above_upper(self):
        text = MINIMAL.replace('lower="-1" upper="1"', 'lower="1" upper="-1"')
        with pytest.raises(UrdfError):
            parse_urdf(text)


class TestSerialization:
    @pytest.mark.parametrize("fixture", ["arm2r", "arm6"])
    def test_round_trip(self, fixture, request):
        model = request.getfixturevalue(fixture)
        again = parse_urdf(serialize_urdf(model))
        assert again.name == model.name
        assert again.root == model.root
        assert len(again.links) == len(model.links)
        for a, b in zip(again.joints, model.joints):
            assert (a.name, a.type, a.parent, a.child) == (b.name, b.type, b.parent, b.child)
            assert a.axis.x == pytest.approx(b.axis.x, abs=1e-12)
            assert a.lower == pytest.approx(b.lower)
            assert a.upper == pytest.approx(b.upper)
            for ca, cb in zip(a.origin.translation, b.origin.translation):
                assert ca == pytest.approx(cb, abs=1e-12)
        for a, b in zip(again.links, model.links):
            assert a.mass == pytest.approx(b.mass)
            assert len(a.collisions) == len(b.collisions)
            assert a.self_collision_spheres == b.self_collision_spheres

    def test_cylinder_survives_round_trip(self):
        text = MINIMAL.replace(
            '<link name="b"/>',
            '<link name="b"><collision><geometry>'
            '<cylinder radius="0.04" length="0.22"/>'
            "</geometry></collision></link>",
        )
        model = parse_urdf(text)
        again = parse_urdf(serialize_urdf(model))
        col = again.link("b").collisions[0]
        assert isinstance(col.shape, Capsule) and col.from_cylinder
        assert col.shape.half_length == pytest.approx(0.11)
