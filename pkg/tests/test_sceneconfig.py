"""Scene configuration parsing and validation with path-qualified errors."""

import math

import pytest

from contactbridge.geometry import Vec3
from contactbridge.sceneconfig import ConfigError, MaterialParams, parse_scene_config
from contactbridge.shapes import Box, Plane, Sphere

from conftest import DATA

GOOD = """
timestep_s: 0.005
gravity: [0, 0, -9.81]
robots:
  - name: arm
    urdf_path: arm.urdf
    initial_q: [0.1, 0.2]
    ft_sensors:
      - {joint: wrist, rate: 100}
collision_objects:
  - name: ground
    shape: {kind: plane, normal: [0, 0, 1], offset: 0.0}
    material: {friction: 0.7}
dynamic_objects:
  - name: crate
    shape: {kind: box, half_extents: [0.1, 0.1, 0.1]}
    pose: {translation: [1, 0, 0.1]}
    mass: 2.0
visual_objects:
  - name: marker
    shape: {kind: sphere, radius: 0.02}
    pose_topic: rpbi/marker/pose
camera:
  width: 64
  height: 48
  fov_v_deg: 60
  rate: 5
"""


class TestParsing:
    def test_full_document(self):
        cfg = parse_scene_config(GOOD)
        assert cfg.timestep_s == 0.005
        assert cfg.gravity == Vec3(0, 0, -9.81)
        arm = cfg.robots[0]
        assert arm.urdf_path == "arm.urdf"
        assert arm.initial_q == (0.1, 0.2)
        assert arm.ft_sensors[0].joint == "wrist"
        assert arm.ft_sensors[0].rate_hz == 100
        assert isinstance(cfg.collision_objects[0].shape, Plane)
        assert cfg.collision_objects[0].material.friction == 0.7
        crate = cfg.dynamic_objects[0]
        assert isinstance(crate.shape, Box) and crate.mass == 2.0
        marker = cfg.visual_objects[0]
        assert isinstance(marker.shape, Sphere)
        assert marker.pose_topic == "rpbi/marker/pose"
        assert cfg.camera.width == 64
        assert cfg.camera.fov_v == pytest.approx(math.radians(60))
        assert cfg.all_names() == ["arm", "marker", "ground", "crate"]

    def test_empty_document(self):
        cfg = parse_scene_config("")
        assert cfg.robots == () and cfg.camera is None
        assert cfg.use_sim_time is True

    def test_material_defaults(self):
        cfg = parse_scene_config(GOOD)
        assert cfg.dynamic_objects[0].material == MaterialParams(0.5, 0.0)

    def test_shipped_scenes_parse(self):
        for name in ("pushing.yaml", "interaction.yaml"):
            cfg = parse_scene_config((DATA / "scenes" / name).read_text())
            assert cfg.robots and cfg.collision_objects


class TestErrors:
    def check(self, text, path_fragment):
        with pytest.raises(ConfigError) as err:
            parse_scene_config(text)
        assert path_fragment in err.value.path

    def test_soft_objects_unsupported(self):
        self.check("soft_objects: []", "soft_objects")

    def test_unknown_top_level_key(self):
        self.check("bogus: 1", "bogus")

    def test_duplicate_names(self):
        self.check(
            GOOD.replace("name: crate", "name: ground"), "dynamic_objects[0].name"
        )

    def test_visual_object_with_mass(self):
        text = GOOD.replace(
            "pose_topic: rpbi/marker/pose", "pose_topic: rpbi/marker/pose\n    mass: 1.0"
        )
        self.check(text, "visual_objects[0]")

    def test_dynamic_object_requires_positive_mass(self):
        self.check(GOOD.replace("mass: 2.0", "mass: 0"), "dynamic_objects[0].mass")

    def test_bad_shape_kind(self):
        self.check(GOOD.replace("kind: box", "kind: blob"), "dynamic_objects[0].shape.kind")

    def test_error_path_points_into_nested_field(self):
        self.check(GOOD.replace("rate: 100", "rate: -1"), "robots[0].ft_sensors[0].rate")

    def test_negative_timestep(self):
        self.check("timestep_s: -0.01", "timestep_s")

    def test_invalid_yaml(self):
        self.check("robots: [unclosed", "<document>")

    def test_non_unit_quaternion(self):
        text = GOOD.replace(
            "pose: {translation: [1, 0, 0.1]}",
            "pose: {translation: [1, 0, 0.1], quaternion: [1, 1, 0, 0]}",
        )
        self.check(text, "quaternion")
