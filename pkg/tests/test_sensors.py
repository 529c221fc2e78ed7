"""F/T sensing and the RGB-D raycaster with point-cloud back-projection."""

import math
import struct

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
from contactbridge.messages import CameraInfoMsg, ImageMsg, MessageError
from contactbridge.robots import RobotInstance
from contactbridge.sceneconfig import CameraSpec, RobotSpec
from contactbridge.sensors import (
    back_project,
    camera_intrinsics,
    ft_read,
    project,
    render_rgbd,
    SensorError,
)
from contactbridge.shapes import Box, Plane, Sphere
from contactbridge.world import SimWorld

DT = 1.0 / 240.0


def depth_array(msg: ImageMsg) -> np.ndarray:
    return np.frombuffer(msg.data, dtype="<f4").reshape(msg.height, msg.width)


class TestForceTorque:
    def test_static_gravity_load(self, arm6):
        # [DERIVED] ee_link mass 2.0 kg hangs below joint6: |F| = 2.0 * 9.81
        world = SimWorld(timestep_s=DT)
        bot = RobotInstance(RobotSpec(name="arm", urdf_path="x"), arm6, world)
        world.step()
        w = ft_read(bot, world, "joint6")
        assert w.force.norm() == pytest.approx(2.0 * 9.81, rel=0.02)

    def test_proximal_joint_carries_more(self, arm6):
        world = SimWorld(timestep_s=DT)
        bot = RobotInstance(RobotSpec(name="arm", urdf_path="x"), arm6, world)
        world.step()
        f2 = ft_read(bot, world, "joint2").force.norm()
        f6 = ft_read(bot, world, "joint6").force.norm()
        assert f2 > f6

    def test_unknown_joint(self, arm6):
        world = SimWorld(timestep_s=DT)
        bot = RobotInstance(RobotSpec(name="arm", urdf_path="x"), arm6, world)
        with pytest.raises(SensorError, match="joint"):
            ft_read(bot, world, "nope")

    def test_wrench_in_child_link_frame(self, arm6):
        # at zero configuration the arm is vertical: gravity reaction is +z
        world = SimWorld(timestep_s=DT)
        bot = RobotInstance(RobotSpec(name="arm", urdf_path="x"), arm6, world)
        world.step()
        w = ft_read(bot, world, "joint1")
        assert w.force.z == pytest.approx(w.force.norm(), rel=1e-6)


class TestIntrinsics:
    def test_focal_from_vertical_fov(self):
        # [DERIVED] fy = h / (2 tan(fov/2)); 90 deg, h=240 -> fy = 120
        spec = CameraSpec(width=320, height=240, fov_v=math.pi / 2)
        info = camera_intrinsics(spec)
        assert info.fy == pytest.approx(120.0)
        assert info.fx == info.fy
        assert (info.cx, info.cy) == (160.0, 120.0)

    def test_center_pixel_ray(self):
        info = camera_intrinsics(CameraSpec(width=320, height=240, fov_v=math.pi / 2))
        u, v, z = project(Vec3(0, 0, 1), info)
        assert (u, v, z) == (160.0, 120.0, 1.0)

    def test_project_behind_camera(self):
        info = camera_intrinsics(CameraSpec())
        with pytest.raises(SensorError):
            project(Vec3(0, 0, -1), info)


class TestRender:
    def looking_down(self, z=2.0, **kw):
        # camera at height z looking straight down (+z optical axis toward -z world)
        q = quat_from_axis_angle(Vec3(1, 0, 0), math.pi)
        return CameraSpec(pose=Pose(Vec3(0, 0, z), q), **kw)

    def test_plane_depth_exact(self):
        # [DERIVED] plane z=0 seen from (0,0,2) down: center depth exactly 2.0
        spec = self.looking_down(width=64, height=48, fov_v=math.pi / 3)
        rgb, depth = render_rgbd([(Plane(Vec3(0, 0, 1), 0.0), POSE_IDENTITY, (90, 90, 90))], spec)
        d = depth_array(depth)
        assert d[24, 32] == pytest.approx(2.0, abs=1e-6)
        assert (d > 0).all()  # plane fills the frame at this fov

    def test_sphere_center_depth(self):
        # sphere r=0.5 centered 2 m ahead: center-pixel depth 1.5
        spec = self.looking_down(width=64, height=48)
        rgb, depth = render_rgbd(
            [(Sphere(0.5), Pose(Vec3(0, 0, 0), Quat(1, 0, 0, 0)), (200, 0, 0))], spec
        )
        assert depth_array(depth)[24, 32] == pytest.approx(1.5, abs=1e-6)

    def test_no_hit_is_zero_depth(self):
        spec = CameraSpec(width=32, height=24)
        rgb, depth = render_rgbd([], spec)
        assert (depth_array(depth) == 0.0).all()
        assert np.frombuffer(rgb.data, dtype=np.uint8).max() == 0

    def test_beyond_far_is_zero(self):
        spec = self.looking_down(z=3.0, width=32, height=24, far=2.0)
        rgb, depth = render_rgbd([(Plane(Vec3(0, 0, 1), 0.0), POSE_IDENTITY, (90, 90, 90))], spec)
        assert (depth_array(depth) == 0.0).all()

    def test_nearer_shape_occludes(self):
        spec = self.looking_down(width=32, height=24)
        rgb, depth = render_rgbd(
            [
                (Plane(Vec3(0, 0, 1), 0.0), POSE_IDENTITY, (90, 90, 90)),
                (Box(Vec3(0.2, 0.2, 0.2)), Pose(Vec3(0, 0, 1.0), Quat(1, 0, 0, 0)), (200, 0, 0)),
            ],
            spec,
        )
        d = depth_array(depth)
        assert d[12, 16] == pytest.approx(0.8, abs=1e-6)  # box top at z=1.2, cam at 2


class TestBackProjection:
    def test_plane_points_lie_on_plane(self):
        # [DERIVED] back-projected ground pixels must reconstruct world z = 0
        q = quat_from_axis_angle(Vec3(1, 0, 0), math.pi)
        cam_pose = Pose(Vec3(0.3, -0.2, 1.7), q)
        spec = CameraSpec(width=64, height=48, fov_v=math.pi / 2, pose=cam_pose)
        rgb, depth = render_rgbd([(Plane(Vec3(0, 0, 1), 0.0), POSE_IDENTITY, (90, 90, 90))], spec)
        cloud = back_project(depth, rgb, camera_intrinsics(spec))
        assert len(cloud.points) > 2000
        worst = 0.0
        for p in cloud.points:
            wp = transform_point(cam_pose, p)
            worst = max(worst, abs(wp.z))
        assert worst <= 1e-4

    def test_project_back_project_inverse(self):
        info = camera_intrinsics(CameraSpec(width=64, height=48, fov_v=math.pi / 2))
        # build a depth image with a single pixel, back-project, re-project
        z = np.zeros((48, 64), dtype="<f4")
        z[10, 20] = 1.7
        depth = ImageMsg(64, 48, "depth32f", z.tobytes())
        cloud = back_project(depth, None, info)
        assert len(cloud.points) == 1
        u, v, d = project(cloud.points[0], info)
        assert (u, v) == pytest.approx((20.0, 10.0), abs=1e-9)
        assert d == pytest.approx(1.7, abs=1e-6)

    def test_colors_follow_points(self):
        info = camera_intrinsics(CameraSpec(width=4, height=4, fov_v=math.pi / 2))
        z = np.zeros((4, 4), dtype="<f4")
        z[1, 2] = 1.0
        rgbdata = np.zeros((4, 4, 3), dtype=np.uint8)
        rgbdata[1, 2] = (9, 8, 7)
        cloud = back_project(
            ImageMsg(4, 4, "depth32f", z.tobytes()),
            ImageMsg(4, 4, "rgb8", rgbdata.tobytes()),
            info,
        )
        assert cloud.colors == ((9, 8, 7),)

    def test_encoding_checked(self):
        info = camera_intrinsics(CameraSpec(width=4, height=4))
        with pytest.raises(MessageError):
            back_project(ImageMsg(4, 4, "rgb8", bytes(48)), None, info)

    def test_dimension_mismatch(self):
        info = camera_intrinsics(CameraSpec(width=8, height=8))
        z = np.zeros((4, 4), dtype="<f4")
        with pytest.raises(MessageError):
            back_project(ImageMsg(4, 4, "depth32f", z.tobytes()), None, info)
