"""Application server: loads a scene, owns the stepping loop, exposes the
bus services and transports, and ships the runnable demo scenarios.

CLI: ``contact-bridge run PROFILE.yaml [--headless] [--real-robot]`` and
``contact-bridge demo {interaction,pushing,mpc-step} [--headless]``.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import signal
import sys
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .bus import BusError, MessageBus, NodeHandle, SubscriptionQueue
from .geometry import Pose, quat_from_axis_angle, Vec3
from .kinematics import end_effector_link, ik_solve, IkParams, jacobian
from .messages import (
    ClockMsg,
    Float64ArrayMsg,
    JointStateMsg,
    TransformMsg,
    WrenchMsg,
)
from .robots import RobotInstance
from .runtime import MpcController
from .safety import SafetyGuard, SafetyLimits
from .sceneconfig import ConfigError, ObjectSpec, parse_scene_config, SceneConfig, WORLD_FRAME
from .sceneconfig import _parse_object  # shared validation for the add_object service
from .sensors import back_project, camera_intrinsics, ft_read, render_rgbd
from .teleop import isometric_map
from .urdf import parse_urdf
from .wire import _pose_from_json, _pose_to_json
from .world import Body, SimWorld

log = logging.getLogger("contactbridge")

EXIT_OK = 0
EXIT_FAILURE = 1  # demo assertion failed or startup error
EXIT_USAGE = 2

TELEOP_VMAX = 0.2  # m/s end-effector speed at full operator deflection
TELEOP_DAMPING = 0.05  # DLS damping for the per-step velocity solve


class AppError(RuntimeError):
    pass


@dataclass(frozen=True)
class LaunchProfile:
    scene_path: Path
    real_robot: bool = False
    tcp_port: int = 9870
    ws_port: int = 9871
    enable_tcp: bool = True
    enable_gateway: bool = True
    realtime: bool = True
    remaps: dict | None = None

    def __post_init__(self):
        if self.tcp_port == self.ws_port:
            raise AppError(f"tcp_port and ws_port must differ (both {self.tcp_port})")


def parse_launch_profile(path: str | Path) -> LaunchProfile:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as err:
        raise AppError(f"cannot read profile {path}: {err}") from err
    except yaml.YAMLError as err:
        raise AppError(f"profile {path}: invalid YAML: {err}") from err
    if not isinstance(doc, dict) or "scene" not in doc:
        raise AppError(f"profile {path}: expected a mapping with a 'scene' key")
    allowed = {"scene", "real_robot", "tcp_port", "ws_port", "enable_tcp",
               "enable_gateway", "realtime", "remaps"}
    unknown = set(doc) - allowed
    if unknown:
        raise AppError(f"profile {path}: unknown key(s) {sorted(unknown)}")
    scene_path = (path.parent / doc["scene"]).resolve()
    if not scene_path.exists():
        raise AppError(f"profile {path}: scene file not found: {scene_path}")
    return LaunchProfile(
        scene_path=scene_path,
        real_robot=bool(doc.get("real_robot", False)),
        tcp_port=int(doc.get("tcp_port", 9870)),
        ws_port=int(doc.get("ws_port", 9871)),
        enable_tcp=bool(doc.get("enable_tcp", True)),
        enable_gateway=bool(doc.get("enable_gateway", True)),
        realtime=bool(doc.get("realtime", True)),
        remaps=doc.get("remaps"),
    )


class _RobotNode:
    """Bus-facing state for one robot: services, targets, guard, sensors."""

    def __init__(self, app: "App", instance: RobotInstance, dt: float):
        self.app = app
        self.instance = instance
        spec = instance.spec
        self.guard = SafetyGuard(
            SafetyLimits.from_model(instance.model, dt_ref=app.guard_dt_ref),
            instance.model,
            base_pose=spec.base_pose,
        )
        node = app.node
        prefix = f"rpbi/{spec.name}"
        self.target_queue: SubscriptionQueue = node.subscribe(f"{prefix}/target_joint_state")
        self.axes_queue: SubscriptionQueue = node.subscribe(f"{prefix}/operator_axes")
        self._axes: tuple[float, ...] | None = None
        self._teleop_anchor: Vec3 | None = None
        self._eef = end_effector_link(instance.model)
        self.state_topic = node.advertise(f"{prefix}/joint_state")
        self.commanded_topic = node.advertise(f"{prefix}/commanded_joint_state")
        self.report_topic = node.advertise(f"{prefix}/safety_report")
        self.ft_periods: dict[str, int] = {
            s.joint: max(1, round(1.0 / (s.rate_hz * dt))) for s in spec.ft_sensors
        }
        for joint in self.ft_periods:
            node.advertise(f"{prefix}/ft/{joint}")
        node.register_service(f"{prefix}/robot_info", self._svc_info)
        node.register_service(f"{prefix}/ik", self._svc_ik)
        node.register_service(f"{prefix}/move_to_joint_state", self._svc_move_joint)
        node.register_service(f"{prefix}/move_to_eef_state", self._svc_move_eef)

    def _svc_info(self, _req) -> dict:
        model = self.instance.model
        joints = model.actuated_joints()
        return {
            "name": self.instance.name,
            "ndof": len(joints),
            "joints": [j.name for j in joints],
            "links": [l.name for l in model.links],
            "lower": [j.lower for j in joints],
            "upper": [j.upper for j in joints],
            "velocity": [j.velocity for j in joints],
            "visual": self.instance.spec.is_visual_robot,
        }

    def _svc_ik(self, req: dict) -> dict:
        target = _pose_from_json(req["target"])
        q0 = req.get("q0", list(self.instance.q))
        solver = req.get("solver", "dls")
        result = ik_solve(solver, self.instance.model, target, q0,
                          base_pose=self.instance.spec.base_pose)
        return {"q": list(result.q), "converged": result.converged,
                "iterations": result.iterations,
                "pos_err": result.pos_err, "ori_err": result.ori_err}

    def _svc_move_joint(self, req: dict) -> dict:
        return self.apply_target(tuple(float(v) for v in req["positions"]))

    def _svc_move_eef(self, req: dict) -> dict:
        result = self._svc_ik(req)
        if not result["converged"]:
            raise AppError(
                f"IK did not converge (pos_err {result['pos_err']:.2e}, "
                f"ori_err {result['ori_err']:.2e})"
            )
        return self.apply_target(tuple(result["q"]))

    def apply_target(self, q_target: tuple[float, ...]) -> dict:
        """Route a joint target through the safety guard to the drive."""
        inst = self.instance
        if inst.spec.is_visual_robot:
            inst.set_target(q_target)  # displayed only; no contacts exist
            return {"accepted": True, "violations": []}
        cmd, report = self.guard.forward(q_target, tuple(inst.q))
        stamp = self.app.world.sim_time_ns
        self.app.node.publish(
            self.report_topic,
            Float64ArrayMsg((1.0 if report.passed else 0.0, float(len(report.violations)))),
            stamp,
        )
        if cmd is not None:
            inst.set_target(cmd)
            self.app.node.publish(
                self.commanded_topic,
                JointStateMsg(tuple(inst.joint_names()), tuple(cmd),
                              (0.0,) * inst.ndof, (0.0,) * inst.ndof),
                stamp,
            )
        return {
            "accepted": report.passed,
            "violations": [f"{v.kind}:{v.subject}" for v in report.violations],
        }

    def drain_axes(self, dt: float) -> None:
        """Operator axes (x, y, z in [-1, 1]) drive the end effector.

        The held axes map to a workspace velocity; the target position is
        integrated from an anchor so the arm does not drift while idle, and
        one damped least-squares step converts it to a joint target that
        still passes through the safety guard.
        """
        env = self.axes_queue.latest()
        if env is not None:
            payload = env.payload
            if isinstance(payload, Float64ArrayMsg) and len(payload.data) == 3:
                self._axes = payload.data
            else:
                log.warning("operator axes for %s must be 3 floats", self.instance.name)
        if self._axes is None:
            return
        v = isometric_map(self._axes, TELEOP_VMAX)
        if not any(v):
            self._teleop_anchor = None  # re-anchor at the next deflection
            return
        inst = self.instance
        eef = inst.link_poses()[self._eef].translation
        if self._teleop_anchor is None:
            self._teleop_anchor = eef
        anchor = Vec3(self._teleop_anchor.x + v[0] * dt,
                      self._teleop_anchor.y + v[1] * dt,
                      self._teleop_anchor.z + v[2] * dt)
        self._teleop_anchor = anchor
        err = np.array([anchor.x - eef.x, anchor.y - eef.y, anchor.z - eef.z])
        J = jacobian(inst.model, inst.q, self._eef, base_pose=inst.spec.base_pose)[:3]
        dq = J.T @ np.linalg.solve(J @ J.T + (TELEOP_DAMPING ** 2) * np.eye(3), err)
        self.apply_target(tuple(q + d for q, d in zip(inst.q, dq)))

    def drain_targets(self) -> None:
        env = self.target_queue.latest()
        if env is None:
            return
        payload = env.payload
        inst = self.instance
        if isinstance(payload, JointStateMsg):
            index = {n: i for i, n in enumerate(payload.names)}
            try:
                target = tuple(payload.positions[index[n]] for n in inst.joint_names())
            except KeyError as missing:
                log.warning("target for %s missing joint %s", inst.name, missing)
                return
        elif isinstance(payload, Float64ArrayMsg):
            if len(payload.data) != inst.ndof:
                log.warning("target for %s has wrong dimension", inst.name)
                return
            target = payload.data
        else:
            log.warning("unsupported target payload %s", type(payload).__name__)
            return
        self.apply_target(target)


class App:
    """One process hosting the world, all robot/sensor nodes, and services."""

    def __init__(self, config: SceneConfig, bus: MessageBus | None = None,
                 scene_dir: str | Path = ".", remaps: dict | None = None,
                 guard_dt_ref: float = 0.1):
        self.config = config
        self.bus = bus if bus is not None else MessageBus()
        self.guard_dt_ref = guard_dt_ref
        self.node = NodeHandle(self.bus, "sim", remaps)
        self.world = SimWorld(config.gravity, config.timestep_s)
        scene_dir = Path(scene_dir)

        self.robots: dict[str, _RobotNode] = {}
        self.visuals: dict[str, ObjectSpec] = {}
        self.visual_poses: dict[str, Pose] = {}
        self._visual_queues: dict[str, SubscriptionQueue] = {}
        self._pending: list = []
        self._rejected_pose_updates = 0

        self.node.advertise("rpbi/clock")
        self.node.advertise("rpbi/diagnostics/rejected_pose_updates")

        for spec in config.robots:
            urdf_path = (scene_dir / spec.urdf_path).resolve()
            if not urdf_path.exists():
                raise AppError(f"robot {spec.name!r}: URDF not found: {urdf_path}")
            model = parse_urdf(urdf_path.read_text())
            instance = RobotInstance(spec, model, self.world)
            self.robots[spec.name] = _RobotNode(self, instance, self.world.dt)

        for spec in config.collision_objects + config.dynamic_objects:
            self._add_object_body(spec)
        for spec in config.visual_objects:
            self._add_visual(spec)

        # articulated bodies loaded without services: colliders only
        self._loose: list[RobotInstance] = []
        for i, load in enumerate(config.urdfs):
            upath = (scene_dir / load.path).resolve()
            if not upath.exists():
                raise AppError(f"urdfs[{i}]: file not found: {upath}")
            model = parse_urdf(upath.read_text())
            from .sceneconfig import RobotSpec

            spec = RobotSpec(name=f"urdf/{upath.stem}/{i}", urdf_path=str(upath),
                             base_pose=load.base_pose, initial_q=load.initial_q)
            self._loose.append(RobotInstance(spec, model, self.world))

        self.camera = config.camera
        self._camera_period = 0
        if self.camera is not None:
            self._camera_period = max(1, round(1.0 / (self.camera.rate_hz * self.world.dt)))
            for topic in ("rpbi/camera/color", "rpbi/camera/depth", "rpbi/camera/camera_info",
                          "rpbi/camera/points"):
                self.node.advertise(topic)

        self.node.register_service("rpbi/add_object", self._svc_add_object)
        self.node.register_service("rpbi/remove_object", self._svc_remove_object)
        self.node.register_service("rpbi/robot_info", self._svc_robot_info)

    # --- world composition ------------------------------------------------------

    def _add_object_body(self, spec: ObjectSpec) -> None:
        self.world.add_body(Body(
            spec.name,
            spec.shape,
            spec.pose,
            mass=spec.mass,
            material=spec.material,
            kinematic=(spec.kind == "collision"),
            lin_vel=spec.initial_twist.linear,
            ang_vel=spec.initial_twist.angular,
            color=spec.color,
        ))

    def _add_visual(self, spec: ObjectSpec) -> None:
        if spec.name in self.visuals or spec.name in self.world.bodies:
            raise AppError(f"duplicate object name {spec.name!r}")
        self.visuals[spec.name] = spec
        self.visual_poses[spec.name] = spec.pose
        if spec.pose_topic:
            self._visual_queues[spec.name] = self.node.subscribe(spec.pose_topic)

    def _remove_visual(self, name: str) -> None:
        self.visuals.pop(name)
        self.visual_poses.pop(name)
        q = self._visual_queues.pop(name, None)
        if q is not None:
            self.bus.unsubscribe(q)

    # --- services ----------------------------------------------------------------

    def _svc_add_object(self, req: dict) -> dict:
        kind = req.get("kind")
        if kind not in ("visual", "collision", "dynamic"):
            raise AppError(f"unknown object kind {kind!r}")
        spec = _parse_object(req.get("spec"), "add_object.spec", kind)
        if spec.name in self.visuals or spec.name in self.world.bodies:
            raise AppError(f"object name {spec.name!r} already in use")
        done = threading.Event()
        # mutate between steps only: the stepping owner applies queued ops
        if kind == "visual":
            self._pending.append((lambda: self._add_visual(spec), done))
        else:
            self._pending.append((lambda: self._add_object_body(spec), done))
        return {"queued": True, "name": spec.name}

    def _svc_remove_object(self, req: dict) -> dict:
        name = req.get("name")
        if name in self.visuals:
            self._pending.append((lambda: self._remove_visual(name), threading.Event()))
        elif name in self.world.bodies:
            self._pending.append((lambda: self.world.remove_body(name), threading.Event()))
        else:
            raise AppError(f"no object named {name!r}")
        return {"queued": True, "name": name}

    def _svc_robot_info(self, req: dict) -> dict:
        name = req.get("name")
        if name not in self.robots:
            raise AppError(f"no robot named {name!r}")
        return self.robots[name]._svc_info({})

    # --- stepping ------------------------------------------------------------------

    def step(self) -> None:
        pending, self._pending = self._pending, []
        for fn, done in pending:
            try:
                fn()
            except Exception as err:  # keep stepping; surface via log
                log.error("queued world op failed: %s", err)
            done.set()

        self._drain_visual_updates()
        for robot in self.robots.values():
            robot.drain_axes(self.world.dt)
            robot.drain_targets()
            robot.instance.drive(self.world.dt)
        report = self.world.step()
        stamp = report.sim_time_ns

        if self.config.use_sim_time:
            self.node.publish("rpbi/clock", ClockMsg(stamp), stamp)

        for name, body in self.world.bodies.items():
            if body.group is not None:
                continue  # robot colliders publish through link transforms
            self.node.advertise(f"rpbi/{name}/pose")
            self.node.publish(f"rpbi/{name}/pose",
                              TransformMsg(WORLD_FRAME, name, body.pose), stamp)
        for name, pose in self.visual_poses.items():
            self.node.advertise(f"rpbi/{name}/pose")
            self.node.publish(f"rpbi/{name}/pose",
                              TransformMsg(WORLD_FRAME, name, pose), stamp)

        for robot in self.robots.values():
            inst = robot.instance
            self.node.publish(
                robot.state_topic,
                JointStateMsg(tuple(inst.joint_names()), tuple(inst.q),
                              (0.0,) * inst.ndof, (0.0,) * inst.ndof),
                stamp,
            )
            for link_name, pose in inst.link_poses().items():
                topic = f"rpbi/{inst.name}/{link_name}/pose"
                self.node.advertise(topic)
                self.node.publish(topic, TransformMsg(WORLD_FRAME, link_name, pose), stamp)
            for joint, period in robot.ft_periods.items():
                if report.step_count % period == 0:
                    wrench = ft_read(inst, self.world, joint, report)
                    self.node.publish(f"rpbi/{inst.name}/ft/{joint}",
                                      WrenchMsg(joint, wrench), stamp)

        if self._camera_period and report.step_count % self._camera_period == 0:
            self.publish_camera(stamp)

    def _drain_visual_updates(self) -> None:
        for name, queue in self._visual_queues.items():
            env = queue.latest()
            if env is None:
                continue
            if isinstance(env.payload, TransformMsg):
                self.visual_poses[name] = env.payload.pose
            else:
                self._rejected_pose_updates += 1
                self.node.publish("rpbi/diagnostics/rejected_pose_updates",
                                  Float64ArrayMsg((float(self._rejected_pose_updates),)),
                                  self.world.sim_time_ns)

    def renderables(self) -> list:
        out = []
        for body in self.world.bodies.values():
            out.append((body.shape, body.pose, body.color))
        for name, spec in self.visuals.items():
            out.append((spec.shape, self.visual_poses[name], spec.color))
        for robot in self.robots.values():
            inst = robot.instance
            if not inst.spec.is_visual_robot:
                continue
            poses = inst.link_poses()
            for link in inst.model.links:
                for col in link.collisions:
                    from .geometry import pose_compose

                    out.append((col.shape, pose_compose(poses[link.name], col.local_pose),
                                (150, 150, 220)))
        return out

    def publish_camera(self, stamp: int) -> None:
        rgb, depth = render_rgbd(self.renderables(), self.camera)
        info = camera_intrinsics(self.camera)
        self.node.publish("rpbi/camera/color", rgb, stamp)
        self.node.publish("rpbi/camera/depth", depth, stamp)
        self.node.publish("rpbi/camera/camera_info", info, stamp)
        if self.camera.emit_pointcloud:
            self.node.publish("rpbi/camera/points", back_project(depth, rgb, info), stamp)

    def run_steps(self, n: int) -> None:
        for _ in range(n):
            self.step()

    def shutdown(self) -> None:
        self.node.close()


# --- launch ---------------------------------------------------------------------

class AppHandle:
    """Running system: app + transports + optional realtime stepping thread."""

    def __init__(self, app: App, profile: LaunchProfile):
        self.app = app
        self.profile = profile
        self.tcp_server = None
        self.gateway_server = None
        self._stepper: threading.Thread | None = None
        self._stop = threading.Event()
        # controller iterations are a pluggable hook; the served default only
        # counts, so console buttons have an observable effect without racing
        # the stepping thread
        self.mpc = MpcController(lambda: None)
        self.mpc.attach_services(app.node)

    def start_transports(self) -> None:
        if self.profile.enable_tcp:
            from .tcp import TcpServer

            self.tcp_server = TcpServer(self.app.bus, port=self.profile.tcp_port)
            try:
                self.tcp_server.start()
            except OSError as err:
                raise AppError(f"TCP transport failed on port {self.profile.tcp_port}: {err}")
        if self.profile.enable_gateway:
            from .gateway import GatewayServer

            self.gateway_server = GatewayServer(self.app.bus, port=self.profile.ws_port)
            try:
                self.gateway_server.start()
            except OSError as err:
                self._stop_transports()
                raise AppError(f"gateway failed on port {self.profile.ws_port}: {err}")

    def start_stepping(self) -> None:
        self._stop.clear()
        self._stepper = threading.Thread(target=self._loop, daemon=True)
        self._stepper.start()

    def _loop(self) -> None:
        dt = self.app.world.dt
        next_t = time.monotonic()
        while not self._stop.is_set():
            self.app.step()
            next_t += dt
            delay = next_t - time.monotonic()
            if delay > 0:
                self._stop.wait(delay)
            else:
                next_t = time.monotonic()  # fell behind; do not spiral

    def _stop_transports(self) -> None:
        if self.gateway_server is not None:
            self.gateway_server.stop()
            self.gateway_server = None
        if self.tcp_server is not None:
            self.tcp_server.stop()
            self.tcp_server = None

    def shutdown(self) -> None:
        self.mpc.stop()
        self._stop.set()
        if self._stepper is not None:
            self._stepper.join(timeout=5.0)
            self._stepper = None
        self._stop_transports()
        self.app.shutdown()
        self.app.bus.shutdown()


def build_app(profile: LaunchProfile, bus: MessageBus | None = None) -> App:
    try:
        config = parse_scene_config(profile.scene_path.read_text())
    except ConfigError as err:
        raise AppError(f"scene {profile.scene_path}: {err}") from err

    remaps = None
    if profile.real_robot:
        # sim-as-real switch: command topics route to external-driver names
        remaps = {}
        for robot in config.robots:
            remaps[f"rpbi/{robot.name}/commanded_joint_state"] = \
                f"hw/{robot.name}/commanded_joint_state"
    if profile.remaps:
        remaps = {**(remaps or {}), **profile.remaps}
    return App(config, bus=bus, scene_dir=profile.scene_path.parent, remaps=remaps)


def launch(profile: LaunchProfile, headless: bool = False,
           transports: bool = True) -> AppHandle:
    app = build_app(profile)
    handle = AppHandle(app, profile)
    try:
        if transports:
            handle.start_transports()
        if profile.realtime:
            handle.start_stepping()
    except Exception:
        handle.shutdown()
        raise
    return handle


# --- demos -----------------------------------------------------------------------

def _data_path(*parts: str) -> Path:
    return Path(str(resources.files("contactbridge").joinpath("data", *parts)))


def _headless_app(scene: str) -> App:
    profile = LaunchProfile(scene_path=_data_path("scenes", scene), realtime=False,
                            enable_tcp=False, enable_gateway=False)
    return build_app(profile)


def _point_down():
    # tool z-axis toward the floor
    return quat_from_axis_angle(Vec3(0.0, 1.0, 0.0), math.pi)


def _point_forward():
    # tool z-axis along world +x (pushing direction)
    return quat_from_axis_angle(Vec3(0.0, 1.0, 0.0), math.pi / 2.0)


_DEMO_IK = IkParams(damping=0.05, max_iters=500, step_clamp=0.3)


def _command_eef(app: App, robot: str, target: Pose, steps: int) -> None:
    """One control move: IK to the target, then guard-sized joint increments."""
    rnode = app.robots[robot]
    result = ik_solve("dls", rnode.instance.model, target, list(rnode.instance.q),
                      params=_DEMO_IK, base_pose=rnode.instance.spec.base_pose)
    _ramp_joints(app, robot, result.q, steps)


def _ramp_joints(app: App, robot: str, q_goal, steps: int) -> None:
    """Walk the target toward q_goal in increments the guard will accept."""
    rnode = app.robots[robot]
    max_delta = 0.8 * min(rnode.guard.limits.velocity_max) * app.guard_dt_ref
    remaining = steps
    for _ in range(500):
        q = list(rnode.instance.q)
        deltas = [g - c for g, c in zip(q_goal, q)]
        worst = max(abs(d) for d in deltas)
        if worst <= 1e-9 and remaining <= 0:
            break
        scale = 1.0 if worst <= max_delta else max_delta / worst
        rnode.apply_target(tuple(c + d * scale for c, d in zip(q, deltas)))
        app.run_steps(CONTROL_STEPS)
        remaining -= CONTROL_STEPS
        if worst <= 1e-9:
            app.run_steps(max(remaining, 0))
            break


TOOL_OFFSET = 0.08  # ee_link frame to tool-sphere center, along tool z
CONTROL_STEPS = 24  # physics steps per command tick (0.1 s at 240 Hz)


def demo_interaction(record_path: str | None = None) -> dict:
    """Press the tool onto a heavy box; the wrist F/T stream shows contact."""
    app = _headless_app("interaction.yaml")
    ft_queue = app.bus.subscribe("rpbi/arm/ft/joint6", depth=100000)
    recorder = None
    if record_path:
        from .recording import Recorder

        recorder = Recorder(app.bus, ["rpbi/arm/ft/joint6"], record_path)
    down = _point_down()

    def tool_target(x: float, y: float, z_tool: float) -> Pose:
        return Pose(Vec3(x, y, z_tool + TOOL_OFFSET), down)

    # approach above the pad, hold, then press into its top face
    for z in (0.40, 0.30, 0.22, 0.17):
        _command_eef(app, "arm", tool_target(0.45, 0.0, z), CONTROL_STEPS * 5)
    free = [e.payload.wrench for e in ft_queue.drain()]
    settle = free[-CONTROL_STEPS:]
    bias_fz = sum(w.force.z for w in settle) / len(settle)
    for z in (0.140, 0.134):
        _command_eef(app, "arm", tool_target(0.45, 0.0, z), CONTROL_STEPS * 5)
    contact = [e.payload.wrench for e in ft_queue.drain()]
    peak = max(abs(w.force.z - bias_fz) for w in contact[-CONTROL_STEPS * 5:])
    pre = max(abs(w.force.z - bias_fz) for w in settle)
    if recorder:
        recorder.stop()
    app.shutdown()
    return {"pre_contact_fz": pre, "contact_fz": peak,
            "ok": pre < 0.5 and peak > 5.0}


PUSH_END_X = 0.545  # final tool-sphere center x during the push


def demo_pushing() -> dict:
    """Scripted operator commands push box_push to a goal on the plane."""
    app = _headless_app("pushing.yaml")
    goal = Vec3(0.63, 0.0, 0.05)
    forward = _point_forward()

    def tool_target(x: float, z: float) -> Pose:
        # tool z along +x, so the sphere center leads the frame by the offset
        return Pose(Vec3(x - TOOL_OFFSET, 0.0, z), forward)

    # approach behind the box at mid-face height, then advance through it
    approach = [(0.36, 0.20), (0.35, 0.06)]
    for x, z in approach:
        _command_eef(app, "arm", tool_target(x, z), CONTROL_STEPS * 5)
    # push: slow advance so the box is quasi-statically shoved, then retreat
    x = 0.35
    push_end = PUSH_END_X  # tuned once against the frozen scene; goal x 0.63
    while x < push_end:
        x = min(x + 0.01, push_end)
        _command_eef(app, "arm", tool_target(x, 0.06), CONTROL_STEPS)
    _command_eef(app, "arm", tool_target(x - 0.05, 0.12), CONTROL_STEPS * 2)
    app.run_steps(CONTROL_STEPS * 5)  # let the box settle

    box = app.world.bodies["box_push"].pose.translation
    err = math.hypot(box.x - goal.x, box.y - goal.y)
    app.shutdown()
    return {"box": (box.x, box.y, box.z), "goal": (goal.x, goal.y),
            "error_m": err, "ok": err <= 0.02}


def demo_mpc_step(steps: int = 3) -> dict:
    """MPC stepping harness: each service step call advances one iteration."""
    app = _headless_app("pushing.yaml")
    controller = MpcController(lambda: app.run_steps(CONTROL_STEPS))
    controller.attach_services(app.node)
    for _ in range(steps):
        app.node.call("rpbi/mpc/step", {})
    count = controller.iterations
    app.shutdown()
    return {"iterations": count, "ok": count == steps}


DEMOS = {
    "interaction": demo_interaction,
    "pushing": demo_pushing,
    "mpc-step": demo_mpc_step,
}


# --- CLI -------------------------------------------------------------------------

def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("CONTACT_BRIDGE_LOG_LEVEL", "INFO"))
    parser = argparse.ArgumentParser(prog="contact-bridge",
                                     description="Contact-simulation app server")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run a launch profile")
    p_run.add_argument("profile")
    p_run.add_argument("--headless", action="store_true",
                       help="no transports; step as fast as possible")
    p_run.add_argument("--real-robot", action="store_true",
                       help="route commands to external-driver topics")
    p_run.add_argument("--duration", type=float, default=None,
                       help="exit after this many seconds (default: run until signal)")

    p_demo = sub.add_parser("demo", help="run a scripted demo scenario")
    p_demo.add_argument("name", choices=sorted(DEMOS))
    p_demo.add_argument("--headless", action="store_true")

    args = parser.parse_args(argv)

    if args.cmd == "demo":
        result = DEMOS[args.name]()
        for key, value in result.items():
            print(f"{key}: {value}")
        return EXIT_OK if result.get("ok", True) else EXIT_FAILURE

    try:
        profile = parse_launch_profile(args.profile)
        if args.real_robot:
            profile = LaunchProfile(
                scene_path=profile.scene_path, real_robot=True,
                tcp_port=profile.tcp_port, ws_port=profile.ws_port,
                enable_tcp=profile.enable_tcp, enable_gateway=profile.enable_gateway,
                realtime=profile.realtime, remaps=profile.remaps,
            )
        handle = launch(profile, headless=args.headless, transports=not args.headless)
    except AppError as err:
        print(f"contact-bridge: {err}", file=sys.stderr)
        return EXIT_FAILURE

    stop = threading.Event()

    def on_signal(_sig, _frame):
        stop.set()

    signal.signal(signal.SIGINT, on_signal)
    signal.signal(signal.SIGTERM, on_signal)
    log.info("running; scene %s", profile.scene_path.name)
    try:
        if args.duration is not None:
            stop.wait(args.duration)
        else:
            stop.wait()
    finally:
        handle.shutdown()
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
