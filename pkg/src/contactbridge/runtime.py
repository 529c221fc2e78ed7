"""Runtime utilities: trajectory interpolation, MPC stepping control,
simulation clock, and joint-state remapping helpers.

Interpolation is Catmull-Rom per joint channel (local support, so streaming
plans can append knots without disturbing earlier segments) with
finite-difference end tangents; pose channels use slerp for orientation.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from enum import Enum

from .bus import MessageBus, NodeHandle
from .geometry import Pose, quat_slerp, Vec3
from .messages import ClockMsg, Float64ArrayMsg, JointStateMsg


class RuntimeError_(ValueError):
    """Utility-layer error (name avoids shadowing the builtin)."""


# --- trajectory interpolation --------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Timed knots, either joint vectors or poses (uniform per trajectory)."""

    times: tuple[float, ...]
    knots: tuple  # tuple of joint tuples, or tuple of Pose

    def __post_init__(self):
        if len(self.times) < 2:
            raise RuntimeError_("a trajectory needs at least 2 knots")
        if len(self.times) != len(self.knots):
            raise RuntimeError_("times and knots must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise RuntimeError_("knot times must be strictly increasing")
        is_pose = isinstance(self.knots[0], Pose)
        for k in self.knots:
            if isinstance(k, Pose) != is_pose:
                raise RuntimeError_("knot kinds must be uniform")
            if not is_pose and len(k) != len(self.knots[0]):
                raise RuntimeError_("joint knots must have equal dimension")

    @property
    def is_pose(self) -> bool:
        return isinstance(self.knots[0], Pose)


def _segment(times: tuple[float, ...], t: float) -> tuple[int, float]:
    """Segment index i and normalized s in [0, 1] with end clamping."""
    if t <= times[0]:
        return 0, 0.0
    if t >= times[-1]:
        return len(times) - 2, 1.0
    i = 0
    while times[i + 1] < t:
        i += 1
    return i, (t - times[i]) / (times[i + 1] - times[i])


def _catmull_rom(p0, p1, p2, p3, s: float, dt0: float, dt1: float, dt2: float):
    """Non-uniform Catmull-Rom on one channel via Hermite form."""
    # finite-difference tangents scaled to the segment's parameterization
    m1 = tuple((c - a) / (dt0 + dt1) * dt1 for a, c in zip(p0, p2))
    m2 = tuple((c - a) / (dt1 + dt2) * dt1 for a, c in zip(p1, p3))
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return tuple(
        h00 * a + h10 * ta + h01 * b + h11 * tb
        for a, b, ta, tb in zip(p1, p2, m1, m2)
    )


def interp(traj: Trajectory, t: float):
    """Sample the trajectory at time t (clamped to the knot span)."""
    i, s = _segment(traj.times, t)
    times = traj.times
    n = len(times)
    dt1 = times[i + 1] - times[i]
    dt0 = times[i] - times[i - 1] if i > 0 else dt1
    dt2 = times[i + 2] - times[i + 1] if i + 2 < n else dt1

    if traj.is_pose:
        a: Pose = traj.knots[i]
        b: Pose = traj.knots[i + 1]
        # positions via the same spline, orientation via per-segment slerp
        pts = tuple(tuple(k.translation) for k in traj.knots)
        p = _spline_sample(pts, times, i, s, dt0, dt1, dt2)
        return Pose(Vec3(*p), quat_slerp(a.rotation, b.rotation, s))

    return _spline_sample(traj.knots, times, i, s, dt0, dt1, dt2)


def _spline_sample(knots, times, i, s, dt0, dt1, dt2):
    n = len(times)
    p1, p2 = knots[i], knots[i + 1]
    # mirror-extend endpoints so end tangents are one-sided finite differences
    p0 = knots[i - 1] if i > 0 else tuple(2 * a - b for a, b in zip(p1, p2))
    p3 = knots[i + 2] if i + 2 < n else tuple(2 * b - a for a, b in zip(p1, p2))
    return _catmull_rom(p0, p1, p2, p3, s, dt0, dt1, dt2)


def resample(traj: Trajectory, rate_hz: float) -> list[tuple[float, object]]:
    """Samples at 1/rate spacing from first to last knot, endpoints included."""
    if rate_hz <= 0:
        raise RuntimeError_("resample rate must be positive")
    t0, t1 = traj.times[0], traj.times[-1]
    dt = 1.0 / rate_hz
    out = []
    k = 0
    while True:
        t = t0 + k * dt
        if t >= t1 - 1e-12:
            out.append((t1, interp(traj, t1)))
            break
        out.append((t, interp(traj, t)))
        k += 1
    return out


# --- MPC stepping control ------------------------------------------------------

class MpcMode(Enum):
    STOPPED = "stopped"
    RUNNING = "running"


class MpcController:
    """Start/stop/step harness around a user tick callback.

    Services (when attached to a node): rpbi/mpc/start, rpbi/mpc/stop,
    rpbi/mpc/step.  The iteration counter equals completed ticks exactly;
    step while running is an error.
    """

    def __init__(self, tick, rate_hz: float = 10.0):
        self._tick = tick
        self._rate = rate_hz
        self._lock = threading.Lock()
        self._mode = MpcMode.STOPPED
        self._iterations = 0
        self._thread: threading.Thread | None = None
        self._stop_evt = threading.Event()

    @property
    def mode(self) -> MpcMode:
        return self._mode

    @property
    def iterations(self) -> int:
        return self._iterations

    def start(self) -> None:
        with self._lock:
            if self._mode is MpcMode.RUNNING:
                return
            self._mode = MpcMode.RUNNING
            self._stop_evt.clear()
            self._thread = threading.Thread(target=self._run, daemon=True)
            self._thread.start()

    def stop(self) -> None:
        with self._lock:
            if self._mode is not MpcMode.RUNNING:
                return
            self._stop_evt.set()
            thread = self._thread
        if thread is not None:
            thread.join(timeout=5.0)
        with self._lock:
            self._mode = MpcMode.STOPPED
            self._thread = None

    def step(self) -> int:
        """Exactly one tick; returns the new iteration count."""
        with self._lock:
            if self._mode is MpcMode.RUNNING:
                raise RuntimeError_("already running")
            self._tick()
            self._iterations += 1
            return self._iterations

    def _run(self) -> None:
        period = 1.0 / self._rate
        while not self._stop_evt.is_set():
            with self._lock:
                self._tick()
                self._iterations += 1
            self._stop_evt.wait(period)

    def attach_services(self, node: NodeHandle, prefix: str = "rpbi/mpc") -> None:
        node.register_service(f"{prefix}/start", lambda _req: self._svc(self.start))
        node.register_service(f"{prefix}/stop", lambda _req: self._svc(self.stop))
        node.register_service(f"{prefix}/step", lambda _req: self._svc(self.step))

    def _svc(self, fn):
        fn()
        return {"mode": self._mode.value, "iterations": self._iterations}


# --- clock ---------------------------------------------------------------------

class SimClock:
    """Time source for nodes: simulation time from ClockMsg or wall clock."""

    def __init__(self, bus: MessageBus, use_sim_time: bool):
        self.use_sim_time = use_sim_time
        self._sim_time_ns = 0
        self._queue = bus.subscribe("rpbi/clock") if use_sim_time else None

    def now_ns(self) -> int:
        if not self.use_sim_time:
            return time.monotonic_ns()
        while self._queue is not None:
            env = self._queue.get_nowait()
            if env is None:
                break
            if isinstance(env.payload, ClockMsg):
                self._sim_time_ns = env.payload.sim_time_ns
        return self._sim_time_ns


def publish_clock(node: NodeHandle, sim_time_ns: int, topic: str = "rpbi/clock") -> None:
    node.publish(topic, ClockMsg(sim_time_ns), sim_time_ns)


# --- hardware remapping helpers -------------------------------------------------

def remap_joint_state_to_floatarray(js: JointStateMsg, order) -> Float64ArrayMsg:
    """Positions in the requested name order, for array-driven hardware."""
    index = {n: i for i, n in enumerate(js.names)}
    missing = [n for n in order if n not in index]
    if missing:
        raise RuntimeError_(f"joint state is missing names: {', '.join(missing)}")
    return Float64ArrayMsg(tuple(js.positions[index[n]] for n in order))


def remap_joint_state(js: JointStateMsg, name_map: dict[str, str]) -> JointStateMsg:
    """Rename joints through the map (identity for unmapped names)."""
    new_names = tuple(name_map.get(n, n) for n in js.names)
    if len(set(new_names)) != len(new_names):
        dupes = sorted({n for n in new_names if new_names.count(n) > 1})
        raise RuntimeError_(f"name map collides on: {', '.join(dupes)}")
    return JointStateMsg(new_names, js.positions, js.velocities, js.efforts)


# --- real-robot routing ----------------------------------------------------------

@dataclass(frozen=True)
class CommandRouting:
    """Where robot commands go: the simulator or an external driver.

    Switching real_robot changes only the remap table handed to the
    command-producing nodes, never their behavior.
    """

    robot: str
    real_robot: bool = False
    driver_prefix: str = "hw"

    def remap_table(self) -> dict[str, str]:
        if not self.real_robot:
            return {}
        src = f"rpbi/{self.robot}/target_joint_state"
        return {src: f"{self.driver_prefix}/{self.robot}/target_joint_state"}
