"""Operator-signal mapping: axis reorder/scale with deadzone, isometric
cube-to-ball mapping, and a moving window of recent commands."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class TeleopError(ValueError):
    pass


@dataclass(frozen=True)
class MappingConfig:
    axis_order: tuple[int, ...]  # output i reads input axis axis_order[i]
    scale: tuple[float, ...]
    flip: tuple[bool, ...] = ()
    deadzone: float = 0.0
    vmax: float = 1.0
    mode: str = "scale"  # scale | isometric

    def __post_init__(self):
        if not 0.0 <= self.deadzone < 0.5:
            raise TeleopError("deadzone must be in [0, 0.5)")
        if self.vmax <= 0:
            raise TeleopError("vmax must be positive")
        if len(self.scale) != len(self.axis_order):
            raise TeleopError("scale and axis_order must have equal length")
        if self.flip and len(self.flip) != len(self.axis_order):
            raise TeleopError("flip must match axis_order length")
        if len(set(self.axis_order)) != len(self.axis_order) or any(i < 0 for i in self.axis_order):
            raise TeleopError("axis_order must be a permutation of input indices")
        if self.mode not in ("scale", "isometric"):
            raise TeleopError(f"unknown mapping mode {self.mode!r}")


def clamp_axes(u) -> tuple[float, ...]:
    return tuple(min(max(float(x), -1.0), 1.0) for x in u)


def apply_deadzone(x: float, dz: float) -> float:
    """Deadzone with renormalization: continuous, d(+-1) = +-1."""
    if abs(x) < dz:
        return 0.0
    return math.copysign((abs(x) - dz) / (1.0 - dz), x)


def _reordered(u: tuple[float, ...], cfg: MappingConfig) -> list[float]:
    out = []
    flips = cfg.flip or (False,) * len(cfg.axis_order)
    for idx, flipped in zip(cfg.axis_order, flips):
        if idx >= len(u):
            raise TeleopError(f"axis index {idx} out of range for {len(u)} inputs")
        out.append(-u[idx] if flipped else u[idx])
    return out


def scale_map(u, cfg: MappingConfig) -> tuple[float, ...]:
    """Per-axis: reorder, deadzone-renormalize, then scale."""
    u = clamp_axes(u)
    picked = _reordered(u, cfg)
    return tuple(s * apply_deadzone(x, cfg.deadzone) for s, x in zip(cfg.scale, picked))


def isometric_map(u, vmax: float, deadzone: float = 0.0) -> tuple[float, ...]:
    """Cube-to-ball mapping: the maximum command magnitude is vmax in every
    direction (||out||_2 = vmax whenever ||d||_inf = 1), direction preserved."""
    u = clamp_axes(u)
    d = [apply_deadzone(x, deadzone) for x in u]
    linf = max(abs(x) for x in d) if d else 0.0
    if linf == 0.0:
        return tuple(0.0 for _ in d)
    l2 = math.sqrt(sum(x * x for x in d))
    factor = vmax * linf / l2
    return tuple(factor * x for x in d)


def map_command(u, cfg: MappingConfig) -> tuple[float, ...]:
    if cfg.mode == "isometric":
        picked = _reordered(clamp_axes(u), cfg)
        return isometric_map(picked, cfg.vmax, cfg.deadzone)
    return scale_map(u, cfg)


@dataclass
class SignalWindow:
    """Ring of the most recent (stamp, command) samples, single writer."""

    capacity: int
    _items: list[tuple[int, tuple[float, ...]]] = field(default_factory=list)
    clipped: bool = False

    def __post_init__(self):
        if self.capacity <= 0:
            raise TeleopError("window capacity must be positive")

    def push(self, stamp_ns: int, cmd) -> None:
        self._items.append((stamp_ns, tuple(cmd)))
        if len(self._items) > self.capacity:
            del self._items[0 : len(self._items) - self.capacity]

    def get(self, n: int) -> list[tuple[int, tuple[float, ...]]]:
        """Last n samples, oldest first; clips to what is available."""
        if n > self.capacity:
            self.clipped = True
            n = self.capacity
        if n <= 0:
            return []
        self.clipped = self.clipped or n > len(self._items)
        return list(self._items[-n:])

    def __len__(self) -> int:
        return len(self._items)
