"""Differential-drive (unicycle) state and exact-arc integration."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .world import wrap_angle


@dataclass
class RobotState:
    x: float
    y: float
    theta: float
    v: float = 0.0  # last commanded linear velocity (m/s)
    omega: float = 0.0  # last commanded angular velocity (rad/s, +ccw)

    def __post_init__(self):
        self.theta = wrap_angle(self.theta)

    @property
    def pose(self):
        return (self.x, self.y, self.theta)


def step_kinematics(state: RobotState, v: float, omega: float, dt: float) -> RobotState:
    """Advance the pose along the exact circular arc (or line) for dt seconds.

    Closed-form, not an Euler step: two half-steps agree with one full step
    to floating-point precision.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    theta = state.theta
    if omega == 0.0:
        x = state.x + v * dt * math.cos(theta)
        y = state.y + v * dt * math.sin(theta)
        new_theta = theta
    else:
        r = v / omega
        new_theta = theta + omega * dt
        x = state.x + r * (math.sin(new_theta) - math.sin(theta))
        y = state.y - r * (math.cos(new_theta) - math.cos(theta))
    return RobotState(x, y, wrap_angle(new_theta), v, omega)
