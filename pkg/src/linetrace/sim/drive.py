"""Frame-by-frame drivers: the pure-pursuit oracle that stands in for the
human operator, and the network driver that closes the loop through the
image pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dataset import normalize_velocity
from ..imaging import INPUT_LEN, preprocess
from .kinematics import RobotState
from .world import TrackWorld, wrap_angle


class OffTrackError(RuntimeError):
    def __init__(self, pose, distance):
        super().__init__(f"robot off track at pose {pose} (distance {distance:.3f} m)")
        self.pose = pose
        self.distance = distance


@dataclass
class OracleParams:
    # lookahead/gain sized so the heading-proportional law keeps the
    # corner-cut offset (~ lookahead^2 * curvature / 2) well inside the line
    lookahead: float = 0.32  # arc distance to the chased point (m)
    k_heading: float = 2.0  # angular command per radian of heading error
    v_scale: float = 0.5  # raw linear command on straights (m/s)
    curvature_slowdown: float = 0.25  # fractional speed cut per unit curvature
    v_floor_frac: float = 0.35  # never slow below this fraction of v_scale
    capture_radius: float = 0.30  # beyond this cross-track distance = off track


@dataclass
class SpeedLimits:
    v_max: float = 0.5  # m/s
    w_max: float = 1.5  # rad/s


class OracleDriver:
    """Pure pursuit with curvature-based speed modulation, normalized output.

    Steers toward the point `lookahead` meters along the track from the
    nearest point; slows in proportion to the curvature there. Positive
    angular output turns counterclockwise.
    """

    needs_frames = False

    def __init__(self, params: OracleParams | None = None):
        self.params = params or OracleParams()

    def decide(self, world: TrackWorld, state: RobotState, frame=None):
        p = self.params
        path = world.path
        s0, dist = path.nearest((state.x, state.y))
        if dist > p.capture_radius:
            raise OffTrackError(state.pose, dist)
        s_look = s0 + p.lookahead
        target = path.point_at(s_look)
        alpha = wrap_angle(math.atan2(target[1] - state.y, target[0] - state.x) - state.theta)
        kappa = path.curvature_at(s_look)
        v_raw = p.v_scale * min(max(1.0 - p.curvature_slowdown * abs(kappa), p.v_floor_frac), 1.0)
        w_raw = p.k_heading * alpha
        return normalize_velocity(v_raw, w_raw)


class ModelDriver:
    """Closes the loop through preprocess -> network -> clamp to [-1, 1]."""

    needs_frames = True

    def __init__(self, net, threshold, kernel_size=5, sigma=1.0):
        in_dim = net.input_shape[-1]
        if in_dim != INPUT_LEN:
            raise ValueError(
                f"model expects input length {in_dim}, pipeline produces {INPUT_LEN}"
            )
        self.net = net
        self.threshold = threshold
        self.kernel_size = kernel_size
        self.sigma = sigma
        self.last_input = None

    def decide(self, world, state, frame):
        vec = preprocess(frame, self.threshold, self.kernel_size, self.sigma)
        self.last_input = vec
        out = self.net.predict(vec.reshape(1, INPUT_LEN)[:, None, :]).reshape(2)
        v = float(np.clip(out[0], -1.0, 1.0))
        w = float(np.clip(out[1], -1.0, 1.0))
        return v, w
