"""Downward-pitched camera model and the synthetic ground renderer.

Pixels are inverse-mapped through the camera's trapezoidal ground footprint
to world points; each point is colored as track line, noisy background, or
occluder, and the whole frame is scaled by the world's lighting value as the
final step (frame(lam) = round(lam * frame(1)) per channel).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..imaging import quantize_u8
from .world import TrackWorld


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera at `mount_height` meters, pitched down by `pitch` radians.

    The ground footprint must sit entirely in front of the robot, which
    requires pitch > vfov/2.
    """

    width: int = 640
    height: int = 480
    fps: float = 6.0
    mount_height: float = 0.25
    pitch: float = 0.47
    hfov: float = 0.90
    vfov: float = 0.45

    def __post_init__(self):
        if self.pitch - self.vfov / 2.0 <= 0.0:
            raise ValueError("camera footprint reaches the horizon: need pitch > vfov/2")
        if self.mount_height <= 0:
            raise ValueError("mount height must be > 0")

    @property
    def frame_period(self) -> float:
        return 1.0 / self.fps

    def footprint_range(self):
        """(near, far) ground distances straight ahead."""
        return (
            self.mount_height / math.tan(self.pitch + self.vfov / 2.0),
            self.mount_height / math.tan(self.pitch - self.vfov / 2.0),
        )

    def ground_grid(self, width=None, height=None):
        """Robot-frame ground hit (X forward, Y left) per pixel center.

        Returns two (height, width) arrays. Cached for the camera's native
        resolution via `native_grid`.
        """
        w = width or self.width
        h = height or self.height
        u = (2.0 * (np.arange(w) + 0.5) / w - 1.0) * math.tan(self.hfov / 2.0)
        v = (1.0 - 2.0 * (np.arange(h) + 0.5) / h) * math.tan(self.vfov / 2.0)
        xi = np.broadcast_to(u[None, :], (h, w))
        eta = np.broadcast_to(v[:, None], (h, w))
        sp, cp = math.sin(self.pitch), math.cos(self.pitch)
        t = self.mount_height / (sp - eta * cp)
        return t * (cp + eta * sp), -t * xi

    @cached_property
    def native_grid(self):
        gx, gy = self.ground_grid()
        gx.setflags(write=False)
        gy.setflags(write=False)
        return gx, gy


def _hash_bits(ix, iy, seed):
    """Deterministic 64-bit lattice hash (splitmix-style finalizer)."""
    with np.errstate(over="ignore"):
        h = (
            ix.astype(np.int64).astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
            ^ iy.astype(np.int64).astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
            ^ np.uint64((seed * 0x165667B19E3779F9) & 0xFFFFFFFFFFFFFFFF)
        )
        h ^= h >> np.uint64(30)
        h *= np.uint64(0xBF58476D1CE4E5B9)
        h ^= h >> np.uint64(27)
        h *= np.uint64(0x94D049BB133111EB)
        h ^= h >> np.uint64(31)
    return h


def _hash01(ix, iy, seed):
    """Deterministic integer-lattice value noise in [0, 1)."""
    return _hash_bits(ix, iy, seed).astype(np.float64) / 2.0**64


def _blotch(wx, wy, seed, cell=0.35):
    """Low-frequency value noise: bilinear blend of a coarse hash lattice."""
    gx, gy = wx / cell, wy / cell
    x0, y0 = np.floor(gx), np.floor(gy)
    fx, fy = gx - x0, gy - y0
    v00 = _hash01(x0, y0, seed)
    v10 = _hash01(x0 + 1, y0, seed)
    v01 = _hash01(x0, y0 + 1, seed)
    v11 = _hash01(x0 + 1, y0 + 1, seed)
    return (v00 * (1 - fx) + v10 * fx) * (1 - fy) + (v01 * (1 - fx) + v11 * fx) * fy


def world_points(pose, gx, gy):
    """Transform robot-frame ground grids to world coordinates at a pose."""
    x, y, theta = pose
    c, s = math.cos(theta), math.sin(theta)
    return x + gx * c - gy * s, y + gx * s + gy * c


def render_camera(world: TrackWorld, pose, cam: CameraModel, lighting=None) -> np.ndarray:
    """Render the 640x480 RGB frame seen from `pose` (x, y, theta).

    Deterministic for fixed (world, pose, seed): background noise is anchored
    to the world-coordinate lattice, so it stays put as the robot moves.
    """
    lam = world.lighting if lighting is None else lighting
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lighting must be in (0, 1], got {lam}")
    gx, gy = cam.native_grid
    wx, wy = world_points(pose, gx, gy)

    fine_ix = np.floor(wx / 0.02)
    fine_iy = np.floor(wy / 0.02)
    fine = _hash01(fine_ix, fine_iy, world.seed)
    blotch = _blotch(wx, wy, world.seed + 1)
    brightness = 0.55 + 0.55 * (0.6 * fine + 0.4 * blotch)

    # three independent per-channel jitters from one hash, 21 bits each
    jbits = _hash_bits(fine_ix, fine_iy, world.seed + 10)
    mask21 = np.uint64((1 << 21) - 1)
    jitter = np.stack(
        [((jbits >> np.uint64(21 * ch)) & mask21).astype(np.float64) for ch in range(3)],
        axis=-1,
    )
    jitter = (jitter / float(1 << 21) - 0.5) * 16.0

    bg = np.asarray(world.background_rgb, dtype=np.float64)
    frame = bg * brightness[..., None] + jitter

    dist = world.distance_field.sample(wx, wy)
    on_line = dist <= world.line_width / 2.0
    line_shade = 0.88 + 0.18 * fine
    line = np.asarray(world.line_rgb, dtype=np.float64)
    frame[on_line] = line * line_shade[on_line][:, None]

    for occ in world.occluders:
        inside = occ.contains(wx, wy)
        frame[inside] = np.asarray(occ.rgb, dtype=np.float64) * (0.92 + 0.1 * fine[inside][:, None])

    full = quantize_u8(frame)
    if lam >= 1.0:
        return full
    return quantize_u8(lam * full.astype(np.float64))
