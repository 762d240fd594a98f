"""Track worlds: waypoint splines, occluder rectangles, lighting, and the
precomputed geometry (arclength tables, distance field) the renderer and
driving logic query."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    w = (theta + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if w == -math.pi else w


def _catmull_rom_segment(p0, p1, p2, p3, n):
    """Centripetal Catmull-Rom points on [p1, p2), n samples."""
    alpha = 0.5

    def knot(ti, a, b):
        return ti + max(np.linalg.norm(b - a) ** alpha, 1e-9)

    t0 = 0.0
    t1 = knot(t0, p0, p1)
    t2 = knot(t1, p1, p2)
    t3 = knot(t2, p2, p3)
    t = np.linspace(t1, t2, n, endpoint=False)[:, None]

    def lerp(pa, pb, ta, tb):
        return (tb - t) / (tb - ta) * pa + (t - ta) / (tb - ta) * pb

    a1 = lerp(p0, p1, t0, t1)
    a2 = lerp(p1, p2, t1, t2)
    a3 = lerp(p2, p3, t2, t3)
    b1 = lerp(a1, a2, t0, t2)
    b2 = lerp(a2, a3, t1, t3)
    return lerp(b1, b2, t1, t2)


class TrackPath:
    """Dense polyline form of the waypoint spline with arclength queries."""

    def __init__(self, waypoints, closed, samples_per_meter=150):
        pts = np.asarray(waypoints, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise ValueError("need at least 3 waypoints of shape (n, 2)")
        keep = [0]
        for i in range(1, len(pts)):
            if np.linalg.norm(pts[i] - pts[keep[-1]]) > 1e-9:
                keep.append(i)
        pts = pts[keep]
        if len(pts) < 3:
            raise ValueError("waypoints collapse to fewer than 3 distinct points")
        self.closed = bool(closed)

        n = len(pts)
        chunks = []
        seg_count = n if self.closed else n - 1
        for i in range(seg_count):
            if self.closed:
                p0, p1, p2, p3 = (pts[(i + k - 1) % n] for k in range(4))
            else:
                p0 = pts[max(i - 1, 0)]
                p1, p2 = pts[i], pts[i + 1]
                p3 = pts[min(i + 2, n - 1)]
            chord = np.linalg.norm(p2 - p1)
            m = max(8, int(math.ceil(chord * samples_per_meter)))
            chunks.append(_catmull_rom_segment(p0, p1, p2, p3, m))
        self.points = np.concatenate(chunks)
        if not self.closed:
            self.points = np.concatenate([self.points, pts[-1:]])

        p = self.points
        nxt = np.roll(p, -1, axis=0) if self.closed else p[1:]
        cur = p if self.closed else p[:-1]
        self._seg_vec = nxt - cur
        self._seg_len = np.linalg.norm(self._seg_vec, axis=1)
        self._seg_len = np.maximum(self._seg_len, 1e-12)
        self._cum = np.concatenate([[0.0], np.cumsum(self._seg_len)])
        self.length = float(self._cum[-1])

        # curvature at each sample: heading change per arclength, lightly smoothed
        head = np.arctan2(self._seg_vec[:, 1], self._seg_vec[:, 0])
        dhead = np.diff(head, append=head[:1] if self.closed else head[-1:])
        dhead = np.arctan2(np.sin(dhead), np.cos(dhead))
        ds = 0.5 * (self._seg_len + np.roll(self._seg_len, -1))
        kappa = dhead / ds
        kernel = np.ones(9) / 9.0
        mode = "wrap" if self.closed else "nearest"
        self._kappa = ndimage.correlate1d(kappa, kernel, mode=mode)

    def _wrap_s(self, s):
        if self.closed:
            return s % self.length
        return min(max(s, 0.0), self.length)

    def _locate(self, s):
        s = self._wrap_s(s)
        i = int(np.searchsorted(self._cum, s, side="right") - 1)
        i = min(i, len(self._seg_len) - 1)
        return i, (s - self._cum[i]) / self._seg_len[i]

    def point_at(self, s):
        i, f = self._locate(s)
        base = self.points[i]
        return base + f * self._seg_vec[i]

    def heading_at(self, s):
        i, _ = self._locate(s)
        v = self._seg_vec[i]
        return math.atan2(v[1], v[0])

    def curvature_at(self, s):
        i, _ = self._locate(s)
        return float(self._kappa[i])

    def nearest(self, xy):
        """(arclength, distance) of the closest point on the path to xy."""
        q = np.asarray(xy, dtype=np.float64)
        cur = self.points if self.closed else self.points[:-1]
        rel = q - cur
        t = np.clip(np.einsum("ij,ij->i", rel, self._seg_vec) / (self._seg_len**2), 0.0, 1.0)
        proj = cur + t[:, None] * self._seg_vec
        d2 = np.einsum("ij,ij->i", q - proj, q - proj)
        i = int(np.argmin(d2))
        return float(self._cum[i] + t[i] * self._seg_len[i]), float(math.sqrt(d2[i]))


@dataclass
class Occluder:
    """Axis-aligned world-frame rectangle painted over the scene.

    The default color is a warm low-saturation gray, close to the noisy
    background in hue so learned line thresholds reject it."""

    x: float
    y: float
    w: float
    h: float
    rgb: tuple = (112, 108, 100)

    def contains(self, wx, wy):
        return (wx >= self.x) & (wx < self.x + self.w) & (wy >= self.y) & (wy < self.y + self.h)

    def to_dict(self):
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h, "rgb": list(self.rgb)}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["x"]), float(d["y"]), float(d["w"]), float(d["h"]),
                   tuple(int(c) for c in d.get("rgb", (112, 108, 100))))


class DistanceField:
    """Bilinear-sampled grid of distances to the track centerline."""

    def __init__(self, path: TrackPath, resolution=0.005, margin=1.6):
        self.res = float(resolution)
        lo = self.points_min = path.points.min(axis=0) - margin
        hi = path.points.max(axis=0) + margin
        nx = int(math.ceil((hi[0] - lo[0]) / self.res)) + 1
        ny = int(math.ceil((hi[1] - lo[1]) / self.res)) + 1
        self.origin = lo
        # rasterize the centerline at sub-cell spacing, then distance-transform
        step = self.res * 0.5
        s = np.arange(0.0, path.length, step)
        pts = np.array([path.point_at(v) for v in s])
        occ = np.ones((ny, nx), dtype=bool)
        ix = np.clip(((pts[:, 0] - lo[0]) / self.res).astype(int), 0, nx - 1)
        iy = np.clip(((pts[:, 1] - lo[1]) / self.res).astype(int), 0, ny - 1)
        occ[iy, ix] = False
        self.grid = ndimage.distance_transform_edt(occ) * self.res

    def sample(self, wx, wy):
        gx = np.clip((wx - self.origin[0]) / self.res, 0.0, self.grid.shape[1] - 1.001)
        gy = np.clip((wy - self.origin[1]) / self.res, 0.0, self.grid.shape[0] - 1.001)
        x0 = gx.astype(np.int64)
        y0 = gy.astype(np.int64)
        fx = gx - x0
        fy = gy - y0
        g = self.grid
        return ((g[y0, x0] * (1 - fx) + g[y0, x0 + 1] * fx) * (1 - fy)
                + (g[y0 + 1, x0] * (1 - fx) + g[y0 + 1, x0 + 1] * fx) * fy)


@dataclass
class TrackWorld:
    """Track geometry plus appearance: line color, noisy background, occluders,
    and a global lighting scalar in (0, 1]."""

    name: str
    waypoints: np.ndarray
    closed: bool = True
    line_width: float = 0.05
    color: str = "blue"
    line_rgb: tuple = (40, 90, 200)
    background_rgb: tuple = (120, 100, 80)
    occluders: list = field(default_factory=list)
    lighting: float = 1.0
    seed: int = 7

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=np.float64)
        if len(self.waypoints) < 3:
            raise ValueError("a world needs at least 3 waypoints")
        if self.line_width <= 0:
            raise ValueError("line width must be > 0")
        if not 0.0 < self.lighting <= 1.0:
            raise ValueError(f"lighting must be in (0, 1], got {self.lighting}")
        self._path = None
        self._dfield = None

    @property
    def path(self) -> TrackPath:
        if self._path is None:
            self._path = TrackPath(self.waypoints, self.closed)
        return self._path

    @property
    def distance_field(self) -> DistanceField:
        if self._dfield is None:
            self._dfield = DistanceField(self.path)
        return self._dfield

    def with_occluders(self, occluders):
        return TrackWorld(
            name=self.name, waypoints=self.waypoints.copy(), closed=self.closed,
            line_width=self.line_width, color=self.color, line_rgb=self.line_rgb,
            background_rgb=self.background_rgb, occluders=list(occluders),
            lighting=self.lighting, seed=self.seed,
        )

    def to_dict(self):
        return {
            "name": self.name,
            "waypoints": [[float(x), float(y)] for x, y in self.waypoints],
            "closed": self.closed,
            "line_width": self.line_width,
            "color": self.color,
            "line_rgb": list(self.line_rgb),
            "background_rgb": list(self.background_rgb),
            "occluders": [o.to_dict() for o in self.occluders],
            "lighting": self.lighting,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            name=str(d.get("name", "world")),
            waypoints=np.array(d["waypoints"], dtype=np.float64),
            closed=bool(d.get("closed", True)),
            line_width=float(d.get("line_width", 0.05)),
            color=str(d.get("color", "blue")),
            line_rgb=tuple(int(c) for c in d.get("line_rgb", (40, 90, 200))),
            background_rgb=tuple(int(c) for c in d.get("background_rgb", (120, 100, 80))),
            occluders=[Occluder.from_dict(o) for o in d.get("occluders", [])],
            lighting=float(d.get("lighting", 1.0)),
            seed=int(d.get("seed", 7)),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))
