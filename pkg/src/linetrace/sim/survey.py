"""Labeled pixel surveys: rendered frames with geometry-derived line labels.

Stands in for the hand-labeling step when learning a color threshold: frames
are rendered at poses along the track under several lighting levels, blurred
like the real pipeline, converted to HSV, and labeled from the ground-truth
distance to the centerline. Pixels in the blur transition band around the
line edge are skipped, like a human annotator avoiding ambiguous pixels.
"""

from __future__ import annotations

import numpy as np

from ..imaging import gaussian_blur, rgb_to_hsv
from ..threshold_learn import LabeledPixelSet
from .camera import CameraModel, render_camera, world_points
from .world import TrackWorld


def survey_pixels(
    world: TrackWorld,
    cam: CameraModel | None = None,
    n_poses: int = 12,
    lightings=(1.0, 0.7, 0.4),
    per_class_per_frame: int = 120,
    edge_margin: float = 0.015,
    seed: int = 0,
    kernel_size: int = 5,
    sigma: float = 1.0,
) -> LabeledPixelSet:
    """Collect a balanced labeled (h, s, v) pixel set from rendered frames."""
    cam = cam or CameraModel()
    rng = np.random.default_rng(seed)
    path = world.path
    gx, gy = cam.native_grid
    half_w = world.line_width / 2.0

    pixels, labels = [], []
    svals = rng.uniform(0.0, path.length, size=n_poses)
    for s in svals:
        p = path.point_at(s)
        pose = (float(p[0]), float(p[1]), path.heading_at(s))
        wx, wy = world_points(pose, gx, gy)
        dist = world.distance_field.sample(wx, wy)
        occluded = np.zeros(dist.shape, dtype=bool)
        for occ in world.occluders:
            occluded |= occ.contains(wx, wy)
        is_line = (dist <= half_w - edge_margin) & ~occluded
        is_bg = (dist >= half_w + edge_margin) | occluded
        for lam in lightings:
            hsv = rgb_to_hsv(gaussian_blur(render_camera(world, pose, cam, lam),
                                           kernel_size, sigma))
            for mask, label in ((is_line, 1), (is_bg, 0)):
                ys, xs = np.nonzero(mask)
                if len(ys) == 0:
                    continue
                take = min(per_class_per_frame, len(ys))
                sel = rng.choice(len(ys), size=take, replace=False)
                pixels.append(hsv[ys[sel], xs[sel]])
                labels.append(np.full(take, label, dtype=np.int64))
    if not pixels:
        raise ValueError("survey produced no pixels; is the track in view?")
    return LabeledPixelSet(np.concatenate(pixels), np.concatenate(labels))


def write_survey_csv(data: LabeledPixelSet, path) -> None:
    """CSV schema: h,s,v,label with label in {line, non-line}."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("h,s,v,label\n")
        for (h, s, v), y in zip(data.pixels, data.labels):
            f.write(f"{float(h)!r},{float(s)!r},{float(v)!r},"
                    f"{'line' if y == 1 else 'non-line'}\n")


def read_survey_csv(path) -> LabeledPixelSet:
    pixels, labels = [], []
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != "h,s,v,label":
            raise ValueError(f"{path}: row 1: expected header 'h,s,v,label'")
        for rownum, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 4:
                raise ValueError(f"{path}: row {rownum}: expected 4 columns, got {len(parts)}")
            try:
                h, s, v = (float(x) for x in parts[:3])
            except ValueError as e:
                raise ValueError(f"{path}: row {rownum}: bad pixel value: {e}") from e
            if parts[3] == "line":
                y = 1
            elif parts[3] == "non-line":
                y = 0
            else:
                raise ValueError(
                    f"{path}: row {rownum}: label must be 'line' or 'non-line', got {parts[3]!r}"
                )
            pixels.append((h, s, v))
            labels.append(y)
    if not pixels:
        raise ValueError(f"{path}: no pixel rows")
    return LabeledPixelSet(np.array(pixels), np.array(labels))
