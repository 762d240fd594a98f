"""Demonstration records: velocity normalization, mirror augmentation,
train/test/val splitting, heatmaps, and CSV interchange.

A record pairs one preprocessed frame (1024 binary pixels) with a
normalized (linear, angular) velocity label. Labels are unit vectors, or
exactly (0, 0) for stationary frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .imaging import GRID, INPUT_LEN

NORM_TOL = 1e-9
CSV_HEADER = ",".join([f"pix_{i}" for i in range(INPUT_LEN)] + ["linear", "angular"])


class CsvParseError(ValueError):
    """Raised on malformed demo CSVs; message carries the file row number."""


def normalize_velocity(linear: float, angular: float) -> tuple[float, float]:
    """Scale (linear, angular) to a unit vector; (0, 0) stays (0, 0)."""
    if not (math.isfinite(linear) and math.isfinite(angular)):
        raise ValueError(f"velocities must be finite, got ({linear}, {angular})")
    norm = math.hypot(linear, angular)
    if norm == 0.0:
        return 0.0, 0.0
    return linear / norm, angular / norm


def _valid_norm(linear, angular):
    n = math.hypot(linear, angular)
    return n == 0.0 or abs(n - 1.0) <= NORM_TOL


@dataclass
class DemoSet:
    """Ordered demonstration records stored columnwise.

    pixels: (n, 1024) uint8 in {0, 1}; velocities: (n, 2) float64 satisfying
    the unit-norm-or-zero invariant. `augmented` guards against applying the
    mirror augmentation twice.
    """

    pixels: np.ndarray
    velocities: np.ndarray
    provenance: str = "file"
    augmented: bool = False

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        self.velocities = np.asarray(self.velocities, dtype=np.float64)
        if self.pixels.ndim != 2 or self.pixels.shape[1] != INPUT_LEN:
            raise ValueError(f"pixels must be (n, {INPUT_LEN}), got {self.pixels.shape}")
        if self.velocities.shape != (self.pixels.shape[0], 2):
            raise ValueError(
                f"velocities must be ({self.pixels.shape[0]}, 2), got {self.velocities.shape}"
            )
        if np.any(self.pixels > 1):
            raise ValueError("pixels must be binary")
        norms = np.hypot(self.velocities[:, 0], self.velocities[:, 1])
        bad = ~((norms == 0.0) | (np.abs(norms - 1.0) <= NORM_TOL))
        if np.any(bad):
            i = int(np.nonzero(bad)[0][0])
            raise ValueError(
                f"record {i}: velocity {tuple(self.velocities[i])} violates the "
                "unit-norm-or-zero invariant"
            )

    def __len__(self) -> int:
        return len(self.pixels)

    def inputs(self) -> np.ndarray:
        """(n, 1024) float64 input matrix for the networks."""
        return self.pixels.astype(np.float64)

    def subset(self, idx, provenance=None) -> "DemoSet":
        return DemoSet(
            self.pixels[idx],
            self.velocities[idx],
            provenance or self.provenance,
            self.augmented,
        )

    @classmethod
    def empty(cls, provenance="file"):
        return cls(np.zeros((0, INPUT_LEN), np.uint8), np.zeros((0, 2)), provenance)

    @classmethod
    def concat(cls, sets, provenance):
        return cls(
            np.concatenate([s.pixels for s in sets]),
            np.concatenate([s.velocities for s in sets]),
            provenance,
        )


@dataclass
class SplitSpec:
    train: float = 0.72
    test: float = 0.20
    val: float = 0.08
    seed: int = 0

    def __post_init__(self):
        if abs(self.train + self.test + self.val - 1.0) > 1e-12:
            raise ValueError("split fractions must sum to 1")


def mirror_augment(demo: DemoSet) -> DemoSet:
    """Originals followed by left-right-mirrored copies with negated angular.

    Mirroring flips each 32x32 row (pixel 32r+c <-> 32r+31-c); linear velocity
    is unchanged. Exactly doubles the set; refuses to run twice.
    """
    if demo.augmented:
        raise ValueError("set is already mirror-augmented; refusing to double-augment")
    flipped = np.flip(demo.pixels.reshape(-1, GRID, GRID), axis=2).reshape(-1, INPUT_LEN)
    vel = demo.velocities.copy()
    vel[:, 1] = -vel[:, 1]
    out = DemoSet(
        np.concatenate([demo.pixels, flipped]),
        np.concatenate([demo.velocities, vel]),
        demo.provenance,
    )
    out.augmented = True
    return out


def split(demo: DemoSet, spec: SplitSpec):
    """Seeded shuffle, then contiguous slices: train and test sizes round up,
    the remainder goes to validation. At n = 122,576 this yields the
    published 24,516-record test slice."""
    n = len(demo)
    if n < 3:
        raise ValueError(f"need at least 3 records to split, got {n}")
    n_train = min(math.ceil(spec.train * n), n)
    n_test = min(math.ceil(spec.test * n), n - n_train)
    order = np.random.default_rng(spec.seed).permutation(n)
    return (
        demo.subset(order[:n_train]),
        demo.subset(order[n_train : n_train + n_test]),
        demo.subset(order[n_train + n_test :]),
    )


def _value_bin(x, bins):
    """Sign-symmetric bin index over [-1, 1]: bin(-x) = bins - 1 - bin(x) for
    all x != 0; with an odd bin count, 0 falls in the self-mirroring center."""
    half = 2.0 / bins
    if x >= 0:
        k = int((1.0 + x) / half)
    else:
        k = bins - 1 - int((1.0 - x) / half)
    return min(max(k, 0), bins - 1)


def heatmap(demo: DemoSet, component: str, bins: int = 51) -> np.ndarray:
    """(bins, bins) count grid: record-index buckets x velocity-value buckets.

    Rows bucket the record index (time), columns the chosen component's value
    over [-1, 1]. Counts sum to len(demo).
    """
    if component not in ("linear", "angular"):
        raise ValueError(f"component must be 'linear' or 'angular', got {component!r}")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    col = demo.velocities[:, 0 if component == "linear" else 1]
    grid = np.zeros((bins, bins), dtype=np.int64)
    n = len(demo)
    for i, x in enumerate(col):
        row = min(i * bins // max(n, 1), bins - 1)
        grid[row, _value_bin(float(x), bins)] += 1
    return grid


def write_csv(demo: DemoSet, path) -> None:
    """Schema: pix_0..pix_1023,linear,angular; pixels as 0/1, velocities as
    shortest round-trip decimal floats; UTF-8, LF line endings."""
    digits = np.char.mod("%d", demo.pixels)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(CSV_HEADER + "\n")
        for i in range(len(demo)):
            f.write(",".join(digits[i]))
            f.write(f",{float(demo.velocities[i, 0])!r},{float(demo.velocities[i, 1])!r}\n")


def read_csv(path) -> DemoSet:
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise CsvParseError(f"{path}: row 1: bad header (expected pix_0..pix_1023,linear,angular)")
        pixels, vels = [], []
        for rownum, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != INPUT_LEN + 2:
                raise CsvParseError(
                    f"{path}: row {rownum}: expected {INPUT_LEN + 2} columns, got {len(parts)}"
                )
            cells = np.array(parts[:INPUT_LEN])
            ones = cells == "1"
            bad = ~(ones | (cells == "0"))
            if np.any(bad):
                i = int(np.nonzero(bad)[0][0])
                raise CsvParseError(
                    f"{path}: row {rownum}: non-binary pixel value {parts[i]!r} in pix_{i}"
                )
            row = ones.astype(np.uint8)
            try:
                lin, ang = float(parts[INPUT_LEN]), float(parts[INPUT_LEN + 1])
            except ValueError as e:
                raise CsvParseError(f"{path}: row {rownum}: bad velocity: {e}") from e
            if not (math.isfinite(lin) and math.isfinite(ang)):
                raise CsvParseError(f"{path}: row {rownum}: non-finite velocity")
            if not _valid_norm(lin, ang):
                raise CsvParseError(
                    f"{path}: row {rownum}: velocity ({lin}, {ang}) violates the "
                    "unit-norm-or-zero invariant"
                )
            pixels.append(row)
            vels.append((lin, ang))
    if pixels:
        return DemoSet(np.stack(pixels), np.array(vels, dtype=np.float64), "file")
    return DemoSet.empty()
