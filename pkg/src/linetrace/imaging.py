"""Frame preprocessing: blur, HSV conversion, color thresholding, 32x32 binarization.

Image conventions used throughout the package:

- RGB image: uint8 array of shape (height, width, 3), row-major.
- HSV image: float64 array of shape (height, width, 3) with h, s, v in [0, 1]
  (hue wraps, 0 and 1 are the same hue).
- Binary mask: uint8 array of shape (height, width) with values in {0, 1}.
- Input vector: float64 array of shape (1024,) with values in {0.0, 1.0},
  the row-major flattening of a 32x32 mask (index = 32*row + col).
"""

import functools

import numpy as np
from scipy import ndimage

GRID = 32
INPUT_LEN = GRID * GRID


def _check_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 RGB image, got dtype {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return img


def quantize_u8(x: np.ndarray) -> np.ndarray:
    """Float -> uint8 with round-half-up (floor(x + 0.5)), clipped to [0, 255]."""
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def gaussian_kernel_1d(kernel_size: int, sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian kernel sampled at integer offsets."""
    if kernel_size % 2 != 1 or kernel_size < 1:
        raise ValueError(f"kernel_size must be odd and >= 1, got {kernel_size}")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    r = kernel_size // 2
    t = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_blur(img: np.ndarray, kernel_size: int = 5, sigma: float = 1.0) -> np.ndarray:
    """Separable Gaussian blur per channel, edge-replicated borders.

    Rows are convolved first, then columns, in float64; the result is
    quantized back to uint8 only at the end.
    """
    img = _check_rgb(img)
    w = gaussian_kernel_1d(kernel_size, sigma)
    out = img.astype(np.float64)
    # mode='nearest' replicates the edge pixel, matching the border contract
    out = ndimage.correlate1d(out, w, axis=1, mode="nearest")
    out = ndimage.correlate1d(out, w, axis=0, mode="nearest")
    return quantize_u8(out)


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Standard hexcone RGB -> HSV with all components scaled to [0, 1].

    Achromatic pixels get h = 0; black pixels additionally get s = 0.
    """
    img = _check_rgb(img)
    rgb = img.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=2)
    delta = mx - rgb.min(axis=2)

    # argmax returns the first maximal channel, fixing the tie priority r, g, b
    lead = rgb.argmax(axis=2)
    h = np.zeros_like(mx)
    chrom = delta > 0
    mr = chrom & (lead == 0)
    mg = chrom & (lead == 1)
    mb = chrom & (lead == 2)
    h[mr] = ((g[mr] - b[mr]) / delta[mr]) % 6.0
    h[mg] = (b[mg] - r[mg]) / delta[mg] + 2.0
    h[mb] = (r[mb] - g[mb]) / delta[mb] + 4.0
    h[chrom] /= 6.0

    s = np.zeros_like(mx)
    lit = mx > 0
    s[lit] = delta[lit] / mx[lit]
    return np.stack([h, s, mx], axis=2)


def apply_threshold(hsv: np.ndarray, thr) -> np.ndarray:
    """Binary mask: pixel = 1 iff the threshold predicate holds on that HSV pixel.

    `thr` is anything with an `evaluate_array(h, s, v) -> bool array` method
    (see threshold_learn.HsvThreshold).
    """
    hsv = np.asarray(hsv, dtype=np.float64)
    if hsv.ndim != 3 or hsv.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) HSV image, got shape {hsv.shape}")
    mask = thr.evaluate_array(hsv[..., 0], hsv[..., 1], hsv[..., 2])
    return mask.astype(np.uint8)


@functools.lru_cache(maxsize=16)
def _overlap_weights(n_src: int) -> np.ndarray:
    """Integer overlap lengths between GRID target cells and source pixels.

    All coordinates are scaled by GRID so every cell boundary (multiples of
    n_src) and pixel boundary (multiples of GRID) is an integer; overlaps are
    then exact integers and binarization ties can be resolved exactly.
    Row i sums to n_src.
    """
    w = np.zeros((GRID, n_src), dtype=np.int64)
    for i in range(GRID):
        lo, hi = i * n_src, (i + 1) * n_src  # cell extent in scaled units
        p0, p1 = lo // GRID, (hi + GRID - 1) // GRID  # pixels touched
        for p in range(p0, min(p1, n_src)):
            w[i, p] = min(hi, (p + 1) * GRID) - max(lo, p * GRID)
    w.setflags(write=False)
    return w


def downsample_32(mask: np.ndarray) -> np.ndarray:
    """Area-average resample to 32x32, then re-binarize (cell mean >= 0.5 -> 1).

    The tie at exactly 0.5 goes to 1; the comparison is exact because the
    area sums are computed in scaled integer arithmetic.
    """
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"expected (h, w) mask, got shape {mask.shape}")
    h, w = mask.shape
    if h < GRID or w < GRID:
        raise ValueError(f"mask must be at least {GRID}x{GRID}, got {h}x{w}")
    rw = _overlap_weights(h)
    cw = _overlap_weights(w)
    # float64 matmul is exact here: every product and partial sum is an
    # integer below 2**53, so the tie comparison stays exact
    sums = rw.astype(np.float64) @ mask.astype(np.float64) @ cw.T.astype(np.float64)
    total = float(h) * float(w)  # scaled area of one cell
    return (2.0 * sums >= total).astype(np.uint8)


def flatten_mask(mask32: np.ndarray) -> np.ndarray:
    """Row-major flatten of a 32x32 mask into the 1024-float input vector."""
    mask32 = np.asarray(mask32)
    if mask32.shape != (GRID, GRID):
        raise ValueError(f"expected {GRID}x{GRID} mask, got shape {mask32.shape}")
    return mask32.reshape(INPUT_LEN).astype(np.float64)


def preprocess(raw: np.ndarray, thr, kernel_size: int = 5, sigma: float = 1.0) -> np.ndarray:
    """Full pipeline: blur -> HSV -> threshold -> downsample -> flatten.

    Deterministic: identical input bytes yield an identical 1024-vector.
    """
    blurred = gaussian_blur(raw, kernel_size, sigma)
    hsv = rgb_to_hsv(blurred)
    mask = apply_threshold(hsv, thr)
    return flatten_mask(downsample_32(mask))


def horizontal_mirror(img: np.ndarray) -> np.ndarray:
    """Left-right flip of an image or mask (last spatial axis = columns)."""
    img = np.asarray(img)
    axis = 1 if img.ndim >= 2 else 0
    return np.flip(img, axis=axis).copy()


def horizontal_mirror_32(vec: np.ndarray) -> np.ndarray:
    """Left-right flip of a flattened 32x32 input vector (32r+c <-> 32r+31-c)."""
    vec = np.asarray(vec)
    if vec.shape != (INPUT_LEN,):
        raise ValueError(f"expected length-{INPUT_LEN} vector, got shape {vec.shape}")
    return np.flip(vec.reshape(GRID, GRID), axis=1).reshape(INPUT_LEN).copy()
