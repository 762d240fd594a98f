"""Self-contained raster plotter: line charts and heatmap grids drawn onto a
numpy canvas with an embedded 5x7 bitmap font, encoded as PNG via Pillow.

Deliberately tiny: just what the CLI needs for loss curves, velocity
comparison panels, and dataset heatmaps.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

# classic 5x7 glyphs, one int per row, bit 4 = leftmost pixel
_FONT = {
    "A": (0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11),
    "B": (0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E),
    "C": (0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E),
    "D": (0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E),
    "E": (0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F),
    "F": (0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10),
    "G": (0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F),
    "H": (0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11),
    "I": (0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E),
    "J": (0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C),
    "K": (0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11),
    "L": (0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F),
    "M": (0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11),
    "N": (0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11),
    "O": (0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E),
    "P": (0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10),
    "Q": (0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D),
    "R": (0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11),
    "S": (0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E),
    "T": (0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04),
    "U": (0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E),
    "V": (0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04),
    "W": (0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A),
    "X": (0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11),
    "Y": (0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04),
    "Z": (0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F),
    "0": (0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E),
    "1": (0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E),
    "2": (0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F),
    "3": (0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E),
    "4": (0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02),
    "5": (0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E),
    "6": (0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E),
    "7": (0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08),
    "8": (0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E),
    "9": (0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C),
    " ": (0, 0, 0, 0, 0, 0, 0),
    ".": (0, 0, 0, 0, 0, 0x0C, 0x0C),
    ",": (0, 0, 0, 0, 0x0C, 0x04, 0x08),
    "-": (0, 0, 0, 0x1F, 0, 0, 0),
    "_": (0, 0, 0, 0, 0, 0, 0x1F),
    ":": (0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0),
    "(": (0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02),
    ")": (0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08),
    "/": (0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10),
    "%": (0x19, 0x1A, 0x02, 0x04, 0x08, 0x0B, 0x13),
    "+": (0, 0x04, 0x04, 0x1F, 0x04, 0x04, 0),
    "=": (0, 0, 0x1F, 0, 0x1F, 0, 0),
    "e": (0, 0, 0x0E, 0x11, 0x1F, 0x10, 0x0E),
}

BLUE = (50, 90, 200)
ORANGE = (230, 120, 30)
GRAY = (150, 150, 150)
BLACK = (20, 20, 20)


class Canvas:
    def __init__(self, width=640, height=480, bg=(255, 255, 255)):
        self.w, self.h = width, height
        self.img = np.full((height, width, 3), bg, dtype=np.uint8)

    def _put(self, x, y, color):
        if 0 <= x < self.w and 0 <= y < self.h:
            self.img[y, x] = color

    def line(self, x0, y0, x1, y1, color):
        """Bresenham segment, endpoints rounded to pixels."""
        x0, y0, x1, y1 = (int(round(v)) for v in (x0, y0, x1, y1))
        dx, dy = abs(x1 - x0), -abs(y1 - y0)
        sx = 1 if x0 < x1 else -1
        sy = 1 if y0 < y1 else -1
        err = dx + dy
        while True:
            self._put(x0, y0, color)
            if x0 == x1 and y0 == y1:
                return
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x0 += sx
            if e2 <= dx:
                err += dx
                y0 += sy

    def fill_rect(self, x, y, w, h, color):
        x0, y0 = max(int(x), 0), max(int(y), 0)
        x1, y1 = min(int(x + w), self.w), min(int(y + h), self.h)
        if x1 > x0 and y1 > y0:
            self.img[y0:y1, x0:x1] = color

    def text(self, x, y, s, color=BLACK, scale=1):
        """Draw s (rendered case-insensitively) with top-left corner at (x, y)."""
        cx = int(x)
        for ch in str(s):
            glyph = _FONT.get(ch) or _FONT.get(ch.upper()) or _FONT[" "]
            for row, bits in enumerate(glyph):
                for col in range(5):
                    if bits & (1 << (4 - col)):
                        self.fill_rect(cx + col * scale, int(y) + row * scale, scale, scale, color)
            cx += 6 * scale

    @staticmethod
    def text_width(s, scale=1):
        return 6 * scale * len(str(s))

    def save(self, path):
        Image.fromarray(self.img, "RGB").save(path, format="PNG")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min(s for s in (1 * mag, 2 * mag, 5 * mag, 10 * mag) if s >= raw)
    start = np.ceil(lo / step) * step
    return list(np.arange(start, hi + step * 1e-9, step))


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1000 or abs(v) < 0.001:
        return f"{v:.1e}"
    return f"{v:.4g}"


def line_chart(series, path, title="", xlabel="", ylabel="", x=None,
               width=640, height=480):
    """Render labeled series to a PNG line chart.

    series: list of (label, values, color) with equal-length value arrays;
    x defaults to 1..n.
    """
    cv = Canvas(width, height)
    ml, mr, mt, mb = 78, 24, 42, 52
    px0, px1 = ml, width - mr
    py0, py1 = height - mb, mt

    ys = np.concatenate([np.asarray(v, dtype=float) for _, v, _ in series if len(v)])
    n = max(len(v) for _, v, _ in series)
    xs = np.asarray(x if x is not None else np.arange(1, n + 1), dtype=float)
    xlo, xhi = float(xs.min()), float(xs.max())
    ylo, yhi = float(ys.min()), float(ys.max())
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad

    def to_px(vx, vy):
        fx = (vx - xlo) / (xhi - xlo) if xhi > xlo else 0.5
        fy = (vy - ylo) / (yhi - ylo)
        return px0 + fx * (px1 - px0), py0 - fy * (py0 - py1)

    cv.line(px0, py0, px1, py0, BLACK)
    cv.line(px0, py0, px0, py1, BLACK)
    for tx in _ticks(xlo, xhi):
        sx, _ = to_px(tx, ylo)
        cv.line(sx, py0, sx, py0 + 4, BLACK)
        label = _fmt(tx)
        cv.text(sx - cv.text_width(label) / 2, py0 + 8, label)
    for ty in _ticks(ylo, yhi):
        _, sy = to_px(xlo, ty)
        cv.line(px0 - 4, sy, px0, sy, BLACK)
        label = _fmt(ty)
        cv.text(px0 - 8 - cv.text_width(label), sy - 3, label)

    for label, values, color in series:
        values = np.asarray(values, dtype=float)
        vx = xs[: len(values)]
        pts = [to_px(a, b) for a, b in zip(vx, values)]
        for (ax, ay), (bx, by) in zip(pts, pts[1:]):
            cv.line(ax, ay, bx, by, color)
        if len(pts) == 1:
            cv.fill_rect(pts[0][0] - 1, pts[0][1] - 1, 3, 3, color)

    ly = mt + 4
    for label, _, color in series:
        lx = px1 - 150
        cv.fill_rect(lx, ly, 14, 8, color)
        cv.text(lx + 20, ly, label)
        ly += 14

    cv.text((width - cv.text_width(title, 2)) / 2, 10, title, scale=2)
    cv.text((width - cv.text_width(xlabel)) / 2, height - 18, xlabel)
    for i, ch in enumerate(str(ylabel)[:20]):
        cv.text(8, mt + 30 + i * 10, ch)
    cv.save(path)


def heatmap_chart(grid, path, title="", xlabel="", ylabel="", width=560, height=560):
    """Render a 2D count grid to a PNG; brighter = more counts."""
    grid = np.asarray(grid, dtype=np.float64)
    cv = Canvas(width, height)
    ml, mr, mt, mb = 50, 30, 42, 46
    gw, gh = width - ml - mr, height - mt - mb
    top = grid.max() if grid.size else 1.0
    t = grid / top if top > 0 else grid
    # white -> blue -> warm red ramp
    low = np.array([255, 255, 255], dtype=np.float64)
    mid = np.array([70, 100, 200], dtype=np.float64)
    high = np.array([200, 40, 40], dtype=np.float64)
    rows, cols = t.shape
    cell_h, cell_w = gh / rows, gw / cols
    for r in range(rows):
        for c in range(cols):
            v = t[r, c]
            color = low + (mid - low) * (v * 2) if v < 0.5 else mid + (high - mid) * ((v - 0.5) * 2)
            cv.fill_rect(ml + c * cell_w, mt + r * cell_h, np.ceil(cell_w), np.ceil(cell_h),
                         color.astype(np.uint8))
    cv.line(ml, mt, ml, mt + gh, BLACK)
    cv.line(ml, mt + gh, ml + gw, mt + gh, BLACK)
    cv.text((width - cv.text_width(title, 2)) / 2, 10, title, scale=2)
    cv.text((width - cv.text_width(xlabel)) / 2, height - 16, xlabel)
    for i, ch in enumerate(str(ylabel)[:20]):
        cv.text(8, mt + 10 + i * 10, ch)
    cv.save(path)
