"""Ready-made track worlds: two training tracks, an unseen evaluation loop in
a different color, and an occlusion plan for it.

Colors are chosen so each line is separable from the noisy warm-gray
background within a depth-2 HSV tree, while plain per-channel RGB cuts fail
under the brightness noise.
"""

import numpy as np

from .episode import occlusion_scenario
from .world import Occluder, TrackWorld

PALETTE = {
    "blue": (40, 90, 200),
    "yellow": (230, 200, 40),
    "pink": (235, 70, 160),
    "green": (50, 190, 90),
}


def oval(color="blue", lighting=1.0, seed=11) -> TrackWorld:
    """Closed oval; curvature +0.38 to +1.53 (one steering direction)."""
    a = np.linspace(0.0, 2.0 * np.pi, 13)[:-1]
    pts = np.stack([np.cos(a) * 1.8, np.sin(a) * 1.25], axis=1)
    return TrackWorld(name="oval", waypoints=pts, closed=True, color=color,
                      line_rgb=PALETTE[color], lighting=lighting, seed=seed)


def s_curve(color="yellow", lighting=1.0, seed=23) -> TrackWorld:
    """Open serpentine; curvature -1.13 to +1.11 (both directions)."""
    x = np.linspace(0.0, 6.5, 14)
    pts = np.stack([x, 0.95 * np.sin(x)], axis=1)
    return TrackWorld(name="s_curve", waypoints=pts, closed=False, color=color,
                      line_rgb=PALETTE[color], lighting=lighting, seed=seed)


def test_loop(color="pink", lighting=1.0, seed=37) -> TrackWorld:
    """Closed trefoil-modulated loop with a concave arc (curvature -0.31 to
    +1.35, inside the mirror-augmented training range); the unseen
    evaluation track."""
    a = np.linspace(0.0, 2.0 * np.pi, 25)[:-1]
    r = 1.75 + 0.20 * np.cos(3 * a)
    pts = np.stack([r * np.cos(a), r * np.sin(a) * 0.95], axis=1)
    return TrackWorld(name="test_loop", waypoints=pts, closed=True, color=color,
                      line_rgb=PALETTE[color], lighting=lighting, seed=seed)


def occluded_test_loop(color="pink", lighting=1.0):
    """test_loop with occluders partially hiding two curved sections; validated
    by the visibility sweep. Sized so a stretch of trajectory stays in view
    from every approach (the operating condition the sweep enforces)."""
    base = test_loop(color=color, lighting=lighting)
    side = 0.30
    occs = [
        Occluder(x=1.64 - side / 2, y=0.72 - side / 2, w=side, h=side),
        Occluder(x=-0.32 - side / 2, y=-1.73 - side / 2, w=side, h=side),
    ]
    return occlusion_scenario(base, occs)


FACTORIES = {"oval": oval, "s_curve": s_curve, "test_loop": test_loop}
