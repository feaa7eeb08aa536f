"""256-bit steered binary tests on a box-smoothed 31x31 patch."""

from __future__ import annotations

import numpy as np

from ..keypoints import as_arrays
from ._orb_pattern import ORB_PATTERN
from ._sampling import SmoothCache, as_grid, bilinear, box, check_inside

PATCH = 31
HALF = PATCH // 2
BITS = 256
SMOOTH = 5
PATTERN_SEED = 0x5EED

PATTERN = np.asarray(ORB_PATTERN, dtype=np.float64)

_yy, _xx = np.mgrid[-HALF:HALF + 1, -HALF:HALF + 1]
_DISK = _xx ** 2 + _yy ** 2 <= HALF ** 2
DISK_X = _xx[_DISK].astype(np.float64)
DISK_Y = _yy[_DISK].astype(np.float64)


def generate_pattern(seed: int = PATTERN_SEED, n: int = BITS) -> tuple:
    """Rebuild the frozen test-pair table from its seed."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < n:
        p = np.rint(rng.normal(0, PATCH / 5, 4)).astype(int)
        if np.all(np.abs(p) <= HALF) and not (p[0] == p[2] and p[1] == p[3]):
            pairs.append(tuple(int(v) for v in p))
    return tuple(pairs)


def _box_width(scale: float) -> int:
    w = int(round(SMOOTH * max(scale, 1.0)))
    return w if w % 2 else w + 1


def centroid_orientation(grid, xy, size) -> np.ndarray:
    """Intensity-centroid angle ``atan2(m01, m10)`` over the scaled circular patch."""
    g = as_grid(grid)
    scale = (np.asarray(size, dtype=np.float64) / PATCH)[:, None]
    px = xy[:, 0][:, None] + scale * DISK_X
    py = xy[:, 1][:, None] + scale * DISK_Y
    vals = bilinear(g, px, py)
    m10 = (vals * DISK_X).sum(axis=1)
    m01 = (vals * DISK_Y).sum(axis=1)
    return np.mod(np.arctan2(m01, m10), 2 * np.pi)


def orb_descriptors(grid, keypoints, use_centroid: bool = True) -> tuple:
    """Batch ORB: returns ``(bits (N, 256) uint8, orientations (N,))``.

    Bit ``i`` is 1 iff the smoothed intensity at the rotated first point of
    pair ``i`` is strictly less than at the second; equal intensities give 0.
    With ``use_centroid=False`` the keypoints' own orientations steer the
    pattern.
    """
    g = as_grid(grid)
    xy, size, ori = as_arrays(keypoints)
    check_inside(g, xy, size)
    n = len(xy)
    bits = np.zeros((n, BITS), dtype=np.uint8)
    if n == 0:
        return bits, ori
    if use_centroid:
        ori = centroid_orientation(g, xy, size)
    scale = size / PATCH
    widths = np.array([_box_width(s) for s in scale])
    smooth = SmoothCache(g, lambda img, w: box(img, int(w)), quantum=0)
    for w in np.unique(widths):
        sel = np.nonzero(widths == w)[0]
        img = smooth(int(w))
        c = np.cos(ori[sel])[:, None]
        s = np.sin(ori[sel])[:, None]
        sc = scale[sel][:, None]
        vals = []
        for cols in ((0, 1), (2, 3)):
            u, v = PATTERN[:, cols[0]], PATTERN[:, cols[1]]
            px = xy[sel, 0][:, None] + sc * (u * c - v * s)
            py = xy[sel, 1][:, None] + sc * (u * s + v * c)
            vals.append(bilinear(img, px, py))
        bits[sel] = (vals[0] < vals[1]).astype(np.uint8)
    return bits, ori
