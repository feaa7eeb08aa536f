"""512-bit comparisons over a 60-point concentric sampling pattern."""

from __future__ import annotations

import numpy as np

from ..keypoints import as_arrays
from ._sampling import SmoothCache, as_grid, bilinear, check_inside, gaussian

RADII = (0.0, 2.9, 4.9, 7.4, 10.8)
COUNTS = (1, 10, 14, 15, 20)
BITS = 512
LONG_PAIR_MIN = 13.67
# keypoint size covered by the unscaled pattern (outer ring plus its smoothing)
BASE_SIZE = 24.0


def _build_pattern():
    pts, sig = [], []
    for ring, (r, count) in enumerate(zip(RADII, COUNTS)):
        offset = np.pi / count if ring % 2 == 0 and count > 1 else 0.0
        for j in range(count):
            a = 2 * np.pi * j / count + offset
            pts.append((r * np.cos(a), r * np.sin(a)))
            # half the spacing between neighbours on the ring
            sig.append(max(0.5, np.pi * r / count) if count > 1 else 0.5)
    pts = np.asarray(pts)
    i, j = np.triu_indices(len(pts), k=1)
    dist = np.hypot(*(pts[j] - pts[i]).T)
    order = np.argsort(dist, kind="stable")
    short = np.stack([i[order[:BITS]], j[order[:BITS]]], axis=1)
    long_ = np.stack([i[dist > LONG_PAIR_MIN], j[dist > LONG_PAIR_MIN]], axis=1)
    return pts, np.asarray(sig), short, long_


POINTS, SIGMAS, SHORT_PAIRS, LONG_PAIRS = _build_pattern()


def _sample(smooth, xy, scale, c, s):
    """Smoothed intensities at the rotated, scaled pattern: (N, 60)."""
    n = len(xy)
    vals = np.empty((n, len(POINTS)))
    u, v = POINTS[:, 0], POINTS[:, 1]
    px = xy[:, 0][:, None] + scale[:, None] * (u * c[:, None] - v * s[:, None])
    py = xy[:, 1][:, None] + scale[:, None] * (u * s[:, None] + v * c[:, None])
    sig = scale[:, None] * SIGMAS[None, :]
    keys = np.round(sig / 0.1).astype(int)
    for key in np.unique(keys):
        m = keys == key
        vals[m] = bilinear(smooth(key * 0.1), px[m], py[m])
    return vals


def brisk_descriptors(grid, keypoints) -> tuple:
    """Batch BRISK: returns ``(bits (N, 512) uint8, orientations (N,))``.

    Orientation is the direction of the mean local gradient over long pairs;
    bits compare the 512 shortest pairs after rotating the pattern (``1`` iff
    the first point is darker by more than rounding noise).
    """
    g = as_grid(grid)
    xy, size, _ = as_arrays(keypoints)
    check_inside(g, xy, size)
    n = len(xy)
    bits = np.zeros((n, BITS), dtype=np.uint8)
    if n == 0:
        return bits, np.zeros(0)
    scale = size / BASE_SIZE
    smooth = SmoothCache(g, gaussian, quantum=0.1)

    vals = _sample(smooth, xy, scale, np.ones(n), np.zeros(n))
    a, b = LONG_PAIRS[:, 0], LONG_PAIRS[:, 1]
    d = POINTS[b] - POINTS[a]
    d2 = (d ** 2).sum(axis=1)
    diff = vals[:, b] - vals[:, a]
    gx = (diff * (d[:, 0] / d2)).mean(axis=1)
    gy = (diff * (d[:, 1] / d2)).mean(axis=1)
    ori = np.mod(np.arctan2(gy, gx), 2 * np.pi)

    vals = _sample(smooth, xy, scale, np.cos(ori), np.sin(ori))
    # smoothing at different sigmas perturbs equal intensities by a few ulps; those still count as ties
    tol = 64 * np.finfo(np.float64).eps * max(np.abs(g).max(), np.finfo(np.float64).tiny)
    bits[:] = vals[:, SHORT_PAIRS[:, 0]] < vals[:, SHORT_PAIRS[:, 1]] - tol
    return bits, ori
