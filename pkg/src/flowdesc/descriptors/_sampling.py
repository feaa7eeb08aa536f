"""Edge-clamped sub-pixel sampling and cached smoothing shared by the descriptors."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import InputError


def bilinear(img: np.ndarray, x, y) -> np.ndarray:
    """Sample ``img`` at fractional ``(x, y)`` with edge clamping.

    Written in lerp form so a constant image samples to exactly that constant.
    """
    h, w = img.shape
    x = np.clip(np.asarray(x, dtype=np.float64), 0, w - 1)
    y = np.clip(np.asarray(y, dtype=np.float64), 0, h - 1)
    x0 = np.minimum(np.floor(x).astype(np.intp), w - 2) if w > 1 else np.zeros(x.shape, np.intp)
    y0 = np.minimum(np.floor(y).astype(np.intp), h - 2) if h > 1 else np.zeros(y.shape, np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    v00, v01 = img[y0, x0], img[y0, x1]
    v10, v11 = img[y1, x0], img[y1, x1]
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return top + fy * (bot - top)


def gaussian(img: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return img
    return ndimage.gaussian_filter(img, sigma, mode="nearest", truncate=4.0)


def box(img: np.ndarray, width: int) -> np.ndarray:
    """Separable mean filter; every output is an independent dot product."""
    if width <= 1:
        return img
    k = np.full(width, 1.0 / width)
    out = ndimage.correlate1d(img, k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


class SmoothCache:
    """Memoise smoothed copies of one image keyed by a quantised parameter."""

    def __init__(self, img, fn, quantum: float = 0.05):
        self.img = img
        self.fn = fn
        self.quantum = quantum
        self._cache = {}

    def __call__(self, param: float) -> np.ndarray:
        key = int(round(param / self.quantum)) if self.quantum else param
        if key not in self._cache:
            self._cache[key] = self.fn(self.img, key * self.quantum if self.quantum else param)
        return self._cache[key]


def as_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2 or g.size == 0:
        raise InputError(f"descriptor expects a non-empty 2-D grid, got shape {g.shape}")
    return g


def check_inside(grid: np.ndarray, xy: np.ndarray, size: np.ndarray) -> None:
    """Reject keypoints whose support square misses the grid entirely."""
    if len(xy) == 0:
        return
    h, w = grid.shape
    half = size / 2
    off = ((xy[:, 0] + half < 0) | (xy[:, 0] - half > w - 1)
           | (xy[:, 1] + half < 0) | (xy[:, 1] - half > h - 1) | ~(size > 0))
    if off.any():
        i = int(np.argmax(off))
        raise InputError(f"keypoint at ({xy[i, 0]:.2f}, {xy[i, 1]:.2f}) size {size[i]} lies outside the {w}x{h} grid")
