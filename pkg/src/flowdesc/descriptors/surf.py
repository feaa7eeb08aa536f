"""64-d sums of Haar wavelet responses over a rotated 4x4 grid of subregions."""

from __future__ import annotations

import math

import numpy as np

from ..keypoints import as_arrays, integral_image
from ._sampling import as_grid, check_inside

LENGTH = 64
WINDOW = 20  # in units of the keypoint scale
N_SUB = 4
SAMPLES_PER_SUB = 5
WEIGHT_SIGMA = 3.3
DEGENERATE_NORM = 1e-12

_OFFSETS = np.arange(WINDOW) - (WINDOW - 1) / 2.0
_U, _V = np.meshgrid(_OFFSETS, _OFFSETS)  # u along kp x-axis
_U, _V = _U.ravel(), _V.ravel()
_WEIGHT = np.exp(-(_U ** 2 + _V ** 2) / (2 * WEIGHT_SIGMA ** 2))
_SUBREGION = ((_V + WINDOW / 2) // SAMPLES_PER_SUB * N_SUB + (_U + WINDOW / 2) // SAMPLES_PER_SUB).astype(np.intp)


def surf_scale(size) -> np.ndarray:
    return np.asarray(size, dtype=np.float64) * 1.2 / 9.0


def surf_descriptors(grid, keypoints) -> tuple:
    """Batch SURF: returns ``(values (N, 64) float32, degenerate (N,) bool)``.

    Haar responses of side ``2 * round(scale)`` are taken on the integral image
    of an edge-padded copy of the grid at rounded sample positions, rotated
    into the keypoint frame and Gaussian weighted (sigma = 3.3 scale).  Each
    subregion contributes ``(sum dx, sum |dx|, sum dy, sum |dy|)``.
    """
    g = as_grid(grid)
    xy, size, ori = as_arrays(keypoints)
    check_inside(g, xy, size)
    n = len(xy)
    out = np.zeros((n, LENGTH))
    if n == 0:
        return out.astype(np.float32), np.zeros(0, bool)

    scale = surf_scale(size)
    half = np.maximum(np.round(scale).astype(np.intp), 1)
    reach = int(math.ceil((WINDOW / 2 * math.sqrt(2) * scale.max()) + half.max() + 2))
    pad = reach
    ii = integral_image(np.pad(g - g.min(), pad, mode="edge"))
    # box differences below the integral image's rounding level are treated as exact zeros
    noise = 16 * np.finfo(np.float64).eps * ii[-1, -1]

    c, s = np.cos(ori)[:, None], np.sin(ori)[:, None]
    sc = scale[:, None]
    px = np.rint(xy[:, 0][:, None] + sc * (_U * c - _V * s)).astype(np.intp) + pad
    py = np.rint(xy[:, 1][:, None] + sc * (_U * s + _V * c)).astype(np.intp) + pad
    hh = half[:, None]

    def bsum(r0, c0, r1, c1):
        return ii[r1, c1] - ii[r0, c1] - ii[r1, c0] + ii[r0, c0]

    dx = bsum(py - hh, px, py + hh, px + hh) - bsum(py - hh, px - hh, py + hh, px)
    dy = bsum(py, px - hh, py + hh, px + hh) - bsum(py - hh, px - hh, py, px + hh)
    dx[np.abs(dx) <= noise] = 0.0
    dy[np.abs(dy) <= noise] = 0.0
    rx = (dx * c + dy * s) * _WEIGHT
    ry = (-dx * s + dy * c) * _WEIGHT

    feats = np.stack([rx, np.abs(rx), ry, np.abs(ry)], axis=-1)  # (N, 400, 4)
    for region in range(N_SUB * N_SUB):
        m = _SUBREGION == region
        out[:, region * 4:(region + 1) * 4] = feats[:, m].sum(axis=1)

    norm = np.linalg.norm(out, axis=1)
    degenerate = norm <= DEGENERATE_NORM
    out[~degenerate] /= norm[~degenerate, None]
    out[degenerate] = 0.0
    return out.astype(np.float32), degenerate
