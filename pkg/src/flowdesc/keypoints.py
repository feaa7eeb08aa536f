"""Keypoint detectors for single-channel grids normalised to [0, 1].

Coordinates are in pixels with ``x`` along columns and ``y`` along rows;
orientations are ``atan2(dy, dx)`` in the same frame, wrapped to [0, 2*pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import InputError

TWO_PI = 2.0 * math.pi

# radius-3 Bresenham circle, clockwise from 12 o'clock, as (dx, dy)
FAST_CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
FAST_ARC = 9
FAST_SIZE = 7.0
FAST_THRESHOLD = 0.05

SIFT_SIGMA = 1.6
SIFT_INIT_SIGMA = 0.5
SIFT_BORDER = 5
SIFT_MAX_INTERP = 5
SIFT_ORI_BINS = 36
SIFT_ORI_SIG_FCTR = 1.5
SIFT_ORI_RADIUS = 3 * SIFT_ORI_SIG_FCTR
SIFT_ORI_PEAK_RATIO = 0.8

HESSIAN_THRESHOLD = 1e-3

DENSE_SCALES = (12, 16, 24, 32)

ORB_SCALE_FACTOR = 1.2
ORB_LEVELS = 4
ORB_PATCH = 31.0


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    size: float
    orientation: float = 0.0
    response: float = 0.0
    octave: int = 0
    modality: int = 0

    def with_modality(self, modality: int) -> "Keypoint":
        return replace(self, modality=modality)


def as_arrays(keypoints) -> tuple:
    """Split a keypoint list into ``(xy, size, orientation)`` arrays."""
    n = len(keypoints)
    xy = np.empty((n, 2))
    size = np.empty(n)
    ori = np.empty(n)
    for i, kp in enumerate(keypoints):
        xy[i] = kp.x, kp.y
        size[i] = kp.size
        ori[i] = kp.orientation
    return xy, size, ori


def _check_grid(grid, min_side: int, what: str) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise InputError(f"{what} expects a 2-D grid, got shape {g.shape}")
    if min(g.shape) < min_side:
        raise InputError(f"{what} needs a grid of at least {min_side}x{min_side}, got {g.shape[1]}x{g.shape[0]}")
    return g


# ---------------------------------------------------------------------------
# FAST-9 segment test

def fast_response(grid, threshold: float = FAST_THRESHOLD) -> np.ndarray:
    """Segment-test score map; zero where the pixel is not a corner.

    The score of a corner is the summed absolute difference over its best
    qualifying contiguous arc (brighter or darker).  Pixels closer than 3 to
    the border are never corners.
    """
    g = _check_grid(grid, 7, "detect_fast")
    if threshold <= 0:
        raise InputError("FAST threshold must be positive")
    h, w = g.shape
    centre = g[3:h - 3, 3:w - 3]
    ring = np.stack([g[3 + dy:h - 3 + dy, 3 + dx:w - 3 + dx] for dx, dy in FAST_CIRCLE])
    best = np.zeros_like(centre)
    for sign in (1.0, -1.0):
        diff = sign * (ring - centre)
        ok = diff > threshold
        all_ok = ok.all(axis=0)
        run = np.zeros(centre.shape, dtype=np.int64)
        acc = np.zeros_like(centre)
        top = np.zeros_like(centre)
        for i in range(32):
            j = i % 16
            run = np.where(ok[j], run + 1, 0)
            acc = np.where(ok[j], acc + diff[j], 0.0)
            top = np.where(run >= FAST_ARC, np.maximum(top, acc), top)
        top = np.where(all_ok, diff.sum(axis=0), top)
        best = np.maximum(best, top)
    out = np.zeros_like(g)
    out[3:h - 3, 3:w - 3] = best
    return out


def detect_fast(grid, threshold: float = FAST_THRESHOLD, nms: bool = True) -> list:
    score = fast_response(grid, threshold)
    mask = score > 0
    if nms:
        mask &= score >= ndimage.maximum_filter(score, size=3, mode="constant")
    ys, xs = np.nonzero(mask)
    return [Keypoint(float(x), float(y), FAST_SIZE, 0.0, float(score[y, x]), 0) for y, x in zip(ys, xs)]


def detect_orb(grid, threshold: float = FAST_THRESHOLD, n_levels: int = ORB_LEVELS,
               scale_factor: float = ORB_SCALE_FACTOR, max_keypoints: int = 500) -> list:
    """Multi-scale FAST with non-maximum suppression, ranked by score.

    Level ``l`` is the grid resampled by ``scale_factor**-l``; keypoints are
    mapped back to level-0 pixels with ``size = 31 * scale``.  Orientation is
    left at 0 and is assigned by the ORB descriptor itself.
    """
    g = _check_grid(grid, 16, "detect_orb")
    found = []
    for level in range(n_levels):
        scale = scale_factor ** level
        img = g if level == 0 else ndimage.zoom(g, 1.0 / scale, order=1, mode="nearest", grid_mode=True)
        if min(img.shape) < 7:
            break
        for kp in detect_fast(img, threshold, nms=True):
            x = (kp.x + 0.5) * g.shape[1] / img.shape[1] - 0.5
            y = (kp.y + 0.5) * g.shape[0] / img.shape[0] - 0.5
            found.append(Keypoint(x, y, ORB_PATCH * scale, 0.0, kp.response, level))
    found.sort(key=lambda k: -k.response)
    return found[:max_keypoints]


# ---------------------------------------------------------------------------
# difference of Gaussians

def _blur(img, sigma):
    if sigma <= 0:
        return img
    return ndimage.gaussian_filter(img, sigma, mode="nearest", truncate=4.0)


def gaussian_pyramid(grid, n_octaves: int, scales_per_octave: int = 3, sigma: float = SIFT_SIGMA) -> tuple:
    """Per-octave Gaussian stacks (``s + 3`` levels each) and their DoG stacks."""
    s = scales_per_octave
    k = 2.0 ** (1.0 / s)
    sig = [sigma * k ** i for i in range(s + 3)]
    steps = [0.0] + [math.sqrt(sig[i] ** 2 - sig[i - 1] ** 2) for i in range(1, s + 3)]
    base = _blur(np.asarray(grid, dtype=np.float64), math.sqrt(max(sigma ** 2 - SIFT_INIT_SIGMA ** 2, 0.01)))
    gauss, dogs = [], []
    for o in range(n_octaves):
        if o > 0:
            base = gauss[-1][s][::2, ::2]
        levels = [base]
        for i in range(1, s + 3):
            levels.append(_blur(levels[-1], steps[i]))
        stack = np.stack(levels)
        gauss.append(stack)
        dogs.append(stack[1:] - stack[:-1])
    return gauss, dogs


def default_octaves(shape) -> int:
    return max(1, int(math.log2(min(shape))) - 3)


def orientation_histogram(img, x: float, y: float, sigma: float, bins: int = SIFT_ORI_BINS) -> np.ndarray:
    """Gaussian-weighted gradient orientation histogram around ``(x, y)``.

    ``sigma`` is the keypoint scale in ``img`` pixels.  Returns the raw
    (unsmoothed) histogram.
    """
    h, w = img.shape
    radius = int(round(SIFT_ORI_RADIUS * sigma))
    weight_sigma = SIFT_ORI_SIG_FCTR * sigma
    cx, cy = int(round(x)), int(round(y))
    y0, y1 = max(cy - radius, 1), min(cy + radius, h - 2)
    x0, x1 = max(cx - radius, 1), min(cx + radius, w - 2)
    hist = np.zeros(bins)
    if y0 > y1 or x0 > x1:
        return hist
    yy, xx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    dx = img[yy, xx + 1] - img[yy, xx - 1]
    dy = img[yy + 1, xx] - img[yy - 1, xx]
    mag = np.hypot(dx, dy)
    wgt = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * weight_sigma ** 2))
    ang = np.mod(np.arctan2(dy, dx), TWO_PI)
    idx = np.floor(ang * bins / TWO_PI).astype(int) % bins
    np.add.at(hist, idx.ravel(), (mag * wgt).ravel())
    return hist


def dominant_orientations(hist, peak_ratio: float = SIFT_ORI_PEAK_RATIO, smooth: bool = True) -> list:
    """Orientations (radians) of histogram peaks at or above ``peak_ratio * max``.

    The histogram is circularly smoothed with a [1, 4, 6, 4, 1]/16 kernel, each
    local peak is refined by a parabola through its neighbours.  When no bin
    is a strict local peak (flat or plateaued histogram) the first maximal bin
    centre is returned; an all-zero histogram yields ``[]``.
    """
    hist = np.asarray(hist, dtype=np.float64)
    n = len(hist)
    if smooth:
        hist = (np.roll(hist, 2) + np.roll(hist, -2) + 4 * (np.roll(hist, 1) + np.roll(hist, -1)) + 6 * hist) / 16.0
    top = hist.max()
    if top <= 0:
        return []
    left, right = np.roll(hist, 1), np.roll(hist, -1)
    out = []
    for i in range(n):
        if hist[i] > left[i] and hist[i] > right[i] and hist[i] >= peak_ratio * top:
            denom = left[i] - 2 * hist[i] + right[i]
            shift = 0.5 * (left[i] - right[i]) / denom if denom != 0 else 0.0
            b = (i + shift + 0.5) % n
            out.append(b * TWO_PI / n)
    if not out:
        out.append((int(np.argmax(hist)) + 0.5) * TWO_PI / n)
    return out


def _refine(dog, layer, r, c, s, border):
    """Quadratic sub-pixel/sub-scale refinement; returns ``None`` if the point drifts away."""
    nl, h, w = dog.shape
    for _ in range(SIFT_MAX_INTERP):
        d = dog
        g = 0.5 * np.array([
            d[layer, r, c + 1] - d[layer, r, c - 1],
            d[layer, r + 1, c] - d[layer, r - 1, c],
            d[layer + 1, r, c] - d[layer - 1, r, c],
        ])
        v2 = 2 * d[layer, r, c]
        dxx = d[layer, r, c + 1] + d[layer, r, c - 1] - v2
        dyy = d[layer, r + 1, c] + d[layer, r - 1, c] - v2
        dss = d[layer + 1, r, c] + d[layer - 1, r, c] - v2
        dxy = 0.25 * (d[layer, r + 1, c + 1] - d[layer, r + 1, c - 1] - d[layer, r - 1, c + 1] + d[layer, r - 1, c - 1])
        dxs = 0.25 * (d[layer + 1, r, c + 1] - d[layer + 1, r, c - 1] - d[layer - 1, r, c + 1] + d[layer - 1, r, c - 1])
        dys = 0.25 * (d[layer + 1, r + 1, c] - d[layer + 1, r - 1, c] - d[layer - 1, r + 1, c] + d[layer - 1, r - 1, c])
        hess = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
        try:
            off = -np.linalg.solve(hess, g)
        except np.linalg.LinAlgError:
            return None
        if np.all(np.abs(off) < 0.5):
            value = d[layer, r, c] + 0.5 * g.dot(off)
            return layer, r, c, off, value, (dxx, dyy, dxy)
        c += int(round(off[0]))
        r += int(round(off[1]))
        layer += int(round(off[2]))
        if layer < 1 or layer > s or r < border or r >= h - border or c < border or c >= w - border:
            return None
    return None


def detect_dog(grid, n_octaves: int | None = None, scales_per_octave: int = 3,
               contrast_thresh: float = 0.04, edge_thresh: float = 10.0, sigma: float = SIFT_SIGMA) -> list:
    """Scale-space extrema of the difference-of-Gaussians pyramid.

    The contrast test compares the refined ``|DoG|`` with
    ``contrast_thresh / scales_per_octave``; the edge test rejects points whose
    principal-curvature ratio exceeds ``edge_thresh``.  One keypoint is emitted
    per dominant orientation.
    """
    g = _check_grid(grid, 16, "detect_dog")
    s = scales_per_octave
    if n_octaves is None:
        n_octaves = default_octaves(g.shape)
    gauss, dogs = gaussian_pyramid(g, n_octaves, s, sigma)
    thr = contrast_thresh / s
    pre = 0.5 * thr
    out = []
    for o, dog in enumerate(dogs):
        nl, h, w = dog.shape
        if min(h, w) < 2 * SIFT_BORDER + 1:
            break
        mx = ndimage.maximum_filter(dog, size=3, mode="nearest")
        mn = ndimage.minimum_filter(dog, size=3, mode="nearest")
        cand = (np.abs(dog) > pre) & ((dog == mx) | (dog == mn))
        cand[0] = cand[-1] = False
        cand[:, :SIFT_BORDER] = cand[:, h - SIFT_BORDER:] = False
        cand[:, :, :SIFT_BORDER] = cand[:, :, w - SIFT_BORDER:] = False
        for layer, r, c in zip(*np.nonzero(cand)):
            res = _refine(dog, int(layer), int(r), int(c), s, SIFT_BORDER)
            if res is None:
                continue
            layer, r, c, off, value, (dxx, dyy, dxy) = res
            if abs(value) < thr:
                continue
            tr, det = dxx + dyy, dxx * dyy - dxy * dxy
            if det <= 0 or tr * tr * edge_thresh >= (edge_thresh + 1) ** 2 * det:
                continue
            scale = 2.0 ** o
            sig_oct = sigma * 2.0 ** ((layer + off[2]) / s)
            x, y = (c + off[0]) * scale, (r + off[1]) * scale
            hist = orientation_histogram(gauss[o][layer], c + off[0], r + off[1], sig_oct)
            oris = dominant_orientations(hist) or [0.0]
            for theta in oris:
                out.append(Keypoint(float(x), float(y), float(2 * sig_oct * scale), float(theta % TWO_PI),
                                    float(abs(value)), o))
    return out


# ---------------------------------------------------------------------------
# determinant of Hessian with box filters

def integral_image(grid) -> np.ndarray:
    """Summed-area table with a leading zero row and column."""
    g = np.asarray(grid, dtype=np.float64)
    ii = np.zeros((g.shape[0] + 1, g.shape[1] + 1))
    ii[1:, 1:] = g.cumsum(0).cumsum(1)
    return ii


def box_sum(ii, r0, c0, r1, c1):
    """Sum of ``grid[r0:r1, c0:c1]``; indices are clipped to the grid and may be arrays."""
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    r0 = np.clip(r0, 0, h)
    r1 = np.clip(r1, 0, h)
    c0 = np.clip(c0, 0, w)
    c1 = np.clip(c1, 0, w)
    return ii[r1, c1] - ii[r0, c1] - ii[r1, c0] + ii[r0, c0]


def hessian_responses(ii, rows, cols, filt: int) -> tuple:
    """Box-filter ``(Dxx, Dyy, Dxy)`` for filter side ``filt`` at pixel centres, area-normalised."""
    lobe = filt // 3
    half = filt // 2
    r, c = rows, cols
    # Dyy: three stacked lobes of height `lobe`, width 2*lobe-1, weights +1 -2 +1
    wdt = lobe - 1
    full = box_sum(ii, r - half, c - wdt, r + half + 1, c + wdt + 1)
    mid = box_sum(ii, r - lobe // 2, c - wdt, r + lobe // 2 + 1, c + wdt + 1)
    dyy = full - 3 * mid
    full = box_sum(ii, r - wdt, c - half, r + wdt + 1, c + half + 1)
    mid = box_sum(ii, r - wdt, c - lobe // 2, r + wdt + 1, c + lobe // 2 + 1)
    dxx = full - 3 * mid
    dxy = (box_sum(ii, r - lobe, c + 1, r, c + lobe + 1)
           + box_sum(ii, r + 1, c - lobe, r + lobe + 1, c)
           - box_sum(ii, r - lobe, c - lobe, r, c)
           - box_sum(ii, r + 1, c + 1, r + lobe + 1, c + lobe + 1))
    area = float(filt * filt)
    return dxx / area, dyy / area, dxy / area


def haar_responses(ii, rows, cols, side: int) -> tuple:
    """Haar wavelet ``(dx, dy)`` of width ``side`` centred on integer pixels."""
    half = max(side // 2, 1)
    r, c = rows, cols
    dx = box_sum(ii, r - half, c, r + half, c + half) - box_sum(ii, r - half, c - half, r + half, c)
    dy = box_sum(ii, r, c - half, r + half, c + half) - box_sum(ii, r - half, c - half, r, c + half)
    return dx, dy


def surf_orientation(ii, x: float, y: float, scale: float) -> float:
    """Dominant direction of Haar responses within ``6 * scale`` (sliding pi/3 window)."""
    offs = np.arange(-6, 7)
    oy, ox = np.meshgrid(offs, offs, indexing="ij")
    keep = ox ** 2 + oy ** 2 < 36
    ox, oy = ox[keep], oy[keep]
    rows = np.round(y + oy * scale).astype(int)
    cols = np.round(x + ox * scale).astype(int)
    side = 2 * int(round(2 * scale))
    dx, dy = haar_responses(ii, rows, cols, side)
    wgt = np.exp(-(ox ** 2 + oy ** 2) / (2 * 2.0 ** 2))
    dx, dy = dx * wgt, dy * wgt
    ang = np.mod(np.arctan2(dy, dx), TWO_PI)
    best, best_ori = -1.0, 0.0
    for start in np.arange(0, TWO_PI, 0.15):
        inside = np.mod(ang - start, TWO_PI) < math.pi / 3
        sx, sy = dx[inside].sum(), dy[inside].sum()
        m = sx * sx + sy * sy
        if m > best:
            best, best_ori = m, math.atan2(sy, sx) % TWO_PI
    return best_ori if best > 0 else 0.0


def detect_hessian(grid, n_octaves: int = 3, hessian_thresh: float = HESSIAN_THRESHOLD,
                   upright: bool = False) -> list:
    """Determinant-of-Hessian blobs from box filters on the integral image.

    Octave ``o`` uses filter sides ``9 + 6 * 2**o * i`` offset like SURF
    (9-15-21-27, 15-27-39-51, ...) sampled every ``2**o`` pixels; maxima of
    ``Dxx*Dyy - (0.9*Dxy)**2`` in a 3x3x3 neighbourhood above the threshold
    survive.
    """
    g = _check_grid(grid, 16, "detect_hessian")
    h, w = g.shape
    ii = integral_image(g)
    out = []
    for o in range(n_octaves):
        step = 2 ** o
        filters = [3 * (2 ** (o + 1) + 1) + 6 * step * i for i in range(4)]
        rows = np.arange(0, h, step)
        cols = np.arange(0, w, step)
        if len(rows) < 3 or len(cols) < 3:
            break
        rr, cc = np.meshgrid(rows, cols, indexing="ij")
        stack = []
        for filt in filters:
            dxx, dyy, dxy = hessian_responses(ii, rr, cc, filt)
            det = dxx * dyy - (0.9 * dxy) ** 2
            valid = (rr >= filt // 2 + 1) & (rr < h - filt // 2 - 1) & (cc >= filt // 2 + 1) & (cc < w - filt // 2 - 1)
            stack.append(np.where(valid, det, 0.0))
        stack = np.stack(stack)
        mx = ndimage.maximum_filter(stack, size=3, mode="constant", cval=-np.inf)
        peaks = (stack == mx) & (stack > hessian_thresh)
        peaks[0] = peaks[-1] = False
        for layer, i, j in zip(*np.nonzero(peaks)):
            filt = filters[layer]
            x, y = float(cols[j]), float(rows[i])
            sc = 1.2 * filt / 9.0
            ori = 0.0 if upright else surf_orientation(ii, x, y, sc)
            out.append(Keypoint(x, y, 2.0 * sc, ori, float(stack[layer, i, j]), o))
    return out


# ---------------------------------------------------------------------------
# dense sampling and deduplication

def dense_sample(width: int, height: int, scales=DENSE_SCALES) -> list:
    """Regular grid per scale ``s``: centres ``s/2 + i*s`` with stride ``s`` and size ``s``."""
    out = []
    for o, s in enumerate(scales):
        nx, ny = int(width // s), int(height // s)
        for j in range(ny):
            for i in range(nx):
                out.append(Keypoint(s / 2 + i * s, s / 2 + j * s, float(s), 0.0, 0.0, o))
    return out


def box_iou(a: Keypoint, b: Keypoint) -> float:
    ha, hb = a.size / 2, b.size / 2
    ix = max(0.0, min(a.x + ha, b.x + hb) - max(a.x - ha, b.x - hb))
    iy = max(0.0, min(a.y + ha, b.y + hb) - max(a.y - ha, b.y - hb))
    inter = ix * iy
    union = a.size ** 2 + b.size ** 2 - inter
    return inter / union if union > 0 else 0.0


def dedup_iou(keypoints, iou_thresh: float = 0.9) -> list:
    """Greedy first-come filter on square support boxes (side = size).

    A keypoint is dropped when its IoU with any already kept keypoint exceeds
    ``iou_thresh``.
    """
    kept = []
    if not keypoints:
        return kept
    x0 = np.empty(len(keypoints))
    x1 = np.empty_like(x0)
    y0 = np.empty_like(x0)
    y1 = np.empty_like(x0)
    area = np.empty_like(x0)
    n = 0
    for kp in keypoints:
        h = kp.size / 2
        if n:
            ix = np.clip(np.minimum(x1[:n], kp.x + h) - np.maximum(x0[:n], kp.x - h), 0, None)
            iy = np.clip(np.minimum(y1[:n], kp.y + h) - np.maximum(y0[:n], kp.y - h), 0, None)
            inter = ix * iy
            iou = inter / (area[:n] + kp.size ** 2 - inter)
            if (iou > iou_thresh).any():
                continue
        x0[n], x1[n], y0[n], y1[n], area[n] = kp.x - h, kp.x + h, kp.y - h, kp.y + h, kp.size ** 2
        n += 1
        kept.append(kp)
    return kept


DETECTORS = {
    "fast": detect_fast,
    "dog": detect_dog,
    "hessian": detect_hessian,
    "orb": detect_orb,
}


def detect(name: str, grid, **params) -> list:
    try:
        fn = DETECTORS[name]
    except KeyError:
        raise InputError(f"unknown detector {name!r}; choose from {sorted(DETECTORS)} or 'dense'") from None
    return fn(grid, **params)
