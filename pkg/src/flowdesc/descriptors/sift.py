"""128-d gradient-orientation histograms (4x4 cells x 8 bins)."""

from __future__ import annotations

import numpy as np

from ..keypoints import as_arrays
from ._sampling import SmoothCache, as_grid, bilinear, check_inside, gaussian

N_SAMPLES = 16
N_CELLS = 4
N_BINS = 8
LENGTH = N_CELLS * N_CELLS * N_BINS
MAG_CLAMP = 0.2
DEGENERATE_NORM = 1e-12

# sample offsets in window units, centred on the keypoint
_OFFSETS = np.arange(N_SAMPLES) - (N_SAMPLES - 1) / 2.0


def _gradients(img):
    gx = np.empty_like(img)
    gy = np.empty_like(img)
    gx[:, 1:-1] = 0.5 * (img[:, 2:] - img[:, :-2])
    gx[:, 0] = img[:, 1] - img[:, 0] if img.shape[1] > 1 else 0.0
    gx[:, -1] = img[:, -1] - img[:, -2] if img.shape[1] > 1 else 0.0
    gy[1:-1] = 0.5 * (img[2:] - img[:-2])
    gy[0] = img[1] - img[0] if img.shape[0] > 1 else 0.0
    gy[-1] = img[-1] - img[-2] if img.shape[0] > 1 else 0.0
    return gx, gy


def _smoothed_gradients(img, sigma):
    return _gradients(gaussian(img, sigma))


def sift_descriptors(grid, keypoints) -> tuple:
    """Batch SIFT: returns ``(values (N, 128) float32, degenerate (N,) bool)``.

    The window is a 16x16 sample lattice spanning ``kp.size`` pixels, rotated
    by ``kp.orientation``.  Gradients come from the grid blurred by half the
    sample spacing (no blur below one-pixel spacing).  Samples are Gaussian
    weighted (sigma = half the window) and spread trilinearly over the 4x4x8
    histogram.
    """
    g = as_grid(grid)
    xy, size, ori = as_arrays(keypoints)
    check_inside(g, xy, size)
    n = len(xy)
    out = np.zeros((n, LENGTH))
    if n == 0:
        return out.astype(np.float32), np.zeros(0, bool)

    spacing = size / N_SAMPLES
    blur = np.where(spacing > 1.0, 0.5 * spacing, 0.0)
    grads = SmoothCache(g, _smoothed_gradients, quantum=0.05)

    u, v = np.meshgrid(_OFFSETS, _OFFSETS)  # u along kp x-axis, v along kp y-axis
    u, v = u.ravel(), v.ravel()
    weight = np.exp(-(u ** 2 + v ** 2) / (2 * (N_SAMPLES / 2) ** 2))
    rbin = (v + N_SAMPLES / 2) / (N_SAMPLES / N_CELLS) - 0.5
    cbin = (u + N_SAMPLES / 2) / (N_SAMPLES / N_CELLS) - 0.5

    for key in np.unique(np.round(blur / 0.05).astype(int)):
        sel = np.nonzero(np.round(blur / 0.05).astype(int) == key)[0]
        gx, gy = grads(key * 0.05)
        c, s = np.cos(ori[sel])[:, None], np.sin(ori[sel])[:, None]
        sp = spacing[sel][:, None]
        px = xy[sel, 0][:, None] + sp * (u * c - v * s)
        py = xy[sel, 1][:, None] + sp * (u * s + v * c)
        dx = bilinear(gx, px, py)
        dy = bilinear(gy, px, py)
        # rotate gradients into the keypoint frame
        rx = dx * c + dy * s
        ry = -dx * s + dy * c
        mag = np.hypot(rx, ry) * weight
        obin = np.mod(np.arctan2(ry, rx), 2 * np.pi) * (N_BINS / (2 * np.pi))
        out[sel] = _trilinear(mag, np.broadcast_to(rbin, mag.shape), np.broadcast_to(cbin, mag.shape), obin)

    norm = np.linalg.norm(out, axis=1)
    degenerate = norm <= DEGENERATE_NORM
    good = ~degenerate
    out[good] /= norm[good, None]
    np.minimum(out, MAG_CLAMP, out=out)
    norm = np.linalg.norm(out, axis=1)
    out[good] /= norm[good, None]
    out[degenerate] = 0.0
    return out.astype(np.float32), degenerate


def _trilinear(mag, rbin, cbin, obin):
    n = mag.shape[0]
    r0 = np.floor(rbin).astype(np.intp)
    c0 = np.floor(cbin).astype(np.intp)
    o0 = np.floor(obin).astype(np.intp)
    dr, dc, do = rbin - r0, cbin - c0, obin - o0
    hist = np.zeros(n * N_CELLS * N_CELLS * N_BINS)
    base = (np.arange(n) * N_CELLS * N_CELLS * N_BINS)[:, None]
    for ir, wr in ((0, 1 - dr), (1, dr)):
        rr = r0 + ir
        okr = (rr >= 0) & (rr < N_CELLS)
        for ic, wc in ((0, 1 - dc), (1, dc)):
            cc = c0 + ic
            ok = okr & (cc >= 0) & (cc < N_CELLS)
            for io, wo in ((0, 1 - do), (1, do)):
                oo = (o0 + io) % N_BINS
                idx = base + (rr * N_CELLS + cc) * N_BINS + oo
                w = mag * wr * wc * wo
                hist += np.bincount(idx[ok], weights=w[ok], minlength=hist.size)
    return hist.reshape(n, LENGTH)
