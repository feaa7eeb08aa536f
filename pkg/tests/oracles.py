"""Slow, literal reference implementations used as test oracles.

Each one is written from the definition with explicit loops and shares no
code with the package.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

CIRCLE16 = [(0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
            (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3)]


def segment_test_score(g, y, x, t):
    """0 if (y, x) fails the 9-of-16 test, else the |diff| sum over its maximal qualifying arc."""
    p = g[y, x]
    ring = [g[y + dy, x + dx] for dx, dy in CIRCLE16]
    best = 0.0
    for sign in (1, -1):
        ok = [sign * (v - p) > t for v in ring]
        if all(ok):
            best = max(best, sum(abs(v - p) for v in ring))
            continue
        # any start whose 9-arc qualifies; then extend it to the maximal run
        for s in range(16):
            if all(ok[(s + i) % 16] for i in range(9)):
                a = s
                while ok[(a - 1) % 16]:
                    a -= 1
                b = s + 8
                while ok[(b + 1) % 16]:
                    b += 1
                best = max(best, sum(abs(ring[i % 16] - p) for i in range(a, b + 1)))
    return best


def fast_oracle(grid, t, nms=True):
    """Set of (x, y) corners by brute force, with 3x3 non-max suppression."""
    g = np.asarray(grid, dtype=np.float64)
    h, w = g.shape
    score = np.zeros_like(g)
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            score[y, x] = segment_test_score(g, y, x, t)
    out = set()
    for y in range(h):
        for x in range(w):
            if score[y, x] <= 0:
                continue
            if nms:
                neigh = [score[yy, xx] for yy in range(y - 1, y + 2) for xx in range(x - 1, x + 2)
                         if 0 <= yy < h and 0 <= xx < w]
                if score[y, x] < max(neigh):
                    continue
            out.add((x, y))
    return out


def brute_majority_centers(members):
    """All 8-bit centers minimising summed Hamming distance to ``members``."""
    m = np.asarray(members, dtype=np.int64)
    nbits = m.shape[1]
    best, arg = None, []
    for cand in itertools.product((0, 1), repeat=nbits):
        c = np.array(cand)
        cost = int(np.abs(m - c).sum())
        if best is None or cost < best:
            best, arg = cost, [c]
        elif cost == best:
            arg.append(c)
    return best, arg


def dense_count(width, height, scales):
    return sum((width // s) * (height // s) for s in scales)


def naive_box_sum(g, r0, c0, r1, c1):
    total = 0.0
    for r in range(r0, r1):
        for c in range(c0, c1):
            total += g[r, c]
    return total


def square_iou(a, b):
    """IoU of axis-aligned squares given as (x, y, side)."""
    ax0, ax1 = a[0] - a[2] / 2, a[0] + a[2] / 2
    ay0, ay1 = a[1] - a[2] / 2, a[1] + a[2] / 2
    bx0, bx1 = b[0] - b[2] / 2, b[0] + b[2] / 2
    by0, by1 = b[1] - b[2] / 2, b[1] + b[2] / 2
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    return inter / (a[2] ** 2 + b[2] ** 2 - inter)


def cylinder_flow(U, a, gamma, x, y):
    """Closed-form velocity of uniform flow past a cylinder with circulation."""
    r = math.hypot(x, y)
    th = math.atan2(y, x)
    ur = U * (1 - a * a / (r * r)) * math.cos(th)
    ut = -U * (1 + a * a / (r * r)) * math.sin(th) + gamma / (2 * math.pi * r)
    return ur * math.cos(th) - ut * math.sin(th), ur * math.sin(th) + ut * math.cos(th)


def control_volume_lift(vel, radius, n=1440, rho=1.0, U=None):
    """Lift on the body from momentum balance over a circle of ``radius``.

    Force on the fluid inside = -(closed integral of p n + rho u (u.n)); the
    lift on the body is the y-component, with pressure from Bernoulli
    (p_inf = 0).  ``vel(x, y) -> (u, v)``.  Trapezoidal rule on ``n`` points.
    """
    total = 0.0
    ds = 2 * math.pi * radius / n
    for i in range(n):
        th = 2 * math.pi * i / n
        nx, ny = math.cos(th), math.sin(th)
        u, v = vel(radius * nx, radius * ny)
        p = 0.5 * rho * (U * U - u * u - v * v)
        un = u * nx + v * ny
        total += -(p * ny + rho * v * un) * ds
    return total


def lookup_predict(X_train, Y_train, X):
    """Exact-match lookup: target of the identical training row."""
    table = {tuple(row): y for row, y in zip(np.asarray(X_train).tolist(), np.asarray(Y_train))}
    return np.array([table[tuple(row)] for row in np.asarray(X).tolist()])


def r2_by_definition(pred, truth):
    truth = list(map(float, truth))
    pred = list(map(float, pred))
    mean = sum(truth) / len(truth)
    ss_res = sum((p - t) ** 2 for p, t in zip(pred, truth))
    ss_tot = sum((t - mean) ** 2 for t in truth)
    return 1 - ss_res / ss_tot
