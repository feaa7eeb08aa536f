"""Random-forest regression with multi-output CART trees.

Trees are grown depth first with an exact split search: every feature's
node samples are kept in sorted order (a stable partition of the root
argsort), so each candidate threshold between consecutive distinct values is
scored with cumulative sums.  The criterion is the squared error summed over
all outputs.
"""

from __future__ import annotations

import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import FormatError, InputError

FRF_MAGIC = b"FRF1"
LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: float = 1.0
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    bootstrap: bool = True
    max_depth: int | None = None

    def validate(self) -> "ForestParams":
        if self.n_trees < 1:
            raise InputError("n_trees must be at least 1")
        if not 0.0 < self.max_features <= 1.0:
            raise InputError("max_features must be a fraction in (0, 1]")
        if self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise InputError("min_samples_split must be >= 2 and min_samples_leaf >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise InputError("max_depth must be non-negative")
        return self


@dataclass(frozen=True)
class RegressionTree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_outputs)

    def __post_init__(self):
        for name in ("feature", "threshold", "left", "right", "value"):
            a = np.array(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature == LEAF).sum())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of X."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] != LEAF
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def __eq__(self, other):
        if not isinstance(other, RegressionTree):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("feature", "threshold", "left", "right", "value"))

    __hash__ = None


@dataclass(frozen=True)
class Forest:
    trees: tuple
    params: ForestParams
    seed: int
    n_features: int
    n_outputs: int = 2
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)


# ---------------------------------------------------------------------------
# tree growing

def _seq_sum(rows) -> np.ndarray:
    """Row sum accumulated strictly in order (matches the compiled grower)."""
    return np.cumsum(rows, axis=0)[-1]


def _best_split(Xs, Ys, total, min_leaf):
    """Best (feature row, position) over presorted blocks.

    ``Xs`` is (f, m) sorted feature values, ``Ys`` is (f, m, o) targets in the
    same order and ``total`` the node's target sum.  Returns ``(score, row, pos)`` where the split puts sorted
    positions ``< pos`` left, and ``score`` is ``sum_o SL^2/nL + SR^2/nR``
    (larger is better), or ``None`` when no valid split exists.
    """
    f, m = Xs.shape
    csum = np.cumsum(Ys, axis=1)  # (f, m, o)
    total = np.asarray(total)[None, None, :]
    n_left = np.arange(1, m, dtype=np.float64)
    left = csum[:, :-1, :]
    right = total - left
    score = (left ** 2).sum(-1) / n_left + (right ** 2).sum(-1) / (m - n_left)  # (f, m-1)
    valid = Xs[:, 1:] > Xs[:, :-1]
    if min_leaf > 1:
        pos_ok = (n_left >= min_leaf) & (m - n_left >= min_leaf)
        valid &= pos_ok[None, :]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    flat = int(np.argmax(score))  # first maximum: lowest feature, then lowest position
    row, pos = divmod(flat, m - 1)
    return float(score[row, pos]), row, pos + 1


def _grow(X, Y, order, params: ForestParams, rng) -> RegressionTree:
    """Grow one tree on the rows of X/Y; ``order`` is the (d, n) per-feature argsort."""
    n, d = X.shape
    n_out = Y.shape[1]
    n_try = max(1, int(round(params.max_features * d))) if params.max_features < 1.0 else d
    XT = X.T
    feature, threshold, left, right, value = [], [], [], [], []
    goes_left = np.zeros(n, dtype=bool)

    def new_node(val):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(val)
        return len(feature) - 1

    root = new_node(_seq_sum(Y) / n)
    stack = [(root, order, 0)]
    while stack:
        node, S, depth = stack.pop()
        m = S.shape[1]
        idx = S[0]
        Yn = Y[idx]
        if m < params.min_samples_split or m < 2 * params.min_samples_leaf:
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if np.all(Yn == Yn[0]):
            continue
        feats = np.arange(d) if n_try == d else np.sort(rng.choice(d, n_try, replace=False))
        Sf = S if n_try == d else S[feats]
        Xs = np.take_along_axis(XT[feats], Sf, axis=1)
        sum_y = _seq_sum(Yn)
        found = _best_split(Xs, Y[Sf], sum_y, params.min_samples_leaf)
        if found is None:
            continue
        score, row, pos = found
        parent = float((sum_y ** 2).sum() / m)
        sumsq = float(_seq_sum((Yn ** 2).ravel()))
        # child SSE = sumsq - score, parent SSE = sumsq - parent; require a strict decrease
        if score - parent <= 1e-12 * max(sumsq, 1e-300):
            continue
        j = int(feats[row])
        lo, hi = Xs[row, pos - 1], Xs[row, pos]
        thr = lo + (hi - lo) / 2.0
        if not thr < hi:  # midpoint rounded onto the upper value
            thr = lo
        goes_left[idx] = XT[j, idx] <= thr
        mask = goes_left[S]
        n_left = int(mask[0].sum())
        S_left = S[mask].reshape(d, n_left)
        S_right = S[~mask].reshape(d, m - n_left)
        goes_left[idx] = False
        lnode = new_node(_seq_sum(Y[S_left[0]]) / n_left)
        rnode = new_node(_seq_sum(Y[S_right[0]]) / (m - n_left))
        feature[node], threshold[node] = j, float(thr)
        left[node], right[node] = lnode, rnode
        stack.append((rnode, S_right, depth + 1))
        stack.append((lnode, S_left, depth + 1))

    return RegressionTree(np.asarray(feature, np.int32), np.asarray(threshold, np.float64),
                          np.asarray(left, np.int32), np.asarray(right, np.int32),
                          np.asarray(value, np.float64).reshape(-1, n_out))


@njit(cache=True)
def _grow_kernel(X, Y, S, min_split, min_leaf, max_depth):  # pragma: no cover - compiled
    """Compiled grower for the all-features case; same node order as ``_grow``.

    ``S`` (d, n) holds each feature's sorted sample order and is partitioned
    in place: a node owns columns ``[start, end)`` of every row.
    """
    n, d = X.shape
    n_out = Y.shape[1]
    cap = 2 * n
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    value = np.zeros((cap, n_out))
    goes_left = np.zeros(n, np.bool_)
    buf = np.empty(n, S.dtype)
    lsum = np.empty(n_out)
    tot = np.empty(n_out)

    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    for o in range(n_out):
        acc = 0.0
        for i in range(n):
            acc += Y[i, o]
        value[0, o] = acc / n
    n_nodes = 1
    top = 0
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, n, 0
    top = 1
    while top > 0:
        top -= 1
        node, s, e, depth = st_node[top], st_start[top], st_end[top], st_depth[top]
        m = e - s
        if m < min_split or m < 2 * min_leaf:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        pure = True
        first = S[0, s]
        for i in range(s + 1, e):
            r = S[0, i]
            for o in range(n_out):
                if Y[r, o] != Y[first, o]:
                    pure = False
            if not pure:
                break
        if pure:
            continue
        sumsq = 0.0
        for o in range(n_out):
            tot[o] = 0.0
        for i in range(s, e):
            r = S[0, i]
            for o in range(n_out):
                tot[o] += Y[r, o]
                sumsq += Y[r, o] * Y[r, o]
        best = -np.inf
        best_j = -1
        best_p = -1
        for j in range(d):
            for o in range(n_out):
                lsum[o] = 0.0
            for i in range(s, e - 1):
                r = S[j, i]
                for o in range(n_out):
                    lsum[o] += Y[r, o]
                nl = i - s + 1
                if nl < min_leaf or m - nl < min_leaf:
                    continue
                if not X[S[j, i + 1], j] > X[r, j]:
                    continue
                sc = 0.0
                scr = 0.0
                for o in range(n_out):
                    sc += lsum[o] * lsum[o]
                    rr = tot[o] - lsum[o]
                    scr += rr * rr
                sc = sc / nl + scr / (m - nl)
                if sc > best:
                    best = sc
                    best_j = j
                    best_p = i + 1
        if best_j < 0:
            continue
        parent = 0.0
        for o in range(n_out):
            parent += tot[o] * tot[o]
        parent /= m
        if best - parent <= 1e-12 * max(sumsq, 1e-300):
            continue
        lo = X[S[best_j, best_p - 1], best_j]
        hi = X[S[best_j, best_p], best_j]
        thr = lo + (hi - lo) / 2.0
        if not thr < hi:
            thr = lo
        for i in range(s, e):
            r = S[best_j, i]
            goes_left[r] = X[r, best_j] <= thr
        n_left = 0
        for j in range(d):
            a = 0
            b = 0
            for i in range(s, e):
                r = S[j, i]
                if goes_left[r]:
                    S[j, s + a] = r
                    a += 1
                else:
                    buf[b] = r
                    b += 1
            for i in range(b):
                S[j, s + a + i] = buf[i]
            n_left = a
        for i in range(s, e):
            goes_left[S[0, i]] = False
        ln, rn = n_nodes, n_nodes + 1
        n_nodes += 2
        for o in range(n_out):
            acc = 0.0
            for i in range(s, s + n_left):
                acc += Y[S[0, i], o]
            value[ln, o] = acc / n_left
            acc = 0.0
            for i in range(s + n_left, e):
                acc += Y[S[0, i], o]
            value[rn, o] = acc / (m - n_left)
        feature[node] = best_j
        threshold[node] = thr
        left[node] = ln
        right[node] = rn
        st_node[top], st_start[top], st_end[top], st_depth[top] = rn, s + n_left, e, depth + 1
        top += 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = ln, s, s + n_left, depth + 1
        top += 1
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


def _grow_fast(X, Y, order, params: ForestParams) -> RegressionTree:
    arrays = _grow_kernel(np.ascontiguousarray(X), np.ascontiguousarray(Y), order.copy(),
                          params.min_samples_split, params.min_samples_leaf,
                          -1 if params.max_depth is None else params.max_depth)
    return RegressionTree(*(a.copy() for a in arrays))


def _build(X, Y, params: ForestParams, rng) -> RegressionTree:
    order = np.argsort(X, axis=0, kind="stable").T.copy()
    if params.max_features < 1.0:
        return _grow(X, Y, order, params, rng)
    return _grow_fast(X, Y, order, params)


def fit_tree(X, Y, params: ForestParams | None = None, rng=None) -> RegressionTree:
    """Single CART tree on all rows (no bootstrap)."""
    params = (params or ForestParams()).validate()
    X, Y = _check_xy(X, Y)
    return _build(X, Y, params, rng or np.random.default_rng(0))


def _fit_one(args):
    X, Y, params, seq = args
    rng = np.random.default_rng(seq)
    if params.bootstrap:
        rows = rng.integers(0, len(X), len(X))
        Xb, Yb = X[rows], Y[rows]
    else:
        Xb, Yb = X, Y
    return _build(Xb, Yb, params, rng)


def _check_xy(X, Y):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or Y.ndim != 2 or len(X) != len(Y):
        raise InputError(f"X {X.shape} and Y {Y.shape} do not describe the same rows")
    if len(X) < 2:
        raise InputError("fitting needs at least 2 examples")
    if not (np.isfinite(X).all() and np.isfinite(Y).all()):
        raise InputError("X and Y must be finite")
    return X, Y


def fit(X, Y, params: ForestParams | None = None, seed: int = 0, jobs: int = 1) -> Forest:
    """Fit a forest; tree ``i`` draws from the ``i``-th child of ``SeedSequence(seed)``."""
    params = (params or ForestParams()).validate()
    X, Y = _check_xy(X, Y)
    seqs = np.random.SeedSequence(seed).spawn(params.n_trees)
    work = [(X, Y, params, s) for s in seqs]
    if jobs > 1 and params.n_trees > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trees = list(pool.map(_fit_one, work))
    else:
        trees = [_fit_one(w) for w in work]
    return Forest(tuple(trees), params, int(seed), X.shape[1], Y.shape[1])


def predict(forest: Forest, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise InputError(f"expected {forest.n_features} features, got shape {X.shape}")
    out = np.zeros((len(X), forest.n_outputs))
    for tree in forest.trees:
        out += tree.predict(X)
    return out / forest.n_trees


# ---------------------------------------------------------------------------
# FRF1 persistence

_HEAD = "<IIdIIBQiI"  # n_features, n_outputs, max_features, min_split, min_leaf, bootstrap, seed, max_depth, n_trees


def dumps(forest: Forest) -> bytes:
    p = forest.params
    parts = [FRF_MAGIC, struct.pack(_HEAD, forest.n_features, forest.n_outputs, p.max_features,
                                    p.min_samples_split, p.min_samples_leaf, int(p.bootstrap),
                                    forest.seed % 2 ** 64, -1 if p.max_depth is None else p.max_depth,
                                    forest.n_trees)]
    for t in forest.trees:
        parts.append(struct.pack("<I", t.n_nodes))
        parts.append(t.feature.astype("<i4").tobytes())
        parts.append(t.threshold.astype("<f8").tobytes())
        parts.append(t.left.astype("<i4").tobytes())
        parts.append(t.right.astype("<i4").tobytes())
        parts.append(t.value.astype("<f8").tobytes())
    return b"".join(parts)


def loads(buf: bytes) -> Forest:
    if buf[:4] != FRF_MAGIC:
        raise FormatError(f"bad FRF magic {bytes(buf[:4])!r}")
    try:
        nf, no, mf, mss, msl, boot, seed, md, nt = struct.unpack_from(_HEAD, buf, 4)
        off = 4 + struct.calcsize(_HEAD)
        trees = []
        for _ in range(nt):
            (nn,) = struct.unpack_from("<I", buf, off)
            off += 4
            arrays = []
            for dt, count in (("<i4", nn), ("<f8", nn), ("<i4", nn), ("<i4", nn), ("<f8", nn * no)):
                a = np.frombuffer(buf, dtype=dt, count=count, offset=off)
                off += a.nbytes
                arrays.append(a)
            trees.append(RegressionTree(arrays[0].astype(np.int32), arrays[1].astype(np.float64),
                                        arrays[2].astype(np.int32), arrays[3].astype(np.int32),
                                        arrays[4].reshape(nn, no).astype(np.float64)))
    except (struct.error, ValueError) as exc:
        raise FormatError(f"truncated FRF data: {exc}") from exc
    if off != len(buf):
        raise FormatError("trailing bytes after FRF data")
    params = ForestParams(nt, mf, mss, msl, bool(boot), None if md < 0 else md)
    return Forest(tuple(trees), params, seed, nf, no)


def save(forest: Forest, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(forest))


def load(path) -> Forest:
    with open(path, "rb") as fh:
        return loads(fh.read())
