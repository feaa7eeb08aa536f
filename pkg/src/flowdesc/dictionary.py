"""Visual dictionaries: snapped K-Means for real descriptors, K-Majority for bits.

Binary data is handled unpacked (one ``uint8`` 0/1 per bit); Hamming
distances are computed exactly through integer-valued matrix products.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import FormatError, InputError

log = logging.getLogger(__name__)

FDC_MAGIC = b"FDC1"
MAX_TRAIN = 200_000
MAX_ITER = 100


@dataclass(frozen=True)
class Dictionary:
    kind: str  # "real" | "binary"
    centers: np.ndarray
    seed: int = 0
    training_meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("real", "binary"):
            raise InputError(f"unknown dictionary kind {self.kind!r}")
        c = np.asarray(self.centers, dtype=np.uint8 if self.kind == "binary" else np.float32)
        if c.ndim != 2 or c.shape[0] < 1:
            raise InputError("a dictionary needs at least one center")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def metric(self) -> str:
        return "hamming" if self.kind == "binary" else "euclidean"

    def __eq__(self, other):
        if not isinstance(other, Dictionary):
            return NotImplemented
        return self.kind == other.kind and self.seed == other.seed and np.array_equal(self.centers, other.centers)

    __hash__ = None


# ---------------------------------------------------------------------------
# distances

def sq_euclidean(X, C) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def hamming(X, C) -> np.ndarray:
    Xf = np.asarray(X, dtype=np.float32)
    Cf = np.asarray(C, dtype=np.float32)
    d = Xf.sum(1)[:, None] + Cf.sum(1)[None, :] - 2.0 * (Xf @ Cf.T)
    return np.rint(d).astype(np.int64)


def _chunked_argmin(dist_fn, X, C, chunk: int = 16384) -> tuple:
    labels = np.empty(len(X), dtype=np.int64)
    best = np.empty(len(X), dtype=np.float64)
    for s in range(0, len(X), chunk):
        d = dist_fn(X[s:s + chunk], C)
        labels[s:s + chunk] = np.argmin(d, axis=1)
        best[s:s + chunk] = d[np.arange(len(d)), labels[s:s + chunk]]
    return labels, best


def _cluster_sums(labels, X, k) -> np.ndarray:
    onehot = sparse.csr_matrix((np.ones(len(labels)), (labels, np.arange(len(labels)))), shape=(k, len(labels)))
    return np.asarray(onehot @ X.astype(np.float64))


# ---------------------------------------------------------------------------
# training helpers

def _prepare(data, k: int, seed: int, max_train: int, binary: bool) -> tuple:
    X = np.asarray(data, dtype=np.uint8 if binary else np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or len(X) == 0:
        raise InputError("dictionary training data is empty")
    if k < 1:
        raise InputError("k must be at least 1")
    rng = np.random.default_rng(seed)
    n_total = len(X)
    if len(X) > max_train:
        X = X[np.sort(rng.choice(len(X), max_train, replace=False))]
    _, first = np.unique(X, axis=0, return_index=True)
    if k > len(first):
        raise InputError(f"k={k} exceeds the {len(first)} distinct training vectors")
    first = np.sort(first)
    init = first[rng.choice(len(first), k, replace=False)]
    return X, init, n_total


def kmeans_approx(data, k: int, seed: int = 0, max_iter: int = MAX_ITER, max_train: int = MAX_TRAIN) -> Dictionary:
    """Lloyd iterations whose centers are snapped to the nearest training vector.

    After each mean update every center is replaced by the training vector
    closest to its cluster mean; among equidistant vectors the one with the
    highest index wins, and a vector already claimed by an earlier center is
    skipped.  Stops when assignments repeat or after ``max_iter`` updates.
    The returned centers are members of the (possibly subsampled) data.
    """
    X, idx, n_total = _prepare(data, k, seed, max_train, binary=False)
    C = X[idx]
    prev = None
    history = []
    iterations = 0
    while True:
        labels, best = _chunked_argmin(sq_euclidean, X, C)
        history.append(float(best.sum()))
        if len(history) > 1 and history[-1] > history[-2] * (1 + 1e-12):
            log.info("kmeans_approx: snap step raised distortion %.6g -> %.6g", history[-2], history[-1])
        if prev is not None and np.array_equal(labels, prev):
            break
        if iterations >= max_iter:
            break
        prev = labels
        counts = np.bincount(labels, minlength=k)
        sums = _cluster_sums(labels, X, k)
        means = np.where(counts[:, None] > 0, sums / np.maximum(counts, 1)[:, None], C)
        idx = _snap(X, means, idx, counts)
        C = X[idx]
        iterations += 1
    meta = {"n_descriptors": n_total, "n_train": len(X), "iterations": iterations,
            "seed": seed, "distortion": history}
    return Dictionary("real", X[idx].astype(np.float32), seed, meta)


def _snap(X, means, current, counts) -> np.ndarray:
    d = sq_euclidean(X, means)  # (n, k)
    n = len(X)
    out = current.copy()
    taken = set()
    for j in range(means.shape[0]):
        if counts[j] == 0:
            taken.add(int(out[j]))
            continue
        col = d[:, j]
        cand = int(np.nonzero(col == col.min())[0][-1])
        if cand not in taken:
            out[j] = cand
            taken.add(cand)
            continue
        # highest index among ties: stable sort on the reversed column
        order = n - 1 - np.argsort(col[::-1], kind="stable")
        for cand in order:
            if int(cand) not in taken:
                out[j] = cand
                taken.add(int(cand))
                break
    return out


def kmajority(data, k: int, seed: int = 0, max_iter: int = MAX_ITER, max_train: int = MAX_TRAIN) -> Dictionary:
    """K-Majority: Hamming assignment, bitwise-majority update.

    Exact majority ties keep the center's current bit; an empty cluster is
    re-seeded with the vector farthest from its assigned center.
    """
    X, idx, n_total = _prepare(data, k, seed, max_train, binary=True)
    C = X[idx].copy()
    prev = None
    history = []
    iterations = 0
    while True:
        labels, best = _chunked_argmin(hamming, X, C)
        history.append(float(best.sum()))
        if prev is not None and np.array_equal(labels, prev):
            break
        if iterations >= max_iter:
            break
        prev = labels
        counts = np.bincount(labels, minlength=k)
        twice = 2 * np.rint(_cluster_sums(labels, X, k)).astype(np.int64)
        C = np.where(twice > counts[:, None], 1, np.where(twice < counts[:, None], 0, C)).astype(np.uint8)
        empty = np.nonzero(counts == 0)[0]
        if len(empty):
            far = np.argsort(-best, kind="stable")
            used = 0
            for j in empty:
                C[j] = X[far[used]]
                used += 1
        iterations += 1
    meta = {"n_descriptors": n_total, "n_train": len(X), "iterations": iterations,
            "seed": seed, "distortion": history}
    return Dictionary("binary", C, seed, meta)


def majority_center(members, current=None) -> np.ndarray:
    """Bitwise majority of ``members``; exact ties take ``current`` (or 0)."""
    M = np.asarray(members, dtype=np.int64)
    twice = 2 * M.sum(0)
    cur = np.zeros(M.shape[1], np.uint8) if current is None else np.asarray(current, np.uint8)
    return np.where(twice > len(M), 1, np.where(twice < len(M), 0, cur)).astype(np.uint8)


def learn(data, k: int, binary: bool, seed: int = 0, **kw) -> Dictionary:
    return kmajority(data, k, seed, **kw) if binary else kmeans_approx(data, k, seed, **kw)


# ---------------------------------------------------------------------------
# assignment

def assign_many(dictionary: Dictionary, X) -> np.ndarray:
    """Nearest-center index for every row of ``X`` (ties -> lowest index)."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != dictionary.dim:
        raise InputError(f"descriptor length {X.shape[1]} does not match dictionary dim {dictionary.dim}")
    if len(X) == 0:
        return np.zeros(0, dtype=np.int64)
    fn = hamming if dictionary.kind == "binary" else sq_euclidean
    return _chunked_argmin(fn, X, dictionary.centers)[0]


def assign(dictionary: Dictionary, desc) -> int:
    d = np.asarray(desc).ravel()
    return int(assign_many(dictionary, d[None, :])[0])


# ---------------------------------------------------------------------------
# FDC1 persistence

def dumps(dictionary: Dictionary) -> bytes:
    kind = 1 if dictionary.kind == "binary" else 0
    head = FDC_MAGIC + struct.pack("<BII", kind, dictionary.k, dictionary.dim)
    if kind:
        payload = np.packbits(dictionary.centers, axis=1).tobytes()
    else:
        payload = np.ascontiguousarray(dictionary.centers, dtype="<f4").tobytes()
    return head + payload + struct.pack("<Q", int(dictionary.seed) % 2 ** 64)


def loads(buf: bytes) -> Dictionary:
    if len(buf) < 13 or buf[:4] != FDC_MAGIC:
        raise FormatError(f"bad FDC magic {bytes(buf[:4])!r}")
    kind, k, dim = struct.unpack_from("<BII", buf, 4)
    if kind not in (0, 1):
        raise FormatError(f"unknown dictionary kind byte {kind}")
    row = (dim + 7) // 8 if kind else dim * 4
    if len(buf) != 13 + k * row + 8:
        raise FormatError("FDC payload length does not match header")
    raw = buf[13:13 + k * row]
    if kind:
        packed = np.frombuffer(raw, dtype=np.uint8).reshape(k, row)
        centers = np.unpackbits(packed, axis=1)[:, :dim]
    else:
        centers = np.frombuffer(raw, dtype="<f4").reshape(k, dim)
    (seed,) = struct.unpack_from("<Q", buf, 13 + k * row)
    return Dictionary("binary" if kind else "real", centers, seed)


def save(dictionary: Dictionary, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(dictionary))


def load(path) -> Dictionary:
    with open(path, "rb") as fh:
        return loads(fh.read())
