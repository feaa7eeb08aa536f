"""Bag-of-words global descriptors under the SD, MD and dense strategies.

SD (single dictionary): keypoints from every modality are merged, deduplicated
by box IoU, described on all five channels and concatenated; one dictionary.
MD (multiple dictionaries): each modality is detected, described and
histogrammed on its own dictionary; histograms are concatenated.
DE-SD / DE-MD: the same with a dense multi-scale grid in place of detection.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from . import descriptors as desc_mod
from .dictionary import Dictionary, assign_many
from .errors import ConfigError, FormatError
from .fields import CHANNELS, FlowField, normalize_field
from .keypoints import DENSE_SCALES, dedup_iou, dense_sample, detect

STRATEGIES = ("sd", "md", "de-sd", "de-md")

# detector/descriptor cells that produced results, and for which aggregation
# ('x' cells failed, '-' cells were never run)
TABLE_I = {
    ("dog", "sift"): {"md"},
    ("hessian", "surf"): {"sd", "md"},
    ("orb", "orb"): {"sd", "md"},
    ("fast", "sift"): {"sd", "md"},
    ("fast", "surf"): {"sd", "md"},
    ("fast", "orb"): {"sd", "md"},
    ("fast", "brisk"): {"sd"},
    ("dense", "sift"): {"sd", "md"},
    ("dense", "orb"): {"sd", "md"},
}
FAILED = {("dog", "sift", "sd"), ("fast", "brisk", "md")}
DETECTOR_NAMES = {"dog": "SIFT", "hessian": "SURF", "orb": "ORB", "fast": "AGAST", "dense": "dense"}


def check_combination(strategy: str, detector: str, descriptor: str) -> None:
    """Raise ConfigError unless the combination is one of the supported cells."""
    strategy = strategy.lower()
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    dense = strategy.startswith("de-")
    if dense and detector not in ("dense", None):
        raise ConfigError(f"strategy {strategy} uses dense sampling, not detector {detector!r}")
    if not dense and detector == "dense":
        raise ConfigError(f"detector 'dense' needs a de-* strategy, got {strategy}")
    det = "dense" if dense else detector
    mode = strategy.split("-")[-1]
    if descriptor not in desc_mod.LENGTHS:
        raise ConfigError(f"unknown descriptor {descriptor!r}")
    cell = TABLE_I.get((det, descriptor))
    name = f"detector {DETECTOR_NAMES.get(det, det)} x descriptor {descriptor.upper()}"
    if cell is None:
        raise ConfigError(f"{name}: combination not supported (table cell '-')")
    if mode not in cell:
        tag = "x" if (det, descriptor, mode) in FAILED else "-"
        raise ConfigError(f"{name} with {mode.upper()}: not supported (table cell '{tag}')")


@dataclass(frozen=True)
class GlobalDescriptor:
    values: np.ndarray
    layout: tuple  # per-block histogram sizes; one block for SD
    strategy: str
    counts: tuple  # keypoints histogrammed per block

    @property
    def empty(self) -> bool:
        return not any(self.counts)

    @property
    def empty_blocks(self) -> tuple:
        return tuple(c == 0 for c in self.counts)


@dataclass(frozen=True)
class LocalFeatures:
    """Raw local descriptors of one example, one array per histogram block."""

    blocks: tuple
    strategy: str
    n_keypoints: tuple


def _grids(field: FlowField, normalize: bool) -> np.ndarray:
    f = field.canonical()
    return normalize_field(f) if normalize else f.data.astype(np.float64)


def _keypoints(grid, detector, detector_params, scales):
    if detector == "dense":
        return dense_sample(grid.shape[1], grid.shape[0], scales)
    return detect(detector, grid, **(detector_params or {}))


def extract_local(field: FlowField, strategy: str, detector: str | None, descriptor: str,
                  detector_params: dict | None = None, iou_thresh: float = 0.9,
                  scales=DENSE_SCALES, normalize: bool = True) -> LocalFeatures:
    """Detect and describe one example; the expensive half of every encoder."""
    strategy = strategy.lower()
    check_combination(strategy, detector if not strategy.startswith("de-") else "dense", descriptor)
    det = "dense" if strategy.startswith("de-") else detector
    grids = _grids(field, normalize)
    if strategy.endswith("sd"):
        merged = []
        for m, g in enumerate(grids):
            merged.extend(kp.with_modality(m) for kp in _keypoints(g, det, detector_params, scales))
        kept = dedup_iou(merged, iou_thresh)
        arr, _ = desc_mod.compute_sd(descriptor, grids, kept)
        return LocalFeatures((arr,), strategy, (len(kept),))
    blocks, counts = [], []
    for m, g in enumerate(grids):
        kps = [kp.with_modality(m) for kp in _keypoints(g, det, detector_params, scales)]
        arr, _ = desc_mod.compute(descriptor, g, kps)
        blocks.append(arr)
        counts.append(len(kps))
    return LocalFeatures(tuple(blocks), strategy, tuple(counts))


def bow_histogram(labels, k: int) -> np.ndarray:
    return np.bincount(np.asarray(labels, dtype=np.int64), minlength=k).astype(np.float64)


def encode_local(local: LocalFeatures, dicts) -> GlobalDescriptor:
    """Assign local descriptors to their dictionaries and build the normalised histogram(s)."""
    if isinstance(dicts, Dictionary):
        dicts = [dicts]
    dicts = list(dicts)
    if len(dicts) != len(local.blocks):
        raise ConfigError(f"{len(local.blocks)} descriptor blocks but {len(dicts)} dictionaries")
    parts, counts = [], []
    for block, d in zip(local.blocks, dicts):
        if block.shape[1] != d.dim:
            raise ConfigError(f"descriptor length {block.shape[1]} does not match dictionary dim {d.dim}")
        hist = bow_histogram(assign_many(d, block), d.k) if len(block) else np.zeros(d.k)
        total = hist.sum()
        parts.append(hist / total if total > 0 else hist)
        counts.append(int(total))
    return GlobalDescriptor(np.concatenate(parts), tuple(d.k for d in dicts), local.strategy, tuple(counts))


def raw_histogram(local: LocalFeatures, dicts) -> np.ndarray:
    """Unnormalised counts, concatenated per block."""
    if isinstance(dicts, Dictionary):
        dicts = [dicts]
    return np.concatenate([bow_histogram(assign_many(d, b), d.k) if len(b) else np.zeros(d.k)
                           for b, d in zip(local.blocks, dicts)])


def encode_sd(field: FlowField, detector: str, descriptor: str, dictionary: Dictionary,
              detector_params: dict | None = None, iou_thresh: float = 0.9, normalize: bool = True) -> GlobalDescriptor:
    local = extract_local(field, "sd", detector, descriptor, detector_params, iou_thresh, normalize=normalize)
    return encode_local(local, [dictionary])


def encode_md(field: FlowField, detector: str, descriptor: str, dicts,
              detector_params: dict | None = None, normalize: bool = True) -> GlobalDescriptor:
    dicts = _per_modality(dicts)
    local = extract_local(field, "md", detector, descriptor, detector_params, normalize=normalize)
    return encode_local(local, dicts)


def encode_de(field: FlowField, descriptor: str, dicts, mode: str = "md",
              scales=DENSE_SCALES, iou_thresh: float = 0.9, normalize: bool = True) -> GlobalDescriptor:
    mode = mode.lower()
    if mode not in ("sd", "md"):
        raise ConfigError(f"dense mode must be 'sd' or 'md', got {mode!r}")
    if mode == "md":
        dicts = _per_modality(dicts)
    local = extract_local(field, f"de-{mode}", "dense", descriptor, None, iou_thresh, scales, normalize)
    return encode_local(local, dicts)


def _per_modality(dicts) -> list:
    if isinstance(dicts, dict):
        missing = [c for c in CHANNELS if c not in dicts]
        if missing:
            raise ConfigError(f"missing dictionaries for modalities {missing}")
        return [dicts[c] for c in CHANNELS]
    dicts = list(dicts)
    if len(dicts) != len(CHANNELS):
        raise ConfigError(f"MD needs {len(CHANNELS)} dictionaries, got {len(dicts)}")
    return dicts


# ---------------------------------------------------------------------------
# encoded dataset persistence

FGE_MAGIC = b"FGE1"


def dumps_encoded(ids, X) -> bytes:
    """FGE1: magic, u32 n, u32 dim, row-major little-endian f64, then (u16 len + UTF-8) ids."""
    X = np.asarray(X, dtype="<f8")
    ids = [str(i) for i in ids]
    if X.ndim != 2 or len(ids) != len(X):
        raise FormatError(f"{len(ids)} ids for encoded matrix of shape {X.shape}")
    parts = [FGE_MAGIC, struct.pack("<II", X.shape[0], X.shape[1]), np.ascontiguousarray(X).tobytes()]
    for i in ids:
        raw = i.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
    return b"".join(parts)


def loads_encoded(buf: bytes) -> tuple:
    if len(buf) < 12 or buf[:4] != FGE_MAGIC:
        raise FormatError(f"bad FGE magic {bytes(buf[:4])!r}")
    n, dim = struct.unpack_from("<II", buf, 4)
    end = 12 + n * dim * 8
    if len(buf) < end:
        raise FormatError("truncated FGE payload")
    X = np.frombuffer(buf, dtype="<f8", count=n * dim, offset=12).reshape(n, dim).astype(np.float64)
    ids, off = [], end
    for _ in range(n):
        if off + 2 > len(buf):
            raise FormatError("truncated FGE id table")
        (ln,) = struct.unpack_from("<H", buf, off)
        ids.append(buf[off + 2:off + 2 + ln].decode("utf-8"))
        off += 2 + ln
    if off != len(buf):
        raise FormatError("trailing bytes after FGE id table")
    return ids, X


def save_encoded(ids, X, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_encoded(ids, X))


def load_encoded(path) -> tuple:
    with open(path, "rb") as fh:
        return loads_encoded(fh.read())


def write_encoded_csv(ids, X, path) -> None:
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"h{j}" for j in range(X.shape[1])])
        for i, row in zip(ids, X):
            w.writerow([i] + [repr(float(v)) for v in row])
