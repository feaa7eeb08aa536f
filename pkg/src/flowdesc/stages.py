"""Pipeline stages shared by the harness and the CLI.

extract (fields -> local descriptors) -> dictionaries -> encode (global
descriptors) -> forest.  Extraction dominates the cost and is independent of
every seed, so sweeps reuse it across dictionary sizes and seeds.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import descriptors as desc_mod
from . import forest as forest_mod
from .dictionary import MAX_TRAIN, Dictionary, learn
from .encoding import LocalFeatures, check_combination, encode_local, extract_local
from .errors import ConfigError, DataError
from .fields import CHANNELS, SampleRecord, crop_window
from .keypoints import DENSE_SCALES

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Experiment:
    """Everything that determines one regression result besides the data."""

    strategy: str = "de-md"
    detector: str | None = None
    descriptor: str = "sift"
    k: object = 64  # int, or one size per modality for MD
    detector_params: tuple = ()  # sorted (name, value) pairs
    iou_thresh: float = 0.9
    scales: tuple = DENSE_SCALES
    crop: tuple | None = None  # (x0, y0, w, h)
    dict_seed: int = 0
    max_train: int = MAX_TRAIN
    max_iter: int = 100
    forest: forest_mod.ForestParams = field(default_factory=forest_mod.ForestParams)
    forest_seed: int = 0

    def __post_init__(self):
        strategy = self.strategy.lower()
        object.__setattr__(self, "strategy", strategy)
        det = "dense" if strategy.startswith("de-") else self.detector
        object.__setattr__(self, "detector", det)
        check_combination(strategy, det, self.descriptor)
        ks = self.ks
        if any(int(k) < 1 for k in ks):
            raise ConfigError(f"dictionary sizes must be positive, got {ks}")

    @property
    def mode(self) -> str:
        return self.strategy.split("-")[-1]

    @property
    def ks(self) -> tuple:
        if isinstance(self.k, (tuple, list)):
            if self.mode == "sd":
                raise ConfigError("SD uses one dictionary size, not one per modality")
            if len(self.k) != len(CHANNELS):
                raise ConfigError(f"need {len(CHANNELS)} per-modality sizes, got {len(self.k)}")
            return tuple(int(k) for k in self.k)
        return (int(self.k),) if self.mode == "sd" else (int(self.k),) * len(CHANNELS)

    def extraction_key(self) -> tuple:
        return (self.strategy, self.detector, self.descriptor, self.detector_params,
                self.iou_thresh, tuple(self.scales), self.crop)


def _extract_one(args) -> LocalFeatures:
    record, exp = args
    try:
        fld = record.load()
    except (OSError, DataError) as exc:
        raise DataError(f"extract: cannot load example {record.id!r}: {exc}") from exc
    if exp.crop is not None:
        fld = crop_window(fld, exp.crop)
    return extract_local(fld, exp.strategy, exp.detector, exp.descriptor, dict(exp.detector_params),
                         exp.iou_thresh, exp.scales)


def extract_dataset(records, exp: Experiment, jobs: int = 1) -> list:
    """Local descriptors for every record, in record order."""
    work = [(r, exp) for r in records]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_extract_one, work, chunksize=max(1, len(work) // (8 * jobs))))
    return [_extract_one(w) for w in work]


def save_locals(path, ids, locals_) -> None:
    """Store extracted local descriptors (per block: stacked rows plus per-example counts)."""
    arrays = {"ids": np.array([str(i) for i in ids]), "n_blocks": np.array(len(locals_[0].blocks) if locals_ else 0),
              "strategy": np.array(locals_[0].strategy if locals_ else "")}
    for b in range(int(arrays["n_blocks"])):
        arrays[f"data{b}"] = np.concatenate([lf.blocks[b] for lf in locals_], axis=0)
        arrays[f"count{b}"] = np.array([len(lf.blocks[b]) for lf in locals_], dtype=np.int64)
        arrays[f"kps{b}"] = np.array([lf.n_keypoints[b] for lf in locals_], dtype=np.int64)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_locals(path) -> tuple:
    with np.load(path, allow_pickle=False) as z:
        ids = [str(i) for i in z["ids"]]
        nb = int(z["n_blocks"])
        strategy = str(z["strategy"])
        per_block = []
        for b in range(nb):
            counts = z[f"count{b}"]
            per_block.append((np.split(z[f"data{b}"], np.cumsum(counts)[:-1]), z[f"kps{b}"]))
    locals_ = [LocalFeatures(tuple(pb[0][i] for pb in per_block), strategy,
                             tuple(int(pb[1][i]) for pb in per_block)) for i in range(len(ids))]
    return ids, locals_


def block_seed(seed: int, block: int) -> int:
    return int(np.random.SeedSequence([seed, block]).generate_state(1)[0])


def build_dictionaries(locals_, exp: Experiment) -> list:
    """One dictionary per histogram block, trained on the pooled training descriptors."""
    binary = desc_mod.is_binary(exp.descriptor)
    out = []
    for b, k in enumerate(exp.ks):
        data = np.concatenate([lf.blocks[b] for lf in locals_], axis=0)
        if len(data) == 0:
            raise DataError(f"no training descriptors for dictionary block {b}")
        d = learn(data, k, binary, seed=block_seed(exp.dict_seed, b), max_iter=exp.max_iter,
                  max_train=exp.max_train)
        log.info("dictionary %d: k=%d from %d descriptors, %d iterations", b, k, len(data),
                 d.training_meta.get("iterations", -1))
        out.append(d)
    return out


def encode_dataset(locals_, dicts) -> tuple:
    """``(X, empty)``: global descriptor rows and per-example zero-keypoint flags."""
    encs = [encode_local(lf, dicts) for lf in locals_]
    if not encs:
        return np.zeros((0, sum(d.k for d in dicts))), np.zeros(0, bool)
    return np.stack([e.values for e in encs]), np.array([e.empty for e in encs])


def targets(records) -> np.ndarray:
    return np.array([[r.drag, r.lift] for r in records], dtype=np.float64)


@dataclass(frozen=True)
class CellResult:
    dictionaries: list
    forest: forest_mod.Forest
    X_train: np.ndarray
    X_test: np.ndarray
    pred: np.ndarray
    test_empty: np.ndarray


def run_cell(exp: Experiment, train_locals, Y_train, test_locals, jobs: int = 1) -> CellResult:
    """Dictionaries, encoding, forest fit and test prediction for extracted data."""
    dicts = build_dictionaries(train_locals, exp)
    X_train, _ = encode_dataset(train_locals, dicts)
    X_test, test_empty = encode_dataset(test_locals, dicts)
    model = forest_mod.fit(X_train, Y_train, exp.forest, exp.forest_seed, jobs=jobs)
    pred = forest_mod.predict(model, X_test)
    return CellResult(dicts, model, X_train, X_test, pred, test_empty)


def with_k(exp: Experiment, k) -> Experiment:
    return replace(exp, k=k)


__all__ = ["CellResult", "Dictionary", "Experiment", "SampleRecord", "block_seed", "build_dictionaries",
           "encode_dataset", "extract_dataset", "load_locals", "run_cell", "save_locals", "targets", "with_k"]
