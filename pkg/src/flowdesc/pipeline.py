"""Configured end-to-end runs with content-addressed stage caching.

A run is described by an INI file (sections ``data``, ``synth``, ``split``,
``features``, ``detector``, ``dictionary``, ``forest``, ``output``).  Every
stage artifact is named by a hash of all settings upstream of it, so
changing one parameter recomputes that stage and everything after it while
earlier artifacts are reused.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dictionary as dict_mod
from . import forest as forest_mod
from .encoding import load_encoded, save_encoded
from .errors import ConfigError, DataError, FormatError
from .evaluation import EvalReport, curves_csv, evaluate, experiment_row, plot_error_curves, write_reports
from .fields import read_manifest
from .keypoints import DENSE_SCALES
from .stages import (Experiment, build_dictionaries, encode_dataset, extract_dataset, load_locals,
                     save_locals, targets)
from .synth import DEFAULT_SIZE, synth_dataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    experiment: Experiment = field(default_factory=Experiment)
    manifest: str | None = None  # when unset, a synthetic dataset is generated
    test_manifest: str | None = None
    synth_n: int = 200
    synth_seed: int = 1
    width: int = DEFAULT_SIZE[0]
    height: int = DEFAULT_SIZE[1]
    test_size: int = 40
    split_seed: int = 0
    out_dir: str = "flowdesc-out"
    jobs: int = 1
    cache_features: bool = True
    plot: bool = False


# ---------------------------------------------------------------------------
# INI round trip

def _parse_ints(text: str) -> tuple:
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    return text


def config_from_ini(text: str, base_dir=None) -> PipelineConfig:
    """Parse INI text; relative paths resolve against ``base_dir``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    known = {"data", "synth", "split", "features", "detector", "dictionary", "forest", "output"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")

    def get(section, key, default=None):
        return cp.get(section, key, fallback=default) if cp.has_section(section) else default

    def path(value):
        if not value:
            return None
        p = Path(value)
        return str(p if p.is_absolute() or base_dir is None else Path(base_dir) / p)

    try:
        k_text = get("dictionary", "k", "64")
        ks = _parse_ints(k_text)
        k = ks[0] if len(ks) == 1 else ks
        crop = get("features", "crop", "")
        max_depth = get("forest", "max_depth", "")
        exp = Experiment(
            strategy=get("features", "strategy", "de-md"),
            detector=get("features", "detector", "") or None,
            descriptor=get("features", "descriptor", "sift"),
            k=k,
            detector_params=tuple(sorted((key, _scalar(v)) for key, v in cp.items("detector")))
            if cp.has_section("detector") else (),
            iou_thresh=float(get("features", "iou_thresh", "0.9")),
            scales=_parse_ints(get("features", "scales", ",".join(map(str, DENSE_SCALES)))),
            crop=_parse_ints(crop) if crop else None,
            dict_seed=int(get("dictionary", "seed", "0")),
            max_train=int(get("dictionary", "max_train", str(dict_mod.MAX_TRAIN))),
            max_iter=int(get("dictionary", "max_iter", str(dict_mod.MAX_ITER))),
            forest=forest_mod.ForestParams(
                n_trees=int(get("forest", "n_trees", "100")),
                max_features=float(get("forest", "max_features", "1.0")),
                min_samples_split=int(get("forest", "min_samples_split", "2")),
                min_samples_leaf=int(get("forest", "min_samples_leaf", "1")),
                bootstrap=_scalar(get("forest", "bootstrap", "true")) is True,
                max_depth=int(max_depth) if max_depth else None).validate(),
            forest_seed=int(get("forest", "seed", "0")),
        )
        cfg = PipelineConfig(
            experiment=exp,
            manifest=path(get("data", "manifest", "")),
            test_manifest=path(get("data", "test_manifest", "")),
            synth_n=int(get("synth", "n", "200")),
            synth_seed=int(get("synth", "seed", "1")),
            width=int(get("synth", "width", str(DEFAULT_SIZE[0]))),
            height=int(get("synth", "height", str(DEFAULT_SIZE[1]))),
            test_size=int(get("split", "test_size", "40")),
            split_seed=int(get("split", "seed", "0")),
            out_dir=path(get("output", "dir", "flowdesc-out")),
            jobs=int(get("output", "jobs", "1")),
            cache_features=_scalar(get("output", "cache_features", "true")) is True,
            plot=_scalar(get("output", "plot", "false")) is True,
        )
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    if exp.crop is not None and len(exp.crop) != 4:
        raise ConfigError("crop must be x0,y0,width,height")
    return cfg


def load_config(path) -> PipelineConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_ini(text, base_dir=Path(path).parent)


def config_to_ini(cfg: PipelineConfig) -> str:
    """Every setting, defaults included, as INI text that parses back to ``cfg``."""
    exp = cfg.experiment
    f = exp.forest
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["data"] = {"manifest": cfg.manifest or "", "test_manifest": cfg.test_manifest or ""}
    cp["synth"] = {"n": str(cfg.synth_n), "seed": str(cfg.synth_seed), "width": str(cfg.width),
                   "height": str(cfg.height)}
    cp["split"] = {"test_size": str(cfg.test_size), "seed": str(cfg.split_seed)}
    cp["features"] = {"strategy": exp.strategy, "detector": exp.detector or "", "descriptor": exp.descriptor,
                      "iou_thresh": repr(exp.iou_thresh), "scales": ",".join(map(str, exp.scales)),
                      "crop": ",".join(map(str, exp.crop)) if exp.crop else ""}
    cp["detector"] = {k: str(v) for k, v in exp.detector_params}
    cp["dictionary"] = {"k": ",".join(map(str, exp.ks)) if isinstance(exp.k, (tuple, list)) else str(exp.k),
                        "seed": str(exp.dict_seed), "max_train": str(exp.max_train), "max_iter": str(exp.max_iter)}
    cp["forest"] = {"n_trees": str(f.n_trees), "max_features": repr(f.max_features),
                    "min_samples_split": str(f.min_samples_split), "min_samples_leaf": str(f.min_samples_leaf),
                    "bootstrap": str(f.bootstrap).lower(), "max_depth": "" if f.max_depth is None else str(f.max_depth),
                    "seed": str(exp.forest_seed)}
    cp["output"] = {"dir": cfg.out_dir, "jobs": str(cfg.jobs), "cache_features": str(cfg.cache_features).lower(),
                    "plot": str(cfg.plot).lower()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# data

def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_split(cfg: PipelineConfig) -> tuple:
    """``(train, test)`` records.

    A test manifest, when given, is the test set; otherwise ``test_size``
    records are held out by a seeded permutation.
    """
    try:
        if cfg.manifest:
            records = read_manifest(cfg.manifest)
        else:
            records = synth_dataset(cfg.synth_n, cfg.synth_seed, cfg.width, cfg.height, lazy=True)
        if cfg.test_manifest:
            return records, read_manifest(cfg.test_manifest)
    except (OSError, FormatError) as exc:
        raise DataError(f"data: {exc}") from exc
    if not 1 <= cfg.test_size < len(records) - 1:
        raise ConfigError(f"test_size {cfg.test_size} must leave at least 2 of {len(records)} records for training")
    perm = np.random.default_rng(cfg.split_seed).permutation(len(records))
    test_idx = np.sort(perm[:cfg.test_size])
    train_idx = np.sort(perm[cfg.test_size:])
    return [records[i] for i in train_idx], [records[i] for i in test_idx]


def _data_identity(cfg: PipelineConfig) -> dict:
    if cfg.manifest:
        ident = {"manifest": _file_digest(cfg.manifest)}
        if cfg.test_manifest:
            ident["test_manifest"] = _file_digest(cfg.test_manifest)
    else:
        ident = {"synth": [cfg.synth_n, cfg.synth_seed, cfg.width, cfg.height]}
    if not cfg.test_manifest:
        ident["split"] = [cfg.test_size, cfg.split_seed]
    return ident


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def stage_keys(cfg: PipelineConfig) -> dict:
    """Content hashes for each stage; each folds in every upstream key."""
    exp = cfg.experiment
    extract = _digest({"data": _data_identity(cfg), "features": exp.extraction_key()})
    dicts = _digest({"up": extract, "k": exp.ks, "seed": exp.dict_seed, "max_train": exp.max_train,
                     "max_iter": exp.max_iter})
    encode = _digest({"up": dicts})
    model = _digest({"up": encode, "forest": asdict(exp.forest), "seed": exp.forest_seed})
    return {"extract": extract, "dict": dicts, "encode": encode, "model": model}


# ---------------------------------------------------------------------------
# run

@dataclass
class RunResult:
    report: EvalReport
    artifacts: dict
    computed: list  # stages recomputed in this run (the rest came from cache)


def _extract_cached(records, exp, path: Path, cfg, computed, tag) -> list:
    ids = [r.id for r in records]
    if path.exists():
        cached_ids, locals_ = load_locals(path)
        if cached_ids == ids:
            return locals_
    locals_ = extract_dataset(records, exp, cfg.jobs)
    if cfg.cache_features:
        save_locals(path, ids, locals_)
    computed.append(f"extract-{tag}")
    return locals_


def run_pipeline(cfg: PipelineConfig) -> RunResult:
    """synth/load -> extract -> dictionaries -> encode -> train -> evaluate, with caching."""
    exp = cfg.experiment
    out = Path(cfg.out_dir)
    cache = out / "cache"
    try:
        cache.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"output: cannot create {cache}: {exc}") from exc
    keys = stage_keys(cfg)
    computed = []
    train, test = load_split(cfg)
    Y_train, Y_test = targets(train), targets(test)
    art = {}

    def need(*paths):
        return not all(p.exists() for p in paths)

    try:
        locals_train = locals_test = None

        def local_features():
            nonlocal locals_train, locals_test
            if locals_train is None:
                locals_train = _extract_cached(train, exp, cache / f"extract-{keys['extract']}-train.npz",
                                               cfg, computed, "train")
                locals_test = _extract_cached(test, exp, cache / f"extract-{keys['extract']}-test.npz",
                                              cfg, computed, "test")
            return locals_train, locals_test

        dict_paths = [cache / f"dict-{keys['dict']}-{b}.fdc" for b in range(len(exp.ks))]
        if need(*dict_paths):
            dicts = build_dictionaries(local_features()[0], exp)
            for d, p in zip(dicts, dict_paths):
                dict_mod.save(d, p)
            computed.append("dict")
        dicts = [dict_mod.load(p) for p in dict_paths]
        art["dictionaries"] = [str(p) for p in dict_paths]

        enc_train = cache / f"encode-{keys['encode']}-train.fge"
        enc_test = cache / f"encode-{keys['encode']}-test.fge"
        if need(enc_train, enc_test):
            lt, le = local_features()
            save_encoded([r.id for r in train], encode_dataset(lt, dicts)[0], enc_train)
            save_encoded([r.id for r in test], encode_dataset(le, dicts)[0], enc_test)
            computed.append("encode")
        _, X_train = load_encoded(enc_train)
        _, X_test = load_encoded(enc_test)
        art["encoded"] = [str(enc_train), str(enc_test)]

        model_path = cache / f"model-{keys['model']}.frf"
        if need(model_path):
            forest_mod.save(forest_mod.fit(X_train, Y_train, exp.forest, exp.forest_seed, jobs=cfg.jobs), model_path)
            computed.append("model")
        model = forest_mod.load(model_path)
        art["model"] = str(model_path)

        pred = forest_mod.predict(model, X_test)
        n_zero = int((~X_test.any(axis=1)).sum())
        report = evaluate(pred, Y_test, n_zero)
        report_path = out / "report.csv"
        write_reports([(experiment_row(exp, n_train=len(train)), report)], report_path)
        (out / "curves.csv").write_text(curves_csv(report))
        (out / "config.ini").write_text(config_to_ini(cfg))
        art.update(report=str(report_path), curves=str(out / "curves.csv"), config=str(out / "config.ini"))
        if cfg.plot:
            plot_error_curves([report], [exp.strategy.upper()], out / "curves.svg")
            art["plot"] = str(out / "curves.svg")
    except OSError as exc:
        raise DataError(f"pipeline I/O under {out}: {exc}") from exc
    log.info("run finished; recomputed stages: %s", computed or "none")
    return RunResult(report, art, computed)


def with_experiment(cfg: PipelineConfig, **changes) -> PipelineConfig:
    return replace(cfg, experiment=replace(cfg.experiment, **changes))


__all__ = ["PipelineConfig", "RunResult", "config_from_ini", "config_to_ini", "load_config", "load_split",
           "run_pipeline", "stage_keys", "with_experiment"]
