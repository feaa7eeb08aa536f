"""``flowdesc`` command line.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dictionary as dict_mod
from . import forest as forest_mod
from .encoding import load_encoded, save_encoded, write_encoded_csv
from .errors import ConfigError, DataError, FormatError, InputError
from .evaluation import (curves_csv, dictionary_grid, evaluate, pivot_table, plot_error_curves, reports_csv,
                         sweep_dictionary, sweep_training_size)
from .fields import read_manifest, write_field, write_manifest
from .keypoints import DENSE_SCALES
from .pipeline import PipelineConfig, config_to_ini, load_config, load_split, run_pipeline
from .stages import Experiment, block_seed, encode_dataset, extract_dataset, load_locals, save_locals
from .synth import DEFAULT_SIZE, synth_dataset

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3
log = logging.getLogger("flowdesc")


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _feature_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("features")
    g.add_argument("--strategy", default="de-md", help="sd | md | de-sd | de-md")
    g.add_argument("--detector", default=None, help="fast | orb | dog | hessian (ignored for de-*)")
    g.add_argument("--descriptor", default="sift", help="sift | surf | orb | brisk")
    g.add_argument("--iou", type=float, default=0.9, help="IoU threshold of the SD keypoint dedup")
    g.add_argument("--scales", type=_ints, default=DENSE_SCALES, help="dense patch sizes")
    g.add_argument("--crop", type=_ints, default=None, help="x0,y0,width,height")
    g.add_argument("--detector-param", action="append", default=[], metavar="NAME=VALUE")


def _forest_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("forest")
    g.add_argument("--trees", type=int, default=100)
    g.add_argument("--max-features", type=float, default=1.0)
    g.add_argument("--min-samples-split", type=int, default=2)
    g.add_argument("--min-samples-leaf", type=int, default=1)
    g.add_argument("--no-bootstrap", action="store_true")
    g.add_argument("--max-depth", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)


def _param_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _experiment(args, **extra) -> Experiment:
    params = []
    for item in args.detector_param:
        if "=" not in item:
            raise ConfigError(f"--detector-param expects NAME=VALUE, got {item!r}")
        name, value = item.split("=", 1)
        params.append((name.strip(), _param_value(value.strip())))
    if args.crop is not None and len(args.crop) != 4:
        raise ConfigError("--crop expects x0,y0,width,height")
    return Experiment(strategy=args.strategy, detector=args.detector, descriptor=args.descriptor,
                      detector_params=tuple(sorted(params)), iou_thresh=args.iou, scales=tuple(args.scales),
                      crop=args.crop, **extra)


def _forest_params(args) -> forest_mod.ForestParams:
    return forest_mod.ForestParams(args.trees, args.max_features, args.min_samples_split, args.min_samples_leaf,
                                   not args.no_bootstrap, args.max_depth).validate()


def _targets_for(ids, manifest) -> np.ndarray:
    by_id = {r.id: r for r in read_manifest(manifest)}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise DataError(f"{len(missing)} encoded ids are absent from {manifest}, e.g. {missing[0]!r}")
    return np.array([[by_id[i].drag, by_id[i].lift] for i in ids])


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args) -> int:
    out = Path(args.out)
    (out / "fields").mkdir(parents=True, exist_ok=True)
    records = synth_dataset(args.n, args.seed, args.width, args.height, lazy=True)
    written = []
    for r in records:
        rel = Path("fields") / f"{r.id}.ffb"
        write_field(r.load(), out / rel)
        written.append(replace(r, field=None, path=str(rel), source=None))
    write_manifest(written, out / "manifest.csv")
    print(f"wrote {len(written)} fields and {out / 'manifest.csv'}")
    return EXIT_OK


def cmd_extract(args) -> int:
    exp = _experiment(args)
    records = read_manifest(args.manifest)
    locals_ = extract_dataset(records, exp, args.jobs)
    save_locals(args.out, [r.id for r in records], locals_)
    print(f"extracted {sum(sum(lf.n_keypoints) for lf in locals_)} keypoints from {len(records)} examples")
    return EXIT_OK


def cmd_dict(args) -> int:
    _, locals_ = load_locals(args.features)
    if not locals_:
        raise DataError(f"{args.features} holds no examples")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_blocks = len(locals_[0].blocks)
    ks = args.k if len(args.k) == n_blocks else args.k * n_blocks if len(args.k) == 1 else None
    if ks is None:
        raise ConfigError(f"--k needs 1 or {n_blocks} sizes, got {len(args.k)}")
    for b, k in enumerate(ks):
        data = np.concatenate([lf.blocks[b] for lf in locals_], axis=0)
        d = dict_mod.learn(data, k, data.dtype == np.uint8, seed=block_seed(args.seed, b),
                           max_iter=args.max_iter, max_train=args.max_train)
        dict_mod.save(d, out / f"dict-{b}.fdc")
        print(f"dictionary {b}: k={k}, {d.training_meta['iterations']} iterations -> {out / f'dict-{b}.fdc'}")
    return EXIT_OK


def cmd_encode(args) -> int:
    if args.features:
        ids, locals_ = load_locals(args.features)
    elif args.manifest:
        records = read_manifest(args.manifest)
        ids, locals_ = [r.id for r in records], extract_dataset(records, _experiment(args), args.jobs)
    else:
        raise ConfigError("encode needs --features or --manifest")
    dicts = [dict_mod.load(p) for p in args.dict]
    X, empty = encode_dataset(locals_, dicts)
    if args.csv:
        write_encoded_csv(ids, X, args.out)
    else:
        save_encoded(ids, X, args.out)
    print(f"encoded {len(ids)} examples into {X.shape[1]} dims ({int(empty.sum())} without keypoints)")
    return EXIT_OK


def cmd_train(args) -> int:
    ids, X = load_encoded(args.encoded)
    Y = _targets_for(ids, args.manifest)
    model = forest_mod.fit(X, Y, _forest_params(args), args.seed, jobs=args.jobs)
    forest_mod.save(model, args.out)
    print(f"trained {model.n_trees} trees on {len(ids)} examples -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = forest_mod.load(args.model)
    ids, X = load_encoded(args.encoded)
    Y = _targets_for(ids, args.manifest)
    report = evaluate(forest_mod.predict(model, X), Y, int((~X.any(axis=1)).sum()))
    text = reports_csv([({"model": Path(args.model).name}, report)])
    if args.report:
        Path(args.report).write_text(text)
    if args.curves:
        Path(args.curves).write_text(curves_csv(report))
    if args.plot:
        plot_error_curves([report], [Path(args.model).stem], args.plot)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    train, test = load_split(cfg)
    if args.kind == "dict":
        sizes = args.sizes or (512, 1024, 2048)
        rows = sweep_dictionary(dictionary_grid(cfg.experiment, sizes), train, test, cfg.jobs)
        column = "k"
    else:
        sizes = args.sizes or (1000, 2000, 4000, 8000, 14000)
        rows = sweep_training_size(cfg.experiment, sizes, train, test, args.subsample_seed, cfg.jobs)
        column = "train_size"
    out = Path(args.report or Path(cfg.out_dir) / f"sweep-{args.kind}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(reports_csv(rows))
    if args.plot:
        plot_error_curves([r for _, r in rows], [f"{column}={m[column]}" for m, _ in rows], args.plot)
    sys.stdout.write(pivot_table(rows, column))
    return EXIT_OK


def cmd_report(args) -> int:
    if args.from_csv:
        sys.stdout.write(Path(args.from_csv).read_text())
        return EXIT_OK
    if not args.config:
        raise ConfigError("report needs --config or --from-csv")
    cfg = load_config(args.config)
    if args.out:
        cfg = replace(cfg, out_dir=args.out)
    if args.print_config:
        sys.stdout.write(config_to_ini(cfg))
        return EXIT_OK
    result = run_pipeline(cfg)
    sys.stdout.write(Path(result.artifacts["report"]).read_text())
    print(f"recomputed: {', '.join(result.computed) or 'nothing (all cached)'}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flowdesc", description="Keypoint bag-of-words regression on flow fields.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic dataset (FFB fields + manifest)")
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--width", type=int, default=DEFAULT_SIZE[0])
    s.add_argument("--height", type=int, default=DEFAULT_SIZE[1])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", help="detect and describe local features")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True, help="local-feature archive (.npz)")
    s.add_argument("--jobs", type=int, default=1)
    _feature_flags(s)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("dict", help="learn dictionaries from extracted features")
    s.add_argument("--features", "--in", dest="features", required=True, help="archive from `extract`")
    s.add_argument("--k", type=_ints, default=(64,), help="one size, or one per modality")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-train", type=int, default=dict_mod.MAX_TRAIN)
    s.add_argument("--max-iter", type=int, default=dict_mod.MAX_ITER)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_dict)

    s = sub.add_parser("encode", help="build global descriptors")
    s.add_argument("--features", help="archive from `extract`")
    s.add_argument("--manifest", help="extract on the fly instead")
    s.add_argument("--dict", nargs="+", required=True, help="dictionary files in block order")
    s.add_argument("--out", required=True)
    s.add_argument("--csv", action="store_true", help="write CSV instead of FGE1")
    s.add_argument("--jobs", type=int, default=1)
    _feature_flags(s)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("train", help="fit the random forest")
    s.add_argument("--encoded", required=True)
    s.add_argument("--manifest", required=True, help="targets by id")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    _forest_flags(s)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="evaluate a model on encoded examples")
    s.add_argument("--model", required=True)
    s.add_argument("--encoded", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--report")
    s.add_argument("--curves")
    s.add_argument("--plot", help="SVG path for sorted-error curves")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="dictionary-size or training-size sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--kind", choices=("dict", "size"), default="dict")
    s.add_argument("--sizes", type=_ints, default=None)
    s.add_argument("--subsample-seed", type=int, default=0)
    s.add_argument("--report")
    s.add_argument("--plot")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", help="run the configured pipeline end to end")
    s.add_argument("--config")
    s.add_argument("--out", help="override the output directory")
    s.add_argument("--from-csv", help="print an existing report instead")
    s.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"flowdesc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FormatError, OSError) as exc:
        print(f"flowdesc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
