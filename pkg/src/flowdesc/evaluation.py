"""Regression metrics, sorted-error curves, sweeps and report output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .stages import Experiment, extract_dataset, run_cell, targets, with_k

TARGETS = ("drag", "lift")


@dataclass(frozen=True)
class EvalReport:
    rmse_drag: float
    rmse_lift: float
    r2_drag: float  # NaN when undefined (constant truth or n < 2)
    r2_lift: float
    sorted_abs_err_drag: tuple
    sorted_abs_err_lift: tuple
    n_test: int
    n_zero_keypoint: int = 0

    @property
    def r2_defined(self) -> tuple:
        return (not math.isnan(self.r2_drag), not math.isnan(self.r2_lift))

    def row(self) -> dict:
        return {"n_test": self.n_test, "n_zero_keypoint": self.n_zero_keypoint,
                "rmse_drag": self.rmse_drag, "rmse_lift": self.rmse_lift,
                "r2_drag": self.r2_drag, "r2_lift": self.r2_lift}


def r2_score(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if len(truth) < 2 or np.all(truth == truth[0]):
        return math.nan
    ss_res = float(((pred - truth) ** 2).sum())
    ss_tot = float(((truth - truth.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def evaluate(pred, truth, n_zero_keypoint: int = 0) -> EvalReport:
    """RMSE, R^2 and sorted absolute errors per target column (drag, lift)."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 2 or pred.shape[1] != 2:
        raise InputError(f"pred {pred.shape} and truth {truth.shape} must both be (n, 2)")
    if len(pred) < 1:
        raise InputError("evaluation needs at least one example")
    if not (np.isfinite(pred).all() and np.isfinite(truth).all()):
        raise InputError("pred and truth must be finite")
    err = pred - truth
    rmse = np.sqrt((err ** 2).mean(axis=0))
    curves = [tuple(np.sort(np.abs(err[:, c]))) for c in range(2)]
    r2 = [r2_score(pred[:, c], truth[:, c]) for c in range(2)]
    return EvalReport(float(rmse[0]), float(rmse[1]), r2[0], r2[1], curves[0], curves[1],
                      len(pred), int(n_zero_keypoint))


# ---------------------------------------------------------------------------
# sweeps

def experiment_row(exp: Experiment, **extra) -> dict:
    k = exp.k if not isinstance(exp.k, (tuple, list)) else "/".join(str(v) for v in exp.k)
    return {"strategy": exp.strategy.upper(), "detector": exp.detector, "descriptor": exp.descriptor,
            "k": k, **extra}


def _evaluate_cell(exp, train_locals, Y_train, test_locals, Y_test, jobs):
    cell = run_cell(exp, train_locals, Y_train, test_locals, jobs=jobs)
    return evaluate(cell.pred, Y_test, int(cell.test_empty.sum())), cell


def sweep_dictionary(configs, train, test, jobs: int = 1) -> list:
    """Evaluate each experiment on (train, test) records.

    Extraction runs once per distinct extraction setting and is shared by all
    dictionary sizes.  Returns ``[(row, EvalReport)]`` in config order.
    """
    _check_disjoint(train, test)
    Y_train, Y_test = targets(train), targets(test)
    cache = {}
    out = []
    for exp in configs:
        key = exp.extraction_key()
        if key not in cache:
            cache[key] = (extract_dataset(train, exp, jobs), extract_dataset(test, exp, jobs))
        tr, te = cache[key]
        report, _ = _evaluate_cell(exp, tr, Y_train, te, Y_test, jobs)
        out.append((experiment_row(exp), report))
    return out


def dictionary_grid(exp: Experiment, sizes) -> list:
    return [with_k(exp, k) for k in sizes]


def subsample(n_pool: int, size: int, seed: int) -> np.ndarray:
    """Sorted seeded subset of ``range(n_pool)``; the full pool maps to itself."""
    if size > n_pool:
        raise InputError(f"training pool of {n_pool} is smaller than requested size {size}")
    if size < 2:
        raise InputError("training size must be at least 2")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_pool, size, replace=False))


def sweep_training_size(exp: Experiment, sizes, train_pool, test, seed: int = 0, jobs: int = 1) -> list:
    """Re-run dictionaries, encoding and forest on seeded subsets of the pool."""
    _check_disjoint(train_pool, test)
    sizes = list(sizes)
    if max(sizes) > len(train_pool):
        raise InputError(f"training pool of {len(train_pool)} is smaller than size {max(sizes)}")
    pool_locals = extract_dataset(train_pool, exp, jobs)
    test_locals = extract_dataset(test, exp, jobs)
    Y_pool, Y_test = targets(train_pool), targets(test)
    out = []
    for size in sizes:
        idx = subsample(len(train_pool), size, seed)
        report, _ = _evaluate_cell(exp, [pool_locals[i] for i in idx], Y_pool[idx], test_locals, Y_test, jobs)
        out.append((experiment_row(exp, train_size=size), report))
    return out


def _check_disjoint(train, test) -> None:
    overlap = {r.id for r in train} & {r.id for r in test}
    if overlap:
        raise InputError(f"train and test share {len(overlap)} example ids, e.g. {sorted(overlap)[0]!r}")


# ---------------------------------------------------------------------------
# output

def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return "" if v is None else str(v)


def reports_csv(rows) -> str:
    """One line per (row, report) pair; float columns use round-trip repr."""
    rows = list(rows)
    if not rows:
        return ""
    keys = []
    for meta, rep in rows:
        for k in list(meta) + list(rep.row()):
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for meta, rep in rows:
        merged = {**meta, **rep.row()}
        w.writerow([_fmt(merged.get(k)) for k in keys])
    return buf.getvalue()


def write_reports(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(reports_csv(rows))


def curves_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "abs_err_drag", "abs_err_lift"])
    for i, (a, b) in enumerate(zip(report.sorted_abs_err_drag, report.sorted_abs_err_lift)):
        w.writerow([i, repr(a), repr(b)])
    return buf.getvalue()


def pivot_table(rows, column: str = "k") -> str:
    """Text table: one line per detector/descriptor/strategy, one column per ``column`` value.

    Cells show ``drag/lift`` RMSE.
    """
    rows = list(rows)
    cols = []
    lines = {}
    for meta, rep in rows:
        c = str(meta.get(column))
        if c not in cols:
            cols.append(c)
        name = f"{meta.get('strategy')} {meta.get('detector')}-{meta.get('descriptor')}"
        lines.setdefault(name, {})[c] = f"{rep.rmse_drag:.3e}/{rep.rmse_lift:.3e}"
    width = max([len(n) for n in lines] + [10])
    out = [" " * width + " | " + " | ".join(f"{c:>21}" for c in cols)]
    for name, cells in lines.items():
        out.append(f"{name:<{width}} | " + " | ".join(f"{cells.get(c, '-'):>21}" for c in cols))
    return "\n".join(out) + "\n"


def plot_error_curves(reports, labels, path) -> None:
    """Sorted absolute-error curves (drag and lift side by side) as a reproducible SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "flowdesc", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        for rep, label in zip(reports, labels):
            for ax, curve in zip(axes, (rep.sorted_abs_err_drag, rep.sorted_abs_err_lift)):
                ax.plot(np.arange(len(curve)), curve, label=label, lw=1.2)
        for ax, name in zip(axes, TARGETS):
            ax.set_title(name)
            ax.set_xlabel("test example (sorted)")
            ax.set_ylabel("absolute error")
            ax.set_yscale("log")
        axes[1].legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
