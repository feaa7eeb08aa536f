import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowdesc.errors import InputError
from flowdesc.evaluation import (curves_csv, dictionary_grid, evaluate, pivot_table, plot_error_curves, r2_score,
                                 reports_csv, subsample, sweep_dictionary, sweep_training_size)
from flowdesc.forest import ForestParams
from flowdesc.stages import Experiment, extract_dataset, run_cell, targets
from flowdesc.synth import synth_dataset

from oracles import r2_by_definition


def test_perfect_and_mean_predictions():
    rng = np.random.default_rng(0)
    truth = rng.normal(size=(30, 2))
    r = evaluate(truth, truth)
    assert (r.rmse_drag, r.rmse_lift, r.r2_drag, r.r2_lift) == (0.0, 0.0, 1.0, 1.0)
    assert not any(r.sorted_abs_err_drag) and not any(r.sorted_abs_err_lift)
    m = evaluate(np.tile(truth.mean(0), (30, 1)), truth)
    assert m.r2_drag == pytest.approx(0.0, abs=1e-12) and m.r2_lift == pytest.approx(0.0, abs=1e-12)


def test_rmse_example():
    r = evaluate([[3.0, 0.0], [4.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]])
    assert r.rmse_drag == pytest.approx(math.sqrt(25 / 2))
    assert math.isnan(r.r2_drag)  # constant truth column
    assert r.r2_defined == (False, True)


def test_r2_undefined_cases():
    assert math.isnan(r2_score([1.0], [2.0]))
    assert math.isnan(r2_score([1.0, 2.0], [3.0, 3.0]))


def test_shape_errors():
    with pytest.raises(InputError):
        evaluate(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(InputError):
        evaluate(np.zeros((3, 3)), np.zeros((3, 3)))
    with pytest.raises(InputError):
        evaluate(np.zeros((0, 2)), np.zeros((0, 2)))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(2, 50))
def test_metric_identities(seed, n):
    rng = np.random.default_rng(seed)
    truth = rng.normal(size=(n, 2)) * rng.uniform(0.01, 100, 2)
    pred = truth + rng.normal(size=(n, 2))
    r = evaluate(pred, truth)
    for c, (rmse, r2, curve) in enumerate([(r.rmse_drag, r.r2_drag, r.sorted_abs_err_drag),
                                           (r.rmse_lift, r.r2_lift, r.sorted_abs_err_lift)]):
        ss_tot = ((truth[:, c] - truth[:, c].mean()) ** 2).sum()
        assert abs(r2 - (1 - n * rmse ** 2 / ss_tot)) <= 1e-9
        assert abs(r2 - r2_by_definition(pred[:, c], truth[:, c])) <= 1e-9
        assert list(curve) == sorted(curve) and len(curve) == n
        assert math.sqrt(np.mean(np.square(curve))) == pytest.approx(rmse, rel=1e-12)
        assert rmse >= 0 and r2 <= 1
    perm = rng.permutation(n)
    p = evaluate(pred[perm], truth[perm])
    assert p.sorted_abs_err_drag == r.sorted_abs_err_drag
    assert p.rmse_lift == pytest.approx(r.rmse_lift, rel=1e-12)


def test_subsample():
    assert subsample(10, 10, 3).tolist() == list(range(10))
    s = subsample(100, 20, 1)
    assert len(set(s.tolist())) == 20 and list(s) == sorted(s)
    assert np.array_equal(s, subsample(100, 20, 1))
    with pytest.raises(InputError):
        subsample(5, 6, 0)


# ---------------------------------------------------------------------------
# sweeps on tiny synthetic data

SMALL = dict(width=64, height=48)
FAST_FOREST = ForestParams(n_trees=20)


@pytest.fixture(scope="module")
def small_sets():
    recs = synth_dataset(60, 5, **SMALL)
    return recs[:45], recs[45:]


def test_sweep_single_config_matches_direct_run(small_sets):
    train, test = small_sets
    exp = Experiment("de-md", descriptor="sift", k=4, forest=FAST_FOREST)
    rows = sweep_dictionary([exp], train, test)
    assert len(rows) == 1
    meta, rep = rows[0]
    assert meta["strategy"] == "DE-MD" and meta["k"] == 4
    cell = run_cell(exp, extract_dataset(train, exp), targets(train), extract_dataset(test, exp))
    direct = evaluate(cell.pred, targets(test))
    assert rep == direct


def test_sweep_dictionary_grid_and_tables(small_sets, tmp_path):
    train, test = small_sets
    exp = Experiment("de-md", descriptor="orb", k=4, forest=FAST_FOREST)
    rows = sweep_dictionary(dictionary_grid(exp, [2, 4]), train, test)
    assert [m["k"] for m, _ in rows] == [2, 4]
    text = reports_csv(rows)
    lines = text.splitlines()
    assert lines[0].split(",")[:4] == ["strategy", "detector", "descriptor", "k"]
    assert len(lines) == 3
    table = pivot_table(rows)
    assert "DE-MD dense-orb" in table and "/" in table
    curves = curves_csv(rows[0][1]).splitlines()
    assert curves[0] == "rank,abs_err_drag,abs_err_lift" and len(curves) == 1 + len(test)
    plot_error_curves([r for _, r in rows], ["k=2", "k=4"], tmp_path / "a.svg")
    plot_error_curves([r for _, r in rows], ["k=2", "k=4"], tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_sweep_rejects_overlap(small_sets):
    train, _ = small_sets
    with pytest.raises(InputError):
        sweep_dictionary([Experiment("de-md", k=2)], train, train[:3])


def test_training_size_identity_and_pool_check(small_sets):
    train, test = small_sets
    exp = Experiment("de-md", descriptor="sift", k=4, forest=FAST_FOREST)
    rows = sweep_training_size(exp, [len(train)], train, test)
    full = sweep_dictionary([exp], train, test)
    assert rows[0][1] == full[0][1] and rows[0][0]["train_size"] == len(train)
    with pytest.raises(InputError):
        sweep_training_size(exp, [len(train) + 1], train, test)


def test_more_training_data_helps():
    recs = synth_dataset(200, 8, **SMALL)
    pool, test = recs[:160], recs[160:]
    exp = Experiment("de-md", descriptor="sift", k=8, forest=ForestParams(n_trees=30))
    wins = 0
    for seed in range(3):
        rows = sweep_training_size(exp, [15, 160], pool, test, seed=seed)
        small, large = rows[0][1], rows[1][1]
        wins += large.rmse_lift <= small.rmse_lift
    assert wins == 3
