import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowdesc import forest as F
from flowdesc.errors import FormatError, InputError
from flowdesc.forest import Forest, ForestParams, RegressionTree, fit, fit_tree, predict

from oracles import lookup_predict


def _data(n=120, d=6, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    Y = np.column_stack([np.sin(3 * X[:, 0]) + X[:, 1], X[:, 2] * X[:, 3]])
    return X, Y


def test_constant_targets():
    X, _ = _data()
    Y = np.tile([3.5, -1.25], (len(X), 1))
    f = fit(X, Y, ForestParams(n_trees=5), seed=1)
    assert np.array_equal(predict(f, X), Y)
    assert all(t.n_nodes == 1 for t in f.trees)


def test_single_tree_without_bootstrap_interpolates():
    X, Y = _data()
    f = fit(X, Y, ForestParams(n_trees=1, bootstrap=False), seed=0)
    assert np.array_equal(predict(f, X), lookup_predict(X, Y, X))


def test_copy_of_feature_is_learned():
    rng = np.random.default_rng(4)
    X = rng.random((500, 5))
    Y = np.column_stack([X[:, 0], X[:, 0]])
    f = fit(X[:400], Y[:400], ForestParams(n_trees=30), seed=0)
    rmse = np.sqrt(((predict(f, X[400:])[:, 0] - Y[400:, 0]) ** 2).mean())
    assert rmse <= 0.1 * Y[:, 0].std()


def test_stub_trees():
    stub = RegressionTree(np.array([F.LEAF]), np.array([0.0]), np.array([F.LEAF]), np.array([F.LEAF]),
                          np.array([[1.0, 2.0]]))
    forest = Forest((stub, stub, stub), ForestParams(n_trees=3), 0, 4, 2)
    assert np.array_equal(predict(forest, np.zeros((5, 4))), np.tile([1.0, 2.0], (5, 1)))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000), n_trees=st.integers(1, 5))
def test_prediction_is_mean_of_trees_and_row_independent(seed, n_trees):
    X, Y = _data(60, 4, seed)
    f = fit(X, Y, ForestParams(n_trees=n_trees), seed=seed)
    per_tree = np.mean([t.predict(X) for t in f.trees], axis=0)
    assert np.allclose(predict(f, X), per_tree, rtol=0, atol=1e-12)
    perm = np.random.default_rng(seed).permutation(len(X))
    assert np.array_equal(predict(f, X[perm]), predict(f, X)[perm])


def _node_rows(tree, X):
    """Training rows reaching each node, by replaying the split tests."""
    rows = {0: np.arange(len(X))}
    stack = [0]
    while stack:
        nd = stack.pop()
        if tree.feature[nd] == F.LEAF:
            continue
        r = rows[nd]
        left = X[r, tree.feature[nd]] <= tree.threshold[nd]
        rows[tree.left[nd]], rows[tree.right[nd]] = r[left], r[~left]
        stack += [tree.left[nd], tree.right[nd]]
    return rows


def _sse(Y):
    return float(((Y - Y.mean(0)) ** 2).sum()) if len(Y) else 0.0


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000), min_leaf=st.integers(1, 4))
def test_every_split_strictly_reduces_summed_variance(seed, min_leaf):
    X, Y = _data(80, 5, seed)
    X = np.round(X, 1)  # plenty of ties in feature values
    tree = fit_tree(X, Y, ForestParams(n_trees=1, bootstrap=False, min_samples_leaf=min_leaf))
    rows = _node_rows(tree, X)
    for nd, r in rows.items():
        if tree.feature[nd] == F.LEAF:
            assert np.allclose(tree.value[nd], Y[r].mean(0))
            continue
        lr, rr = rows[tree.left[nd]], rows[tree.right[nd]]
        assert len(lr) >= min_leaf and len(rr) >= min_leaf
        assert _sse(Y[lr]) + _sse(Y[rr]) < _sse(Y[r])


def test_compiled_grower_matches_numpy_reference():
    rng = np.random.default_rng(11)
    for case in range(5):
        X, Y = _data(90, 7, case)
        if case % 2:
            X = np.round(X, 1)
        order = np.argsort(X, axis=0, kind="stable").T.copy()
        params = ForestParams(n_trees=1, min_samples_leaf=1 + case % 3)
        ref = F._grow(X, Y, order, params, rng)
        fast = F._grow_fast(X, Y, order, params)
        assert ref == fast


def test_max_features_route_is_deterministic():
    X, Y = _data()
    p = ForestParams(n_trees=4, max_features=0.5)
    assert all(a == b for a, b in zip(fit(X, Y, p, 3).trees, fit(X, Y, p, 3).trees))


def test_depth_limit():
    X, Y = _data()
    f = fit(X, Y, ForestParams(n_trees=2, max_depth=2), seed=0)
    assert all(t.n_leaves <= 4 for t in f.trees)


def test_fit_errors():
    X, Y = _data(10)
    with pytest.raises(InputError):
        fit(X[:1], Y[:1])
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(InputError):
        fit(bad, Y)
    with pytest.raises(InputError):
        fit(X, Y[:5])
    f = fit(X, Y, ForestParams(n_trees=2))
    with pytest.raises(InputError):
        predict(f, np.zeros((2, 3)))
    with pytest.raises(InputError):
        ForestParams(n_trees=0).validate()


def test_seed_determinism_and_parallel_parity():
    X, Y = _data()
    p = ForestParams(n_trees=6)
    a, b = fit(X, Y, p, seed=5), fit(X, Y, p, seed=5, jobs=2)
    assert F.dumps(a) == F.dumps(b)
    assert F.dumps(fit(X, Y, p, seed=6)) != F.dumps(a)


def test_frf_round_trip(tmp_path):
    X, Y = _data()
    f = fit(X, Y, ForestParams(n_trees=3, max_depth=5), seed=9)
    F.save(f, tmp_path / "m.frf")
    g = F.load(tmp_path / "m.frf")
    assert F.dumps(g) == F.dumps(f)
    assert np.array_equal(predict(g, X), predict(f, X))
    assert g.params == f.params and g.seed == 9
    raw = (tmp_path / "m.frf").read_bytes()
    with pytest.raises(FormatError):
        F.loads(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        F.loads(raw[:-3])
