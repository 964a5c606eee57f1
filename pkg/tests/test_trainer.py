import numpy as np
import pytest

from oracles import objective_by_summation
from sppll.baselines import direct_fit, m3pl_fit
from sppll.data_io import corrupt_labels, gaussian_blobs, supervised_dataset
from sppll.margin_solver import predict_many, train_weighted_mcsvm
from sppll.trainer import (
    TrainTrace,
    c_schedule,
    cross_validate,
    fit,
    fold_seed,
    objective_terms,
    objective_value,
    stratified_folds,
)
from sppll.types import LinearModel, NoGroundTruth, PartialLabelDataset, TooFewInstances, TrainConfig

FAST = TrainConfig(C_init=0.5, C_max=2.0, Delta=1.0)


def test_objective_of_zero_model():
    ds = gaussian_blobs(10, 3, seed=0)
    val = objective_value(LinearModel.zeros(3, 2), ds, ds.truth, np.ones(10), 2.0, 0.6)
    assert val == pytest.approx(2.0 * 10 - 10 * 0.3)


def test_objective_with_zero_weights():
    ds = gaussian_blobs(10, 3, seed=0)
    W = np.array([[1.0, 2.0], [0.0, -1.0], [0.5, 0.5]])
    m = LinearModel(W, np.zeros(3))
    assert objective_value(m, ds, ds.truth, np.zeros(10), 5.0, 0.6) == pytest.approx(0.5 * np.sum(W**2))
    # biases are regularized too
    mb = LinearModel(W, np.array([1.0, 0.0, 0.0]))
    assert objective_terms(mb, ds, ds.truth, np.zeros(10), 5.0, 0.6).regularizer == pytest.approx(
        0.5 * np.sum(W**2) + 0.5)


@pytest.mark.parametrize("seed", range(5))
def test_objective_matches_summation_oracle(seed):
    rng = np.random.default_rng(seed)
    n, d, q = 7, 3, 4
    X = rng.normal(size=(n, d))
    y = rng.integers(1, q + 1, n)
    ds = PartialLabelDataset(X, tuple((int(t),) for t in y), q)
    W, b, v = rng.normal(size=(q, d)), rng.normal(size=q), rng.random(n)
    got = objective_value(LinearModel(W, b), ds, y, v, 1.7, 0.8)
    assert got == pytest.approx(objective_by_summation(W, b, X, y, v, 1.7, 0.8), abs=1e-10)


def test_c_schedule():
    s = c_schedule(TrainConfig())
    assert s[0] == pytest.approx(0.015) and s[-1] == 10.0 and s[-2] < 10.0
    assert all(b > a for a, b in zip(s, s[1:]))
    assert c_schedule(TrainConfig(C_init=3.0, C_max=3.0)) == [3.0]


def test_single_pace_stage_when_lambda0_exceeds_max():
    ds = corrupt_labels(gaussian_blobs(40, 3, seed=1), 0.5, 1, seed=1)
    cfg = TrainConfig(C_init=0.1, C_max=1.0, lambda0=1.2, lambda_max=1.0)
    _, trace = fit(ds, cfg)
    assert len(trace.stages) == len(c_schedule(cfg))
    assert all(s.lam == 1.2 for s in trace.stages)


def test_supervised_matches_direct_solver():
    ds = gaussian_blobs(90, 3, separation=4.0, seed=2)
    direct = predict_many(direct_fit(ds, FAST), ds.features)
    model, _ = m3pl_fit(ds, FAST)
    assert np.array_equal(predict_many(model, ds.features), direct)
    # the self-paced weights reshape the final solve, so only near-identity holds
    model, _ = fit(ds, FAST)
    assert np.mean(predict_many(model, ds.features) == direct) >= 0.95


def test_ambiguous_instances_join_nearer_class():
    X = np.array([[-3.0], [-2.5], [-2.0], [-1.5], [1.5], [2.0], [2.5], [3.0]])
    cands = ((1,), (1,), (1,), (1, 2), (1, 2), (2,), (2,), (2,))
    ds = PartialLabelDataset(X, cands, 2, np.array([1, 1, 1, 1, 2, 2, 2, 2]))
    cfg = TrainConfig(C_init=1.0, C_max=1.0, standardize=False)
    # both feasible assignments (counts are 4/4), scored by the objective oracle
    scores = {}
    for a, b in ((1, 2), (2, 1)):
        y = np.array([1, 1, 1, a, b, 2, 2, 2])
        m, _ = train_weighted_mcsvm(X, y, np.ones(8), 1.0, cfg, q=2)
        scores[(a, b)] = objective_by_summation(m.weights, m.biases, X, y, np.ones(8), 1.0, 0.6)
    assert scores[(1, 2)] < scores[(2, 1)]
    for method in (fit, m3pl_fit):
        model, _ = method(ds, cfg)
        assert predict_many(model, X[3:5]).tolist() == [1, 2]


def test_fit_is_deterministic():
    ds = corrupt_labels(gaussian_blobs(60, 3, seed=3), 0.6, 2, seed=3)
    a, ta = fit(ds, FAST)
    b, tb = fit(ds, FAST)
    assert a == b and ta.to_jsonl() == tb.to_jsonl()


def test_m3pl_trace_shape():
    ds = corrupt_labels(gaussian_blobs(60, 3, seed=4), 0.6, 1, seed=4)
    _, trace = m3pl_fit(ds, TrainConfig(C_init=0.1, C_max=1.0))
    assert len(trace.stages) == len(c_schedule(TrainConfig(C_init=0.1, C_max=1.0)))
    assert all(s.admitted_fraction == 1.0 for s in trace.stages)


def test_inner_loop_descends():
    ds = corrupt_labels(gaussian_blobs(80, 3, seed=5), 0.7, 1, seed=5)
    _, trace = fit(ds, TrainConfig(C_init=0.1, C_max=2.0))
    for s in trace.stages:
        h = np.array(s.ofv_history)
        assert np.all(np.diff(h) <= 1e-6 * (1 + np.abs(h[:-1])))
        assert 0.0 <= s.admitted_fraction <= 1.0 and np.isfinite(s.ofv)


def test_carry_mode_runs_one_stage_after_first():
    ds = corrupt_labels(gaussian_blobs(60, 3, seed=6), 0.5, 1, seed=6)
    cfg = TrainConfig(C_init=0.5, C_max=2.0, Delta=1.0, reset_pace=False)
    _, trace = fit(ds, cfg)
    n_lam = 11
    assert len(trace.stages) == n_lam + len(c_schedule(cfg)) - 1


def test_trace_jsonl_round_trip(tmp_path):
    ds = corrupt_labels(gaussian_blobs(40, 3, seed=7), 0.5, 1, seed=7)
    _, trace = fit(ds, FAST)
    trace.save(tmp_path / "t.jsonl")
    back = TrainTrace.from_jsonl((tmp_path / "t.jsonl").read_text())
    assert back == trace


# ---------------------------------------------------------------- evaluation

def test_folds_partition_and_stratify():
    truth = np.repeat([1, 2, 3], [10, 7, 13])
    folds = stratified_folds(truth, 5, seed=0)
    allidx = np.sort(np.concatenate(folds))
    assert allidx.tolist() == list(range(30))
    for f in folds:
        counts = np.bincount(truth[f], minlength=4)[1:]
        assert np.all(np.abs(counts - np.array([10, 7, 13]) / 5) < 1.0 + 1e-9)


def test_leave_one_out_folds():
    folds = stratified_folds(np.array([1, 1, 2, 2, 3, 3]), 6, seed=1)
    assert sorted(len(f) for f in folds) == [1] * 6


def test_one_hot_features_are_learned_perfectly():
    y = np.tile([1, 2, 3], 10)
    ds = supervised_dataset(np.eye(3)[y - 1], y, q=3)
    ds = corrupt_labels(ds, 0.3, 1, seed=0)
    for method in ("sp-pll", "m3pl", "pl-knn"):
        res = cross_validate(ds, 5, FAST, seed=0, method=method)
        assert res.fold_accuracies == [1.0] * 5


def test_cross_validation_is_deterministic():
    ds = corrupt_labels(gaussian_blobs(50, 3, seed=8), 0.5, 1, seed=8)
    a = cross_validate(ds, 5, FAST, seed=3)
    b = cross_validate(ds, 5, FAST, seed=3)
    assert a.fold_accuracies == b.fold_accuracies
    assert a.mean == pytest.approx(np.mean(a.fold_accuracies)) and a.std == pytest.approx(np.std(a.fold_accuracies))
    assert fold_seed(3, 0) != fold_seed(3, 1)


def test_cross_validation_errors():
    ds = gaussian_blobs(10, 2, seed=0)
    with pytest.raises(ValueError, match="folds must be ≥ 2"):
        cross_validate(ds, 1, FAST)
    with pytest.raises(TooFewInstances):
        cross_validate(ds, 11, FAST)
    blind = PartialLabelDataset(ds.features, ds.candidates, ds.q)
    with pytest.raises(NoGroundTruth):
        cross_validate(blind, 2, FAST)


def test_weights_never_empty_the_training_set():
    # full ambiguity forces the zero model, whose losses exceed every pace value
    ds = corrupt_labels(gaussian_blobs(40, 3, seed=9), 1.0, 2, seed=9)
    cfg = TrainConfig(C_init=1.0, C_max=2.0, Delta=1.0)
    _, guarded = fit(ds, cfg)
    assert min(s.admitted_fraction for s in guarded.stages) > 0
    _, literal = fit(ds, TrainConfig(C_init=1.0, C_max=2.0, Delta=1.0, keep_nonempty=False))
    assert min(s.admitted_fraction for s in literal.stages) == 0
