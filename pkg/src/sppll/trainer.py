"""Self-paced partial-label training and its evaluation harness.

``fit`` alternates three blocks: the classifier (weighted max-margin solve),
the label assignment (class-balanced transportation problem) and the
sample weights (closed-form self-paced update). The regularization C grows
geometrically up to ``C_max``; within each C stage the pace parameter grows
from ``lambda0`` until it passes ``lambda_max``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .data_io import PriorCounts, class_prior_counts
from .label_assignment import build_cost_matrix, init_cost_matrix, solve_assignment
from .losses import clamped_loss, margins
from .margin_solver import DualState, predict_many, train_weighted_mcsvm
from .self_paced import PaceSchedule, regularizer_value, update_weights
from .types import (
    Assignment,
    DimensionMismatch,
    LinearModel,
    NoGroundTruth,
    PartialLabelDataset,
    TooFewInstances,
    TrainConfig,
    validate,
)

log = logging.getLogger(__name__)


@dataclass
class StageRecord:
    C: float
    lam: float
    ofv: float
    inner_iterations: int
    admitted_fraction: float
    assignment_violations: int
    cap_hit: bool = False
    svm_converged: bool = True
    rejected_steps: int = 0
    ofv_history: list[float] = field(default_factory=list)


@dataclass
class TrainTrace:
    stages: list[StageRecord] = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(s)) + "\n" for s in self.stages)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, text: str) -> "TrainTrace":
        return cls([StageRecord(**json.loads(line)) for line in text.splitlines() if line.strip()])


@dataclass(frozen=True)
class ObjectiveTerms:
    loss: float
    regularizer: float
    self_paced: float

    @property
    def total(self) -> float:
        return self.loss + self.regularizer + self.self_paced


def objective_terms(model: LinearModel, dataset: PartialLabelDataset, y, v, C: float, lam: float) -> ObjectiveTerms:
    """The three parts of the training objective, with clamped losses.

    The norm term includes the biases, matching the margin solver.
    """
    if model.q != dataset.q or model.d != dataset.d:
        raise DimensionMismatch("model and dataset dimensions disagree")
    yy = np.asarray(y.y if isinstance(y, Assignment) else y, dtype=np.int64)
    v = np.asarray(v, dtype=float)
    if yy.shape != (dataset.n,) or v.shape != (dataset.n,):
        raise DimensionMismatch("labels and weights need one entry per instance")
    L = clamped_loss(margins(model.scores(dataset.features), yy))
    reg = 0.5 * (float(np.sum(model.weights**2)) + float(np.sum(model.biases**2)))
    return ObjectiveTerms(C * float(np.dot(v, L)), reg, regularizer_value(v, lam))


def objective_value(model: LinearModel, dataset: PartialLabelDataset, y, v, C: float, lam: float) -> float:
    return objective_terms(model, dataset, y, v, C, lam).total


def c_schedule(config: TrainConfig) -> list[float]:
    """C values of the outer stages: grow by ``1 + Delta``, last one at ``C_max``."""
    C = config.C_init
    out = []
    while C < config.C_max:
        C = min((1.0 + config.Delta) * C, config.C_max)
        out.append(C)
    return out or [config.C_max]


def _standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def _to_raw(model: LinearModel, mean: np.ndarray, scale: np.ndarray, meta: dict) -> LinearModel:
    W = model.weights / scale
    b = model.biases - W @ mean
    return LinearModel(W, b, meta)


def fit(dataset: PartialLabelDataset, config: TrainConfig | None = None) -> tuple[LinearModel, TrainTrace]:
    """Train a linear classifier from partial labels.

    With ``config.self_paced`` off, weights stay at one and each C stage runs
    a single pace stage, which is plain alternating max-margin training.

    After each pace stage the weights are recomputed from ``C * L`` (the
    exact minimizer of the objective over v) or, with ``weight_by_C`` off,
    from the raw clamped losses ``L``; with ``keep_nonempty`` on, an update
    that would zero every weight is skipped. With ``strict_descent`` on, an inner
    step that would raise the objective is discarded and ends the stage.
    """
    config = config or TrainConfig()
    validate(dataset)
    rng = np.random.default_rng(config.seed)

    if config.standardize:
        mean, scale = _standardizer(dataset.features)
        ds = dataset.with_features((dataset.features - mean) / scale)
    else:
        ds = dataset

    n, q = ds.n, ds.q
    counts = class_prior_counts(ds)
    v = np.ones(n)
    y = solve_assignment(init_cost_matrix(ds, config.bigM), v, counts)
    model = LinearModel.zeros(q, ds.d)
    dual: Optional[DualState] = None
    trace = TrainTrace()

    pace = PaceSchedule(config.lambda0, config.mu, config.lambda_max)
    lam_stages = pace.stages() if config.self_paced else [config.lambda0]
    for C in c_schedule(config):
        if config.reset_pace or not trace.stages:
            v = np.ones(n)
            stages = lam_stages
        for lam in stages:
            model, y, dual, record = _pace_stage(ds, counts, model, y, v, dual, C, lam, config, rng)
            if config.self_paced:
                L = clamped_loss(margins(model.scores(ds.features), y.y))
                new_v = update_weights(C * L if config.weight_by_C else L, lam)
                # an update that admits nobody would train on nothing
                if new_v.any() or not config.keep_nonempty:
                    v = new_v
            record.admitted_fraction = float(np.mean(v > 0))
            trace.stages.append(record)
            log.debug("C=%.4g lam=%.4g ofv=%.6g inner=%d admitted=%.3f", C, lam, record.ofv,
                      record.inner_iterations, record.admitted_fraction)
        if not config.reset_pace and config.self_paced:
            # carry v across C stages; resume the pace from where it stopped
            stages = [lam_stages[-1]]

    meta = {"C": config.C_max, "seed": config.seed, "solver": "cs-dual",
            "standardized": bool(config.standardize),
            "method": "sp-pll" if config.self_paced else "m3pl"}
    if config.standardize:
        final = _to_raw(model, mean, scale, meta)
    else:
        final = LinearModel(model.weights, model.biases, meta)
    return final, trace


def _pace_stage(ds, counts: PriorCounts, model, y, v, dual, C, lam, config: TrainConfig, rng):
    ofv = objective_value(model, ds, y, v, C, lam)
    history = [ofv]
    record = StageRecord(C=C, lam=lam, ofv=ofv, inner_iterations=0, admitted_fraction=0.0,
                         assignment_violations=y.violations)
    for it in range(config.max_inner):
        ofv_old = ofv
        new_model, status = train_weighted_mcsvm(
            ds.features, y, v, C, config, q=ds.q,
            warm=dual if config.warm_start else None, rng=rng,
        )
        record.svm_converged &= status.converged
        new_y = solve_assignment(build_cost_matrix(new_model, ds, config.bigM), v, counts)
        new_ofv = objective_value(new_model, ds, new_y, v, C, lam)
        record.inner_iterations = it + 1
        if config.strict_descent and new_ofv > ofv_old:
            # the solver minimizes the unclamped hinge, so a step can raise the
            # clamped objective; keep the previous iterate and end the stage
            record.rejected_steps += 1
            break
        model, y, dual, ofv = new_model, new_y, status.state, new_ofv
        history.append(ofv)
        if ofv_old - ofv < config.delta_ofv:
            break
    else:
        record.cap_hit = True
    record.ofv = ofv
    record.ofv_history = history
    record.assignment_violations = y.violations
    return model, y, dual, record


# ---------------------------------------------------------------- evaluation


def stratified_folds(truth: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded, class-stratified split of instance indices into ``folds`` test sets."""
    rng = np.random.default_rng(seed)
    truth = np.asarray(truth)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    k = 0
    for label in np.unique(truth):
        members = rng.permutation(np.flatnonzero(truth == label))
        for i in members:
            buckets[k % folds].append(int(i))
            k += 1
    return [np.sort(np.array(b, dtype=np.int64)) for b in buckets]


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


Predictor = Callable[[np.ndarray], np.ndarray]
Method = Callable[[PartialLabelDataset, TrainConfig], Predictor]


def _resolve(method: Union[str, Method], knn_k: int) -> Method:
    if callable(method):
        return method
    from . import baselines

    return baselines.method(method, knn_k=knn_k)


@dataclass
class CVResult:
    mean: float
    std: float
    fold_accuracies: list[float]
    traces: list[Optional[TrainTrace]] = field(default_factory=list, repr=False)


def cross_validate(
    dataset: PartialLabelDataset,
    folds: int = 10,
    config: TrainConfig | None = None,
    seed: int = 0,
    method: Union[str, Method] = "sp-pll",
    knn_k: int = 10,
) -> CVResult:
    """Stratified k-fold accuracy of ``method`` against the hidden truth.

    Fold ``k`` trains with seed ``fold_seed(seed, k)``, so results do not
    depend on the order folds are run in.
    """
    config = config or TrainConfig()
    if dataset.truth is None:
        raise NoGroundTruth("cross-validation needs true labels")
    if folds < 2:
        raise ValueError("folds must be ≥ 2")
    if dataset.n < folds:
        raise TooFewInstances(f"{dataset.n} instances cannot fill {folds} folds")
    validate(dataset)
    train_fn = _resolve(method, knn_k)
    accs, traces = [], []
    for k, test in enumerate(stratified_folds(dataset.truth, folds, seed)):
        train = np.setdiff1d(np.arange(dataset.n), test)
        cfg = replace(config, seed=fold_seed(seed, k))
        predictor = train_fn(dataset.subset(train), cfg)
        pred = predictor(dataset.features[test])
        accs.append(float(np.mean(pred == dataset.truth[test])))
        traces.append(getattr(predictor, "trace", None))
    a = np.array(accs)
    return CVResult(float(a.mean()), float(a.std()), accs, traces)


class ModelPredictor:
    """Wraps a linear model (and its training trace) as a batch predictor."""

    def __init__(self, model: LinearModel, trace: Optional[TrainTrace] = None):
        self.model = model
        self.trace = trace

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return predict_many(self.model, X)


def sp_pll_method(dataset: PartialLabelDataset, config: TrainConfig) -> ModelPredictor:
    return ModelPredictor(*fit(dataset, replace(config, self_paced=True)))
