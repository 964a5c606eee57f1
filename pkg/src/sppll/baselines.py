"""Comparison methods: k-nearest-neighbour voting, the self-paced ablation,
and a direct supervised max-margin fit."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .margin_solver import train_weighted_mcsvm
from .trainer import ModelPredictor, TrainTrace, _standardizer, _to_raw, fit, sp_pll_method
from .types import DimensionMismatch, LinearModel, PartialLabelDataset, TrainConfig, validate


@dataclass(frozen=True, eq=False)
class KnnIndex:
    features: np.ndarray
    mask: np.ndarray  # (n, q) candidate indicator
    k: int = 10

    def __post_init__(self):
        if not 1 <= self.k <= self.features.shape[0]:
            raise ValueError(f"k must lie in 1..{self.features.shape[0]}, got {self.k}")

    @classmethod
    def build(cls, dataset: PartialLabelDataset, k: int = 10) -> "KnnIndex":
        return cls(np.array(dataset.features, dtype=float), dataset.candidate_mask(), k)

    def neighbours(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.features.shape[1],):
            raise DimensionMismatch(f"expected a {self.features.shape[1]}-vector, got {x.shape}")
        dist = np.sum((self.features - x) ** 2, axis=1)
        return np.argsort(dist, kind="stable")[: self.k]

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return np.array([plknn_predict(self, x) for x in np.atleast_2d(X)], dtype=np.int64)


def plknn_predict(index: KnnIndex, x: np.ndarray) -> int:
    """Label found in the most neighbour candidate sets; ties to the smallest label."""
    votes = index.mask[index.neighbours(x)].sum(axis=0)
    return int(np.argmax(votes)) + 1


class KnnPredictor:
    """PL-KNN over optionally z-scored features (training-set statistics)."""

    def __init__(self, dataset: PartialLabelDataset, k: int = 10, standardize: bool = True):
        X = dataset.features
        self.mean, self.scale = _standardizer(X) if standardize else (0.0, 1.0)
        self.index = KnnIndex.build(dataset.with_features((X - self.mean) / self.scale), min(k, dataset.n))
        self.trace = None

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.index((np.atleast_2d(X) - self.mean) / self.scale)


def m3pl_fit(dataset: PartialLabelDataset, config: TrainConfig | None = None) -> tuple[LinearModel, TrainTrace]:
    """Alternating max-margin training with every sample weight pinned to one."""
    return fit(dataset, replace(config or TrainConfig(), self_paced=False))


def direct_fit(dataset: PartialLabelDataset, config: TrainConfig | None = None) -> LinearModel:
    """Plain multi-class max-margin fit at ``C_max`` on singleton candidate sets."""
    config = config or TrainConfig()
    validate(dataset)
    if any(len(s) != 1 for s in dataset.candidates):
        raise ValueError("direct fitting needs one candidate per instance")
    y = np.array([s[0] for s in dataset.candidates])
    X = dataset.features
    if config.standardize:
        mean, scale = _standardizer(X)
        X = (X - mean) / scale
    model, _ = train_weighted_mcsvm(X, y, np.ones(dataset.n), config.C_max, config, q=dataset.q)
    meta = {"C": config.C_max, "seed": config.seed, "solver": "cs-dual", "method": "svm"}
    if config.standardize:
        return _to_raw(model, mean, scale, meta)
    return LinearModel(model.weights, model.biases, meta)


def method(name: str, knn_k: int = 10):
    """Training function ``(dataset, config) -> predictor`` for a method name."""
    if name == "sp-pll":
        return sp_pll_method
    if name == "m3pl":
        return lambda ds, cfg: ModelPredictor(*m3pl_fit(ds, cfg))
    if name == "pl-knn":
        return lambda ds, cfg: KnnPredictor(ds, knn_k, cfg.standardize)
    if name == "svm":
        return lambda ds, cfg: ModelPredictor(direct_fit(ds, cfg))
    raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")


METHODS = ("sp-pll", "m3pl", "pl-knn", "svm")
