"""Multi-class margins, the hinge loss, and its clamped variant.

The margin of instance ``x`` under label ``y`` is the score of ``y`` minus
the best score among the other classes. The clamped loss saturates the hinge
at 1 so per-sample losses stay in [0, 1]; assignment costs and self-paced
weights are built from it, while the margin solver works on the plain hinge.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import DimensionMismatch, LinearModel


@dataclass(frozen=True)
class MarginReport:
    score_true: float
    score_best_other: float
    xi: float
    hinge: float
    clamped: float


def margin_report(model: LinearModel, x: np.ndarray, y: int) -> MarginReport:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.d,):
        raise DimensionMismatch(f"expected a {model.d}-vector, got shape {x.shape}")
    if not 1 <= y <= model.q:
        raise DimensionMismatch(f"label {y} outside 1..{model.q}")
    s = model.scores(x)
    true = float(s[y - 1])
    other = float(np.max(np.delete(s, y - 1))) if model.q > 1 else -np.inf
    xi = true - other
    hinge = max(0.0, 1.0 - xi)
    return MarginReport(true, other, xi, hinge, min(1.0, hinge))


def margins_for_all_labels(scores: np.ndarray) -> np.ndarray:
    """Margin of every (instance, label) pair from an (n, q) score matrix.

    Column p holds ``scores[:, p] - max_{k != p} scores[:, k]``.
    """
    scores = np.asarray(scores, dtype=float)
    n, q = scores.shape
    if q == 1:
        return np.full((n, 1), np.inf)
    order = np.argsort(-scores, axis=1, kind="stable")
    rows = np.arange(n)
    top = scores[rows, order[:, 0]]
    second = scores[rows, order[:, 1]]
    best_other = np.where(np.arange(q)[None, :] == order[:, :1], second[:, None], top[:, None])
    return scores - best_other


def margins(scores: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Margin of each instance under its (1-based) label."""
    y = np.asarray(y, dtype=np.int64)
    return margins_for_all_labels(scores)[np.arange(len(y)), y - 1]


def hinge(xi: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.asarray(xi, dtype=float))


def clamped_loss(xi: np.ndarray) -> np.ndarray:
    return np.clip(1.0 - np.asarray(xi, dtype=float), 0.0, 1.0)


def instance_losses(model: LinearModel, X: np.ndarray, y: np.ndarray, clamp: bool = True) -> np.ndarray:
    xi = margins(model.scores(X), y)
    return clamped_loss(xi) if clamp else hinge(xi)
