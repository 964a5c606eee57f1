"""Domain types shared by every part of the package.

Class labels are 1-based on every public surface. Arrays are stored as
read-only numpy arrays so instances can be shared between workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional, Sequence

import numpy as np


class PLLError(Exception):
    """Base class for package errors."""


class ValidationError(PLLError):
    """A dataset violates one of its invariants."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class EmptyCandidateSet(ValidationError):
    def __init__(self, i: int):
        super().__init__(f"instance {i}: empty candidate set", i)


class LabelOutOfRange(ValidationError):
    def __init__(self, i: int, label: int, q: int):
        super().__init__(f"instance {i}: label {label} outside 1..{q}", i)
        self.label = label


class TruthNotInCandidates(ValidationError):
    def __init__(self, i: int, truth: int):
        super().__init__(f"instance {i}: true label {truth} not among candidates", i)


class NonFiniteFeature(ValidationError):
    def __init__(self, i: int, j: int):
        super().__init__(f"instance {i}: feature {j} is not finite", i)
        self.feature = j


class DimensionMismatch(PLLError, ValueError):
    """Shapes of model, data or weight vectors disagree."""


class NoGroundTruth(PLLError):
    """An evaluation was requested on a dataset without true labels."""


class TooFewInstances(PLLError):
    """Fewer instances than folds."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PartialLabelDataset:
    """n instances with d features, each carrying a candidate label set.

    ``candidates`` is a tuple of sorted tuples of 1-based labels.
    ``truth`` is only used for evaluation and may be ``None``.
    """

    features: np.ndarray
    candidates: tuple[tuple[int, ...], ...]
    q: int
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch(f"features must be 2-D, got shape {X.shape}")
        object.__setattr__(self, "features", _frozen(X))
        cands = tuple(tuple(sorted(set(int(l) for l in s))) for s in self.candidates)
        object.__setattr__(self, "candidates", cands)
        if len(cands) != X.shape[0]:
            raise DimensionMismatch(f"{len(cands)} candidate sets for {X.shape[0]} instances")
        if self.truth is not None:
            t = np.asarray(self.truth, dtype=np.int64)
            if t.shape != (X.shape[0],):
                raise DimensionMismatch("truth must have one entry per instance")
            object.__setattr__(self, "truth", _frozen(t))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def candidate_mask(self) -> np.ndarray:
        """Boolean (n, q) matrix, column p-1 true when label p is a candidate."""
        mask = np.zeros((self.n, self.q), dtype=bool)
        for i, s in enumerate(self.candidates):
            mask[i, np.asarray(s, dtype=np.int64) - 1] = True
        return mask

    def subset(self, idx: Sequence[int]) -> "PartialLabelDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return PartialLabelDataset(
            features=self.features[idx],
            candidates=tuple(self.candidates[i] for i in idx),
            q=self.q,
            truth=None if self.truth is None else self.truth[idx],
        )

    def with_features(self, X: np.ndarray) -> "PartialLabelDataset":
        return replace(self, features=X)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartialLabelDataset):
            return NotImplemented
        if self.q != other.q or self.candidates != other.candidates:
            return False
        if self.features.shape != other.features.shape:
            return False
        if not np.array_equal(self.features, other.features):
            return False
        if (self.truth is None) != (other.truth is None):
            return False
        return self.truth is None or np.array_equal(self.truth, other.truth)

    __hash__ = None  # type: ignore[assignment]


def validate(dataset: PartialLabelDataset) -> None:
    """Raise the first violated dataset invariant; return None when valid.

    Instances are checked in order and, within an instance, candidates are
    checked before truth and features, so the error names the first offender.
    Indices in errors are 1-based like the file format's line numbers.
    """
    if dataset.q < 1:
        raise ValidationError(f"q must be positive, got {dataset.q}")
    X = dataset.features
    finite = np.isfinite(X)
    for i, s in enumerate(dataset.candidates):
        if len(s) == 0:
            raise EmptyCandidateSet(i + 1)
        for label in s:
            if not 1 <= label <= dataset.q:
                raise LabelOutOfRange(i + 1, label, dataset.q)
        if dataset.truth is not None:
            t = int(dataset.truth[i])
            if t not in s:
                raise TruthNotInCandidates(i + 1, t)
        if not finite[i].all():
            j = int(np.flatnonzero(~finite[i])[0])
            raise NonFiniteFeature(i + 1, j + 1)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Per-class weight rows and biases; scores are ``weights @ x + biases``."""

    weights: np.ndarray
    biases: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.biases, dtype=float)
        if W.ndim != 2 or b.shape != (W.shape[0],):
            raise DimensionMismatch(f"weights {W.shape} and biases {b.shape} disagree")
        if not (np.isfinite(W).all() and np.isfinite(b).all()):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "weights", _frozen(W))
        object.__setattr__(self, "biases", _frozen(b))

    @property
    def q(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def zeros(cls, q: int, d: int) -> "LinearModel":
        return cls(np.zeros((q, d)), np.zeros(q))

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Class scores, shape (n, q) for a matrix or (q,) for a single vector."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.d:
            raise DimensionMismatch(f"model has d={self.d}, input has {X.shape[-1]} features")
        return X @ self.weights.T + self.biases

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (
            self.weights.shape == other.weights.shape
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.biases, other.biases)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class SelfPacedState:
    v: np.ndarray
    lam: float
    C: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if v.ndim != 1 or np.any(v < 0) or np.any(v > 1):
            raise ValueError("sample weights must lie in [0, 1]")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.C > 0:
            raise ValueError("C must be positive")
        object.__setattr__(self, "v", _frozen(v))


@dataclass(frozen=True, eq=False)
class Assignment:
    """1-based label per instance plus the number of non-candidate picks."""

    y: np.ndarray
    violations: int = 0

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen(np.asarray(self.y, dtype=np.int64)))

    def counts(self, q: int) -> np.ndarray:
        return np.bincount(self.y - 1, minlength=q)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.violations == other.violations and np.array_equal(self.y, other.y)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class TrainConfig:
    """Schedules and tolerances for training.

    Defaults follow the experimental setup: C grows by a factor ``1 + Delta``
    from ``C_init`` to ``C_max`` and the pace parameter by ``mu`` from
    ``lambda0`` until it exceeds ``lambda_max``. ``reset_pace`` restarts the
    weights and the pace at every C stage; ``weight_by_C`` scales losses by C
    before the weight update; ``keep_nonempty`` skips weight updates that
    would admit no sample; ``strict_descent`` rejects inner steps that raise
    the objective.
    """

    C_init: float = 0.01
    C_max: float = 10.0
    Delta: float = 0.5
    lambda0: float = 0.6
    mu: float = 1.05
    lambda_max: float = 1.0
    delta_ofv: float = 1e-3
    bigM: float = 1e6
    svm_tol: float = 1e-4
    svm_max_iter: int = 1000
    seed: int = 0
    max_inner: int = 50
    standardize: bool = True
    reset_pace: bool = True
    warm_start: bool = True
    self_paced: bool = True
    weight_by_C: bool = True
    strict_descent: bool = True
    keep_nonempty: bool = True

    def __post_init__(self):
        problems = []
        if not 0 < self.C_init <= self.C_max:
            problems.append("need 0 < C_init <= C_max")
        if not self.Delta > 0:
            problems.append("Delta must be positive")
        if not self.mu > 1:
            problems.append("mu must exceed 1")
        if not 0 < self.lambda0:
            problems.append("lambda0 must be positive")
        if not self.lambda_max > 0:
            problems.append("lambda_max must be positive")
        if not self.delta_ofv > 0:
            problems.append("delta_ofv must be positive")
        if not self.bigM > 1:
            problems.append("bigM must exceed 1")
        if not self.svm_tol > 0 or self.svm_max_iter < 1 or self.max_inner < 1:
            problems.append("solver tolerances and budgets must be positive")
        if problems:
            raise ValueError("invalid TrainConfig: " + "; ".join(problems))

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})
