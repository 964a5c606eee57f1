"""Soft self-paced weighting: regularizer, closed-form weights, pace schedule."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np


class NonPositiveLambda(ValueError):
    pass


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise NonPositiveLambda(f"pace parameter must be positive, got {lam}")


def update_weights(losses: np.ndarray, lam: float) -> np.ndarray:
    """Minimizer of ``v*L + lam/2 * (v**2 - 2v)`` over v in [0, 1], per sample.

    Samples whose loss exceeds ``lam`` get weight 0; the rest get
    ``1 - L/lam``.
    """
    _check_lambda(lam)
    L = np.asarray(losses, dtype=float)
    if not np.all(np.isfinite(L)) or np.any(L < 0):
        raise ValueError("losses must be finite and non-negative")
    return np.where(L <= lam, 1.0 - L / lam, 0.0)


def regularizer_value(v: np.ndarray, lam: float) -> float:
    _check_lambda(lam)
    v = np.asarray(v, dtype=float)
    return float(np.sum(0.5 * lam * (v * v - 2.0 * v)))


@dataclass(frozen=True)
class PaceSchedule:
    """Geometric growth ``lam <- mu * lam`` while ``lam <= lambda_max``.

    At least one stage is always produced, even when ``lambda0`` already
    exceeds ``lambda_max``.
    """

    lambda0: float = 0.6
    mu: float = 1.05
    lambda_max: float = 1.0

    def __post_init__(self):
        _check_lambda(self.lambda0)
        if not self.mu > 1:
            raise ValueError("mu must exceed 1")

    def __iter__(self) -> Iterator[float]:
        lam = self.lambda0
        yield lam
        lam *= self.mu
        while lam <= self.lambda_max:
            yield lam
            lam *= self.mu

    def stages(self) -> list[float]:
        return list(self)
