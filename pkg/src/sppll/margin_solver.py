"""Instance-weighted multi-class maximum-margin training.

Minimizes ``1/2 * sum_p ||w_p||^2 + C * sum_i v_i * hinge_i`` where
``hinge_i = max(0, 1 - (f_{y_i}(x_i) - max_{k != y_i} f_k(x_i)))``.

Biases are handled by appending a constant feature of 1.0, so they are
regularized together with the weights. The solver is the Crammer-Singer
dual, optimized one instance block at a time; instance ``i``'s dual block is
capped at ``C * v_i`` and instances with ``v_i = 0`` are never touched.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .types import Assignment, DimensionMismatch, LinearModel, TrainConfig


@dataclass
class DualState:
    """Dual variables of a finished solve, reusable as a warm start."""

    alpha: np.ndarray  # (n, q)
    labels: np.ndarray  # (n,) 0-based
    caps: np.ndarray  # (n,)


@dataclass
class SolverStatus:
    objective: float
    iterations: int
    kkt_violation: float
    converged: bool
    dual_history: list[float] = field(default_factory=list, repr=False)
    state: Optional[DualState] = field(default=None, repr=False)


@njit(cache=True)
def _solve_block(A, B, y, cap, out):
    # min 1/2 A |a|^2 + B.a  s.t. sum(a) = 0, a_y <= cap, a_m <= 0 (m != y)
    q = B.shape[0]
    D = B.copy()
    D[y] += A * cap
    D = np.sort(D)[::-1]
    beta = D[0] - A * cap
    r = 1
    while r < q and beta < r * D[r]:
        beta += D[r]
        r += 1
    beta /= r
    for m in range(q):
        ub = cap if m == y else 0.0
        out[m] = min(ub, (beta - B[m]) / A)


@njit(cache=True)
def _sweep(Xa, sqnorm, labels, caps, alpha, W, order, update):
    n, dim = Xa.shape
    q = W.shape[0]
    G = np.empty(q)
    B = np.empty(q)
    new = np.empty(q)
    worst = 0.0
    for t in range(order.shape[0]):
        i = order[t]
        cap = caps[i]
        if cap <= 0.0:
            continue
        y = labels[i]
        for m in range(q):
            s = 0.0
            for j in range(dim):
                s += W[m, j] * Xa[i, j]
            G[m] = s if m == y else s + 1.0
        maxG = -np.inf
        minG = np.inf
        for m in range(q):
            if G[m] > maxG:
                maxG = G[m]
            ub = cap if m == y else 0.0
            if alpha[i, m] < ub and G[m] < minG:
                minG = G[m]
        viol = maxG - minG
        if viol > worst:
            worst = viol
        if not update or viol <= 1e-12:
            continue
        A = sqnorm[i]
        for m in range(q):
            B[m] = G[m] - A * alpha[i, m]
        _solve_block(A, B, y, cap, new)
        for m in range(q):
            delta = new[m] - alpha[i, m]
            if delta != 0.0:
                alpha[i, m] = new[m]
                for j in range(dim):
                    W[m, j] += delta * Xa[i, j]
    return worst


def augment(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _labels0(y, n: int, q: int) -> np.ndarray:
    arr = np.asarray(y.y if isinstance(y, Assignment) else y, dtype=np.int64)
    if arr.shape != (n,):
        raise DimensionMismatch(f"expected {n} labels, got shape {arr.shape}")
    if arr.size and (arr.min() < 1 or arr.max() > q):
        raise DimensionMismatch(f"labels must lie in 1..{q}")
    return arr - 1


def primal_objective(model: LinearModel, X: np.ndarray, y, v: np.ndarray, C: float) -> float:
    """Objective value with the bias counted in the regularizer."""
    from .losses import instance_losses

    yy = np.asarray(y.y if isinstance(y, Assignment) else y)
    reg = 0.5 * (np.sum(model.weights**2) + np.sum(model.biases**2))
    v = np.asarray(v, dtype=float)
    active = v > 0
    if not active.any():
        return float(reg)
    h = instance_losses(model, np.asarray(X)[active], yy[active], clamp=False)
    return float(reg + C * np.dot(v[active], h))


def _dual_value(W: np.ndarray, alpha: np.ndarray, labels: np.ndarray) -> float:
    # the minimized dual; its negation lower-bounds the primal optimum
    lin = alpha.sum() - alpha[np.arange(len(labels)), labels].sum()
    return float(0.5 * np.sum(W * W) + lin)


def train_weighted_mcsvm(
    X: np.ndarray,
    y,
    v: np.ndarray,
    C: float,
    config: TrainConfig | None = None,
    q: int | None = None,
    warm: DualState | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[LinearModel, SolverStatus]:
    """Fit per-class weights and biases for fixed labels ``y`` and weights ``v``.

    Parameters
    ----------
    X : (n, d) array
    y : Assignment or (n,) array of 1-based labels
    v : (n,) array in [0, 1]
    C : float
        Regularization trade-off; instance i's effective cap is ``C * v[i]``.
    config : TrainConfig, optional
        Supplies ``svm_tol``, ``svm_max_iter`` and ``seed``.
    q : int, optional
        Number of classes; defaults to the largest label present.
    warm : DualState, optional
        Dual variables from an earlier solve on the same instances. Blocks
        whose label changed are reset; blocks whose cap shrank are rescaled.
    rng : numpy Generator, optional
        Source of the per-sweep visiting order; defaults to one seeded with
        ``config.seed``.

    Returns
    -------
    (LinearModel, SolverStatus)
    """
    config = config or TrainConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("X must be 2-D")
    n, d = X.shape
    if q is None:
        yy = np.asarray(y.y if isinstance(y, Assignment) else y)
        q = int(yy.max()) if yy.size else 1
    labels = _labels0(y, n, q)
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise DimensionMismatch(f"expected {n} weights, got shape {v.shape}")
    if np.any(v < 0) or np.any(v > 1):
        raise ValueError("weights must lie in [0, 1]")
    if not C > 0:
        raise ValueError("C must be positive")
    rng = rng if rng is not None else np.random.default_rng(config.seed)

    caps = C * v
    active = np.flatnonzero(caps > 0)
    Xa = augment(X)
    sqnorm = np.einsum("ij,ij->i", Xa, Xa)
    alpha = np.zeros((n, q))
    if warm is not None and warm.alpha.shape == (n, q):
        keep = (warm.labels == labels) & (caps > 0)
        alpha[keep] = warm.alpha[keep]
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(warm.caps > caps, caps / warm.caps, 1.0)
        alpha *= np.where(keep, scale, 0.0)[:, None]
    W = np.ascontiguousarray(alpha[active].T @ Xa[active]) if active.size else np.zeros((q, d + 1))

    history = [_dual_value(W, alpha, labels)]
    converged = active.size == 0 or q == 1
    sweeps = 0
    worst = 0.0
    while not converged and sweeps < config.svm_max_iter:
        order = rng.permutation(active)
        worst = _sweep(Xa, sqnorm, labels, caps, alpha, W, order, True)
        sweeps += 1
        history.append(_dual_value(W, alpha, labels))
        if worst <= config.svm_tol:
            # violations seen mid-sweep are stale; confirm on the final iterate
            worst = _sweep(Xa, sqnorm, labels, caps, alpha, W, active, False)
            converged = worst <= config.svm_tol
    if active.size and q > 1 and not converged:
        worst = _sweep(Xa, sqnorm, labels, caps, alpha, W, active, False)

    model = LinearModel(W[:, :d].copy(), W[:, d].copy(), {"C": C, "seed": config.seed, "solver": "cs-dual"})
    status = SolverStatus(
        objective=primal_objective(model, X, labels + 1, v, C),
        iterations=sweeps,
        kkt_violation=float(worst),
        converged=bool(converged),
        dual_history=history,
        state=DualState(alpha, labels, caps),
    )
    return model, status


def train_mcsvm(X: np.ndarray, y, C: float, config: TrainConfig | None = None, q: int | None = None):
    """Unweighted multi-class SVM (every instance weight 1)."""
    X = np.asarray(X, dtype=float)
    return train_weighted_mcsvm(X, y, np.ones(X.shape[0]), C, config, q=q)


def predict(model: LinearModel, x: np.ndarray) -> int:
    """Arg-max class (1-based); ties go to the smallest index."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.d,):
        raise DimensionMismatch(f"expected a {model.d}-vector, got shape {x.shape}")
    return int(np.argmax(model.scores(x))) + 1


def predict_many(model: LinearModel, X: np.ndarray) -> np.ndarray:
    return np.argmax(model.scores(np.asarray(X, dtype=float)), axis=1) + 1
