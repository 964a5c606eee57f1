"""Class-balanced label assignment as a transportation problem.

Each instance takes exactly one class and class p takes exactly ``n_p``
instances; giving candidate class p to instance i costs ``v_i * c[p, i]`` and a
non-candidate class costs ``bigM``.
The problem is solved exactly as a min-cost flow: every instance first takes
its cheapest class, then surplus classes shed instances to deficit classes
along shortest paths of the class exchange graph (successive shortest paths
on the residual network, where a step a -> b moves the cheapest instance of
class a over to class b).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .data_io import PriorCounts
from .losses import clamped_loss, margins_for_all_labels
from .types import Assignment, DimensionMismatch, LinearModel, PartialLabelDataset, PLLError

EPS = 1e-12


class CountMismatch(PLLError, ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """(q, n) costs; non-candidate cells hold exactly ``bigM``."""

    c: np.ndarray
    bigM: float

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def q(self) -> int:
        return self.c.shape[0]

    @property
    def n(self) -> int:
        return self.c.shape[1]

    def candidate_mask(self) -> np.ndarray:
        return self.c != self.bigM


def _mask_qn(dataset: PartialLabelDataset) -> np.ndarray:
    return dataset.candidate_mask().T


def build_cost_matrix(model: LinearModel, dataset: PartialLabelDataset, bigM: float = 1e6) -> CostMatrix:
    """Clamped loss of every candidate label, ``bigM`` elsewhere."""
    if model.q != dataset.q or model.d != dataset.d:
        raise DimensionMismatch(f"model is {model.q}x{model.d}, dataset is q={dataset.q}, d={dataset.d}")
    loss = clamped_loss(margins_for_all_labels(model.scores(dataset.features))).T
    return CostMatrix(np.where(_mask_qn(dataset), loss, bigM), bigM)


def init_cost_matrix(dataset: PartialLabelDataset, bigM: float = 1e6) -> CostMatrix:
    """``1/|S_i|`` on candidate cells, ``bigM`` elsewhere."""
    mask = _mask_qn(dataset)
    sizes = mask.sum(axis=0)
    return CostMatrix(np.where(mask, 1.0 / sizes[None, :], bigM), bigM)


@njit(cache=True)
def _less(k1, c1, k2, c2, eps):
    return k1 < k2 or (k1 == k2 and c1 < c2 - eps)


@njit(cache=True)
def _transport(pen, cost, counts, eps):
    # Costs are pairs (pen, cost) ordered lexicographically: pen counts
    # non-candidate picks exactly, so bigM never enters float arithmetic.
    q, n = cost.shape
    y = np.empty(n, dtype=np.int64)
    load = np.zeros(q, dtype=np.int64)
    for i in range(n):
        best = 0
        for p in range(1, q):
            if _less(pen[p, i], cost[p, i], pen[best, i], cost[best, i], eps):
                best = p
        y[i] = best
        load[best] += 1

    big = n + 1
    arc_k = np.empty((q, q), dtype=np.int64)
    arc_c = np.empty((q, q))
    via = np.empty((q, q), dtype=np.int64)
    dist_k = np.empty(q, dtype=np.int64)
    dist_c = np.empty(q)
    pred = np.empty(q, dtype=np.int64)
    seen = np.zeros(q, dtype=np.bool_)
    while True:
        surplus = False
        for p in range(q):
            if load[p] > counts[p]:
                surplus = True
        if not surplus:
            break
        # cheapest single move a -> b
        for a in range(q):
            for b in range(q):
                arc_k[a, b] = big
                arc_c[a, b] = 0.0
                via[a, b] = -1
        for i in range(n):
            a = y[i]
            for b in range(q):
                if b != a:
                    dk = pen[b, i] - pen[a, i]
                    dc = cost[b, i] - cost[a, i]
                    if via[a, b] < 0 or _less(dk, dc, arc_k[a, b], arc_c[a, b], eps):
                        arc_k[a, b] = dk
                        arc_c[a, b] = dc
                        via[a, b] = i
        # Bellman-Ford from every surplus class
        for p in range(q):
            pred[p] = -1
            if load[p] > counts[p]:
                dist_k[p] = 0
                dist_c[p] = 0.0
            else:
                dist_k[p] = big * q
                dist_c[p] = 0.0
        for _ in range(q):
            changed = False
            for a in range(q):
                if dist_k[a] >= big * q:
                    continue
                for b in range(q):
                    if via[a, b] < 0:
                        continue
                    nk = dist_k[a] + arc_k[a, b]
                    nc = dist_c[a] + arc_c[a, b]
                    if _less(nk, nc, dist_k[b], dist_c[b], eps):
                        dist_k[b] = nk
                        dist_c[b] = nc
                        pred[b] = a
                        changed = True
            if not changed:
                break
        target = -1
        for p in range(q):
            if load[p] < counts[p] and dist_k[p] < big * q:
                if target < 0 or _less(dist_k[p], dist_c[p], dist_k[target], dist_c[target], eps):
                    target = p
        if target < 0:
            return y, False
        # walk back to the surplus class; a repeated class means rounding
        # slack closed a negative cycle, which is cancelled instead
        for p in range(q):
            seen[p] = False
        b = target
        seen[b] = True
        cycle_at = -1
        while pred[b] >= 0:
            b = pred[b]
            if seen[b]:
                cycle_at = b
                break
            seen[b] = True
        if cycle_at >= 0:
            b = cycle_at
            while True:
                a = pred[b]
                y[via[a, b]] = b
                b = a
                if b == cycle_at:
                    break
            continue
        if load[b] <= counts[b]:
            return y, False
        source = b
        b = target
        while b != source:
            a = pred[b]
            y[via[a, b]] = b
            b = a
        load[source] -= 1
        load[target] += 1
    return y, True


def solve_assignment(costs: CostMatrix, v: np.ndarray, counts: PriorCounts) -> Assignment:
    """Exact minimizer of the weighted assignment cost with ``n_p`` instances per class.

    Candidate cells cost ``v_i * c[p, i]``; non-candidate cells cost ``bigM``
    regardless of ``v_i``. The solver compares costs as (non-candidate count,
    weighted candidate cost) pairs, which gives the same optimum as any
    ``bigM`` larger than the total candidate cost while staying exact.
    """
    q, n = costs.c.shape
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise DimensionMismatch(f"expected {n} weights, got shape {v.shape}")
    n_p = counts.n_p
    if n_p.shape != (q,):
        raise DimensionMismatch(f"expected {q} class counts, got {n_p.shape}")
    if counts.total != n:
        raise CountMismatch(f"class counts sum to {counts.total}, expected {n}")
    # bigM cells stay unweighted so zero-weight instances still respect their candidates
    cand = costs.candidate_mask()
    pen = np.ascontiguousarray((~cand).astype(np.int64))
    weighted = np.ascontiguousarray(np.where(cand, costs.c * v[None, :], 0.0))
    y, ok = _transport(pen, weighted, np.ascontiguousarray(n_p, dtype=np.int64), EPS)
    if not ok:
        raise RuntimeError("transportation solver failed to route surplus; cost matrix may contain NaN")
    violations = int(np.count_nonzero(costs.c[y, np.arange(n)] == costs.bigM))
    return Assignment(y + 1, violations)


def assignment_cost(costs: CostMatrix, v: np.ndarray, assignment: Assignment) -> float:
    """Objective minimized by ``solve_assignment`` at a given assignment."""
    y = np.asarray(assignment.y) - 1
    picked = costs.c[y, np.arange(costs.n)]
    return float(np.sum(np.where(picked == costs.bigM, picked, np.asarray(v) * picked)))
