"""Independent reference implementations used by the tests.

Each oracle recomputes a quantity from its definition by enumeration or
generic numerical optimization, sharing no code with the package.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize


def brute_force_assignment(c, v, counts, bigM):
    """Minimum of sum_i cost(y_i, i) over all labelings with the given class counts.

    Candidate cells cost v_i * c, non-candidate cells cost bigM.
    Returns (best_cost, best_labels_0based) or (inf, None) if infeasible.
    """
    q, n = c.shape
    best, arg = np.inf, None
    for ys in itertools.product(range(q), repeat=n):
        if list(np.bincount(ys, minlength=q)) != list(counts):
            continue
        total = 0.0
        for i, p in enumerate(ys):
            total += bigM if c[p, i] == bigM else v[i] * c[p, i]
        if total < best:
            best, arg = total, ys
    return best, arg


def candidate_feasible(mask, counts):
    """Whether some labeling uses only candidate cells and meets the counts."""
    q, n = mask.shape
    for ys in itertools.product(range(q), repeat=n):
        if all(mask[p, i] for i, p in enumerate(ys)) and list(np.bincount(ys, minlength=q)) == list(counts):
            return True
    return False


def prior_counts(candidates, q):
    """Class quotas with exact fractions and a plain largest-remainder pass."""
    n = len(candidates)
    hat = [Fraction(0)] * q
    for s in candidates:
        for p in s:
            hat[p - 1] += Fraction(1, len(s))
    floors = [h.numerator // h.denominator for h in hat]
    frac = [h - f for h, f in zip(hat, floors)]
    out = list(floors)
    residual = n - sum(floors)
    for p in sorted(range(q), key=lambda p: (-frac[p], p))[:residual]:
        out[p] += 1
    return out, hat


def sp_weight_grid(L, lam, step=1e-4):
    """Grid minimizer of v*L + lam/2*(v^2 - 2v) over v in [0, 1]."""
    grid = np.arange(0.0, 1.0 + step / 2, step)
    obj = grid * L + 0.5 * lam * (grid**2 - 2 * grid)
    k = int(np.argmin(obj))
    return grid[k], obj[k]


def margin_by_enumeration(scores, y):
    """score_y minus the largest other score, by looping over classes (y 1-based)."""
    best = -np.inf
    for k, s in enumerate(scores):
        if k != y - 1 and s > best:
            best = s
    return scores[y - 1] - best


def mcsvm_objective_oracle(X, y, v, C, q, starts=6, seed=0):
    """Weighted multi-class max-margin objective by multi-start SLSQP.

    Epigraph form: min 1/2|theta|^2 + C sum v_i xi_i subject to
    xi_i >= 0 and xi_i >= 1 - (f_{y_i} - f_m) for m != y_i, where theta stacks
    per-class weights and biases. ``y`` is 0-based.
    """
    rng = np.random.default_rng(seed)
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    D = q * (d + 1)
    rows, rhs = [], []
    for i in range(n):
        for m in range(q):
            row = np.zeros(D + n)
            row[D + i] = 1.0
            if m != y[i]:
                row[y[i] * (d + 1):(y[i] + 1) * (d + 1)] += Xa[i]
                row[m * (d + 1):(m + 1) * (d + 1)] -= Xa[i]
                rhs.append(1.0)
            else:
                rhs.append(0.0)
            rows.append(row)
    A, b = np.array(rows), np.array(rhs)

    def f(z):
        return 0.5 * z[:D] @ z[:D] + C * v @ z[D:]

    def g(z):
        return np.concatenate([z[:D], C * v])

    cons = [{"type": "ineq", "fun": lambda z: A @ z - b, "jac": lambda z: A}]
    best = np.inf
    for _ in range(starts):
        z0 = rng.normal(size=D + n)
        z0[D:] = np.abs(z0[D:]) + 3.0
        res = minimize(f, z0, jac=g, constraints=cons, method="SLSQP",
                       options={"ftol": 1e-12, "maxiter": 2000})
        if res.success:
            # refine the slack exactly for the found theta
            theta = res.x[:D].reshape(q, d + 1)
            s = Xa @ theta.T
            xi = np.empty(n)
            for i in range(n):
                other = max(s[i, m] for m in range(q) if m != y[i]) if q > 1 else -np.inf
                xi[i] = max(0.0, 1.0 - (s[i, y[i]] - other))
            best = min(best, 0.5 * np.sum(theta**2) + C * v @ xi)
    return best


def scalar_1d_oracle(C):
    """Two points x=-1 (class 1) and x=+1 (class 2): minimize over (w1,b1,w2,b2).

    By symmetry only u = w2 - w1 and t = b2 - b1 matter for the loss, and the
    regularizer is minimized at w1 = -w2, b1 = -b2, giving |theta|^2 = (u^2 + t^2)/2.
    A dense grid over (u, t) followed by local refinement finds the optimum.
    """
    def obj(z):
        u, t = z
        h1 = max(0.0, 1.0 - (u - t))  # margin of x=-1 under class 1
        h2 = max(0.0, 1.0 - (u + t))  # margin of x=+1 under class 2
        return 0.25 * (u * u + t * t) + C * (h1 + h2)

    us = np.linspace(-5, 5, 401)
    best = min(((obj((u, t)), u, t) for u in us for t in us[::4]), key=lambda r: r[0])
    res = minimize(obj, x0=[best[1], best[2]], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
    return min(best[0], res.fun)


def objective_by_summation(W, b, X, y, v, C, lam):
    """Training objective term by term with plain loops (y 1-based)."""
    n = X.shape[0]
    reg = 0.0
    for p in range(W.shape[0]):
        reg += 0.5 * (float(W[p] @ W[p]) + b[p] ** 2)
    loss = 0.0
    sp = 0.0
    for i in range(n):
        s = [float(W[p] @ X[i] + b[p]) for p in range(W.shape[0])]
        xi = margin_by_enumeration(s, y[i])
        loss += v[i] * min(1.0, max(0.0, 1.0 - xi))
        sp += 0.5 * lam * (v[i] ** 2 - 2 * v[i])
    return C * loss + reg + sp


def brute_force_assignment_fast(c, v, counts, bigM):
    """Same as ``brute_force_assignment`` but enumerates with numpy."""
    q, n = c.shape
    grids = np.indices((q,) * n).reshape(n, -1).T  # every labeling, one per row
    ok = np.ones(len(grids), dtype=bool)
    for p in range(q):
        ok &= (grids == p).sum(axis=1) == counts[p]
    grids = grids[ok]
    if len(grids) == 0:
        return np.inf
    picked = c[grids, np.arange(n)[None, :]]
    cost = np.where(picked == bigM, bigM, picked * np.asarray(v)[None, :]).sum(axis=1)
    return float(cost.min())
