"""Dataset files, synthetic partial-label corruption, and class quotas.

PLC text format (UTF-8, LF line endings)::

    n d q
    f1,f2,...,fd|l1,l2,...,lk[|t]

one instance per line after the header. Labels are 1-based and strictly
increasing within a line; the optional third field is the true label.
Reals are written with ``repr`` so they round-trip bit-exactly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Union

import numpy as np

from .types import (
    LabelOutOfRange,
    LinearModel,
    PartialLabelDataset,
    PLLError,
    ValidationError,
    validate,
)

PathLike = Union[str, Path]


class ParseError(PLLError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NotSupervised(PLLError):
    pass


class RTooLarge(PLLError, ValueError):
    pass


@dataclass(frozen=True)
class PriorCounts:
    """Per-class quotas; ``n_p[p - 1]`` is the quota of class p."""

    n_p: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.n_p, dtype=np.int64)
        if a.ndim != 1 or np.any(a < 0):
            raise ValueError("class counts must be a non-negative vector")
        a.setflags(write=False)
        object.__setattr__(self, "n_p", a)

    @property
    def total(self) -> int:
        return int(self.n_p.sum())


# ---------------------------------------------------------------- PLC files


def _format_labels(labels: Iterable[int]) -> str:
    return ",".join(str(int(l)) for l in labels)


def dumps_dataset(dataset: PartialLabelDataset) -> str:
    lines = [f"{dataset.n} {dataset.d} {dataset.q}"]
    for i in range(dataset.n):
        feats = ",".join(repr(float(f)) for f in dataset.features[i])
        line = f"{feats}|{_format_labels(dataset.candidates[i])}"
        if dataset.truth is not None:
            line += f"|{int(dataset.truth[i])}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def save_dataset(dataset: PartialLabelDataset, path: PathLike) -> None:
    validate(dataset)
    Path(path).write_text(dumps_dataset(dataset), encoding="utf-8", newline="\n")


def _parse_int(token: str, line: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(line, f"{what} {token!r} is not an integer") from None


def loads_dataset(text: str) -> PartialLabelDataset:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(1, "missing header")
    header = lines[0].split()
    if len(header) != 3:
        raise ParseError(1, "header must be 'n d q'")
    n, d, q = (_parse_int(t, 1, "header field") for t in header)
    if n <= 0:
        raise ParseError(1, "n must be positive")
    if d <= 0:
        raise ParseError(1, "d must be positive")
    if q <= 0:
        raise ParseError(1, "q must be positive")
    body = lines[1:]
    if len(body) != n:
        raise ParseError(len(lines) + 1, f"expected {n} instance lines, found {len(body)}")

    X = np.empty((n, d))
    cands: list[tuple[int, ...]] = []
    truth: list[int] = []
    has_truth = None
    for k, raw in enumerate(body):
        lineno = k + 2
        parts = raw.rstrip("\r").split("|")
        if len(parts) not in (2, 3):
            raise ParseError(lineno, "expected 'features|labels' or 'features|labels|truth'")
        if has_truth is None:
            has_truth = len(parts) == 3
        elif has_truth != (len(parts) == 3):
            raise ParseError(lineno, "truth field present on some lines only")
        feats = parts[0].split(",")
        if len(feats) != d:
            raise ParseError(lineno, f"expected {d} features, found {len(feats)}")
        try:
            X[k] = [float(f) for f in feats]
        except ValueError:
            raise ParseError(lineno, "malformed feature value") from None
        if not np.all(np.isfinite(X[k])):
            raise ParseError(lineno, "non-finite feature value")
        if parts[1].strip() == "":
            raise ParseError(lineno, "empty candidate set")
        labels = [_parse_int(t, lineno, "label") for t in parts[1].split(",")]
        for lab in labels:
            if not 1 <= lab <= q:
                raise ParseError(lineno, str(LabelOutOfRange(k + 1, lab, q)))
        if any(a >= b for a, b in zip(labels, labels[1:])):
            raise ParseError(lineno, "labels must be strictly increasing")
        cands.append(tuple(labels))
        if has_truth:
            truth.append(_parse_int(parts[2], lineno, "true label"))

    ds = PartialLabelDataset(X, tuple(cands), q, np.array(truth) if has_truth else None)
    validate(ds)
    return ds


def load_dataset(path: PathLike) -> PartialLabelDataset:
    return loads_dataset(Path(path).read_text(encoding="utf-8"))


def csv_to_dataset(path: PathLike, delimiter: str = ",", skip_header: bool = False) -> PartialLabelDataset:
    """Read a plain CSV whose last column is the class and build a supervised dataset.

    Class values are mapped to 1..q in sorted order (numerically when all of
    them parse as numbers, lexicographically otherwise).
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        if skip_header:
            next(reader, None)
        for row in reader:
            if row and any(cell.strip() for cell in row):
                rows.append([cell.strip() for cell in row])
    if not rows:
        raise ParseError(1, "no data rows")
    width = len(rows[0])
    for k, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(k + 1, f"expected {width} columns, found {len(row)}")
    if width < 2:
        raise ParseError(1, "need at least one feature column and a label column")
    raw_labels = [row[-1] for row in rows]
    try:
        classes = sorted(set(raw_labels), key=float)
    except ValueError:
        classes = sorted(set(raw_labels))
    index = {c: k + 1 for k, c in enumerate(classes)}
    try:
        X = np.array([[float(c) for c in row[:-1]] for row in rows])
    except ValueError as exc:
        raise ParseError(0, f"non-numeric feature: {exc}") from None
    y = np.array([index[c] for c in raw_labels])
    return supervised_dataset(X, y, q=len(classes))


def supervised_dataset(X: np.ndarray, y: np.ndarray, q: int | None = None) -> PartialLabelDataset:
    y = np.asarray(y, dtype=np.int64)
    q = int(y.max()) if q is None else q
    return PartialLabelDataset(X, tuple((int(t),) for t in y), q, y)


# ---------------------------------------------------------------- corruption


def corrupted_count(p: float, n: int) -> int:
    """round(p*n), halves rounded up."""
    return int(math.floor(p * n + 0.5))


def corrupt_labels(supervised: PartialLabelDataset, p: float, r: int, seed: int) -> PartialLabelDataset:
    """Add ``r`` random false candidates to a random ``round(p*n)`` instances.

    Randomness comes from numpy's PCG64 generator (``default_rng(seed)``):
    first the corrupted instances are drawn without replacement, then, in
    increasing instance order, each one's false labels are drawn without
    replacement from the labels other than its truth.
    """
    ds = supervised
    if ds.truth is None or any(s != (int(t),) for s, t in zip(ds.candidates, ds.truth)):
        raise NotSupervised("corruption needs a dataset whose candidate sets are exactly {truth}")
    if not 0 <= r <= ds.q - 1:
        raise RTooLarge(f"r must be ≤ q−1 (q={ds.q}, r={r})")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    k = corrupted_count(p, ds.n)
    if k == 0 or r == 0:
        return ds
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(ds.n, size=k, replace=False))
    cands = list(ds.candidates)
    labels = np.arange(1, ds.q + 1)
    for i in chosen:
        t = int(ds.truth[i])
        others = labels[labels != t]
        false = rng.choice(others, size=r, replace=False)
        cands[i] = tuple(sorted([t, *(int(f) for f in false)]))
    return PartialLabelDataset(ds.features, tuple(cands), ds.q, ds.truth)


# ---------------------------------------------------------------- class quotas


def class_prior_counts(dataset: PartialLabelDataset) -> PriorCounts:
    """Class quotas from candidate frequencies, rounded by largest remainder.

    Each instance spreads one unit of mass uniformly over its candidates; the
    per-class totals are floored and the leftover units go to the classes with
    the largest fractional parts, smaller class index first on ties. Mass is
    accumulated in exact integer arithmetic over a common denominator.
    """
    q = dataset.q
    sizes = np.array([len(s) for s in dataset.candidates], dtype=np.int64)
    if sizes.size == 0:
        return PriorCounts(np.zeros(q, dtype=np.int64))
    mask = dataset.candidate_mask()
    denom = math.lcm(*(int(s) for s in np.unique(sizes)))
    mass = [0] * q
    for size in np.unique(sizes):
        per_class = mask[sizes == size].sum(axis=0)
        share = denom // int(size)
        for p in range(q):
            mass[p] += int(per_class[p]) * share
    floors = [m // denom for m in mass]
    remainders = [m % denom for m in mass]
    residual = dataset.n - sum(floors)
    order = sorted(range(q), key=lambda p: (-remainders[p], p))
    counts = list(floors)
    for p in order[:residual]:
        counts[p] += 1
    return PriorCounts(np.array(counts, dtype=np.int64))


# ---------------------------------------------------------------- models


def model_to_dict(model: LinearModel) -> dict[str, Any]:
    return {
        "q": model.q,
        "d": model.d,
        "weights": [[float(w) for w in row] for row in model.weights],
        "biases": [float(b) for b in model.biases],
        "meta": dict(model.meta),
    }


def model_from_dict(obj: dict[str, Any]) -> LinearModel:
    q, d = int(obj["q"]), int(obj["d"])
    W = np.array(obj["weights"], dtype=float).reshape(q, d)
    b = np.array(obj["biases"], dtype=float)
    if b.shape != (q,):
        raise ValidationError(f"expected {q} biases, found {b.shape}")
    return LinearModel(W, b, dict(obj.get("meta", {})))


def save_model(model: LinearModel, path: PathLike) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path: PathLike) -> LinearModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def gaussian_blobs(n: int, q: int, d: int = 2, separation: float = 3.0, seed: int = 0) -> PartialLabelDataset:
    """Supervised isotropic Gaussian classes (unit variance).

    Class centres sit on a circle of radius ``separation`` in the first two
    coordinates; class sizes differ by at most one.
    """
    rng = np.random.default_rng(seed)
    y = np.arange(n) % q + 1
    rng.shuffle(y)
    angles = 2 * np.pi * np.arange(q) / q
    centres = np.zeros((q, d))
    centres[:, 0] = separation * np.cos(angles)
    if d > 1:
        centres[:, 1] = separation * np.sin(angles)
    X = centres[y - 1] + rng.normal(size=(n, d))
    return supervised_dataset(X, y, q=q)
