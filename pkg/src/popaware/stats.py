"""Counting statistics: symptom PPV, conditional-difference measures, AUC."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .core import Dataset, N_SYMPTOMS, SubgroupKey


def _arrays(records):
    """Accept a Dataset, a list of Records, or an ``(X, y)`` pair; keep labeled rows."""
    if isinstance(records, Dataset):
        X, y = records.X, records.y
    elif isinstance(records, tuple) and len(records) == 2 and isinstance(records[0], np.ndarray):
        X, y = records
    else:
        recs = list(records)
        X = np.array([r.x for r in recs], dtype=np.int8).reshape(-1, N_SYMPTOMS)
        y = np.array([-1 if r.y is None else r.y for r in recs], dtype=np.int8)
    X = np.asarray(X).reshape(-1, N_SYMPTOMS)
    y = np.asarray(y)
    keep = y >= 0
    return X[keep], y[keep]


def ppv(records, j: int, laplace: float = 1.0) -> float:
    """Smoothed positive predictive value of symptom ``j``: P(y=1 | x_j=1)."""
    X, y = _arrays(records)
    present = X[:, j] == 1
    num = float(np.count_nonzero(present & (y == 1))) + laplace
    den = float(np.count_nonzero(present)) + 2.0 * laplace
    if den == 0.0:
        return 0.5
    return num / den


def ppv_vector(X: np.ndarray, y: np.ndarray, laplace: float = 1.0) -> np.ndarray:
    """All four PPVs at once; rows with ``y < 0`` are ignored."""
    keep = y >= 0
    X, y = X[keep], y[keep]
    present = X == 1
    num = (present & (y[:, None] == 1)).sum(axis=0) + laplace
    den = present.sum(axis=0) + 2.0 * laplace
    out = np.full(N_SYMPTOMS, 0.5)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def p_diff(records, j: int, y: int = 1) -> Optional[float]:
    """``|P(x_j=1 | Y=y) - P(x_j=0 | Y=y)|``; ``None`` when no record has ``Y=y``."""
    X, labels = _arrays(records)
    sel = labels == y
    n = int(np.count_nonzero(sel))
    if n == 0:
        return None
    p1 = np.count_nonzero(X[sel, j] == 1) / n
    return abs(2.0 * p1 - 1.0)


def delta(records, y: int = 1) -> Optional[float]:
    """Mean of :func:`p_diff` over the four symptoms, or ``None`` if undefined."""
    X, labels = _arrays(records)
    sel = labels == y
    n = int(np.count_nonzero(sel))
    if n == 0:
        return None
    p1 = (X[sel] == 1).sum(axis=0) / n
    return float(np.mean(np.abs(2.0 * p1 - 1.0)))


def prevalence(records) -> Optional[float]:
    _, y = _arrays(records)
    if len(y) == 0:
        return None
    return float(np.mean(y == 1))


@dataclass(frozen=True)
class SubgroupStats:
    """Local-vs-population statistics for one subgroup; ``None`` marks undefined."""

    delta_local: Optional[float]
    delta_pop: Optional[float]
    prev_local: Optional[float]
    prev_pop: Optional[float]
    n_local: int
    n_pop: int


def subgroup_stats(target: Dataset, all_datasets: Sequence[Dataset], key: SubgroupKey,
                   condition_y: int = 1) -> SubgroupStats:
    """Statistics of ``key`` in ``target``'s labeled records vs the pooled population.

    The population pool is the union of the subgroup's labeled records over
    every dataset in ``all_datasets`` (the target included if listed).
    """
    def slice_of(d):
        m = (d.groups == key.index) & d.labeled_mask
        return d.X[m], d.y[m]

    Xl, yl = slice_of(target)
    parts = [slice_of(d) for d in all_datasets]
    Xp = np.concatenate([p[0] for p in parts]) if parts else np.zeros((0, N_SYMPTOMS))
    yp = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0)
    return SubgroupStats(
        delta_local=delta((Xl, yl), condition_y),
        delta_pop=delta((Xp, yp), condition_y),
        prev_local=prevalence((Xl, yl)),
        prev_pop=prevalence((Xp, yp)),
        n_local=len(yl),
        n_pop=len(yp),
    )


def information(p: float) -> float:
    """Self-information ``-ln p``."""
    if not p > 0.0:
        raise ValueError(f"information needs p > 0, got {p}")
    return -math.log(p)


def auc(scores: Sequence[float], labels: Sequence[int]) -> Optional[float]:
    """Mann-Whitney AUC with ties counted as one half.

    Returns ``None`` when either class is absent.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError(f"scores and labels must be 1-d of equal length, got {s.shape} and {y.shape}")
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    return kernels.auc_sorted(s, (y == 1).astype(np.uint8), n_pos, n_neg)
