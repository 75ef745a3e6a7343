"""Comparison methods run under the same split as the hierarchical model.

TR (target only) and LR (pooled) are L2-regularized logistic regressions on
the four symptoms.  FEDA replicates features into one shared block plus one
block per domain; FEDA_pop first appends one-hot age and gender indicators.
Hier is the hierarchical model without demographic nodes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import N_AGES, N_GENDERS, N_SYMPTOMS, Dataset
from .model import fit_model

log = logging.getLogger(__name__)

BASELINES = ("TR", "LR", "FEDA", "FEDA_pop", "Hier")
DEFAULT_L2 = 1e-3
DEFAULT_EPOCHS = 5000


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    degenerate: bool = False
    converged: bool = True
    epochs: int = 0

    def decision(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logreg_loss(w, b, X, y, l2, weight=None):
    """Mean log-loss plus ``l2/2 * ||w||^2``; ``weight`` gives per-row multiplicity."""
    z = X @ w + b
    per_row = np.logaddexp(0.0, z) - y * z
    if weight is None:
        nll = per_row.mean()
    else:
        nll = per_row @ weight / weight.sum()
    return float(nll + 0.5 * l2 * np.dot(w, w))


def _compress(X, y):
    """Collapse duplicate feature rows: returns unique rows, positive share, multiplicity."""
    uniq, inv = np.unique(X, axis=0, return_inverse=True)
    inv = inv.ravel()
    count = np.bincount(inv, minlength=len(uniq)).astype(np.float64)
    pos = np.bincount(inv, weights=y, minlength=len(uniq))
    return uniq, pos / count, count


def train_logreg(features, labels, l2: float = DEFAULT_L2, max_epochs: int = DEFAULT_EPOCHS,
                 gtol: float = 1e-6) -> LogRegModel:
    """Full-batch gradient descent with backtracking on the mean log-loss.

    The bias is not penalized.  One-class input returns a constant model
    flagged ``degenerate``.  Duplicate rows are merged first, which leaves the
    loss unchanged but makes each epoch cost O(unique rows).
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"features {X.shape} do not match labels {y.shape}")
    n, d = X.shape
    w = np.zeros(d)
    if n == 0 or y.min() == y.max():
        return LogRegModel(w, 0.0, degenerate=True, epochs=0)
    rate = y.mean()
    b = float(np.log(rate / (1.0 - rate)))
    X, y, weight = _compress(X, y)
    frac = weight / n
    step = 1.0
    loss = logreg_loss(w, b, X, y, l2, weight)
    converged = False
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        r = (_sigmoid(X @ w + b) - y) * frac
        gw = X.T @ r + l2 * w
        gb = float(r.sum())
        gmax = max(np.max(np.abs(gw), initial=0.0), abs(gb))
        if gmax < gtol:
            converged = True
            break
        gsq = float(gw @ gw + gb * gb)
        step *= 2.0
        while True:
            w_new, b_new = w - step * gw, b - step * gb
            new_loss = logreg_loss(w_new, b_new, X, y, l2, weight)
            if new_loss <= loss - 0.5 * step * gsq or step < 1e-12:
                break
            step *= 0.5
        w, b, loss = w_new, b_new, new_loss
    return LogRegModel(w, b, converged=converged, epochs=epoch)


def feda_augment(x, i: int, K: int) -> np.ndarray:
    """Shared copy in block 0, domain copy in block ``i + 1``, zeros elsewhere."""
    x = np.asarray(x, dtype=np.float64)
    if not 0 <= i < K:
        raise IndexError(f"domain index {i} out of range for K={K}")
    d = x.shape[-1]
    out = np.zeros(x.shape[:-1] + ((K + 1) * d,))
    out[..., :d] = x
    out[..., (i + 1) * d:(i + 2) * d] = x
    return out


def feda_augment_rows(X, domains, K: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    domains = np.asarray(domains)
    if np.any(domains < 0) or np.any(domains >= K):
        raise IndexError("domain index out of range")
    n, d = X.shape
    out = np.zeros((n, (K + 1) * d))
    out[:, :d] = X
    for k in range(K):
        m = domains == k
        out[m, (k + 1) * d:(k + 2) * d] = X[m]
    return out


def demographic_features(d: Dataset) -> np.ndarray:
    """Symptoms followed by 5 age and 2 gender one-hot indicators."""
    n = len(d)
    out = np.zeros((n, N_SYMPTOMS + N_AGES + N_GENDERS))
    out[:, :N_SYMPTOMS] = d.X
    out[np.arange(n), N_SYMPTOMS + d.ages] = 1.0
    out[np.arange(n), N_SYMPTOMS + N_AGES + d.genders] = 1.0
    return out


@dataclass
class BaselineRun:
    method: str
    scores: np.ndarray                     # on the target's test records
    train_target_indices: np.ndarray       # target records whose labels were used
    extra: dict = field(default_factory=dict)


def _visible(datasets: Sequence[Dataset], target: Dataset, train_idx) -> list[Dataset]:
    return [target.mask_labels(train_idx) if d.name == target.name else d for d in datasets]


def run_baseline(method: str, datasets: Sequence[Dataset], target: str, split,
                 cfg=None, l2: float = DEFAULT_L2, max_epochs: int = DEFAULT_EPOCHS) -> BaselineRun:
    """Train ``method`` on sources + the target's training split; score the target test split.

    ``split`` is the ``(train, test)`` index pair from :func:`split_labeled`.
    ``cfg`` supplies model hyperparameters for ``Hier`` and the FEDA domain
    granularity; defaults apply when it is ``None``.
    """
    if method not in BASELINES:
        raise ValueError(f"unknown baseline {method!r}; choose from {BASELINES}")
    train_idx, test_idx = (np.asarray(s, dtype=np.int64) for s in split)
    tgt = next(d for d in datasets if d.name == target)
    sources = [d for d in datasets if d.name != target]

    if method == "Hier":
        visible = _visible(datasets, tgt, train_idx)
        kw = _model_kwargs(cfg)
        model = fit_model(visible, population=False, only=[target], **kw)
        scores = model.score(tgt)[test_idx]
        return BaselineRun(method, scores, train_idx, {"model": model})

    if method == "TR":
        X = tgt.X[train_idx].astype(np.float64)
        y = tgt.y[train_idx]
        m = train_logreg(X, y, l2, max_epochs)
        return BaselineRun(method, m.decision(tgt.X[test_idx]), train_idx, {"model": m})

    if method == "LR":
        X = np.vstack([d.X for d in sources] + [tgt.X[train_idx]]).astype(np.float64)
        y = np.concatenate([d.y for d in sources] + [tgt.y[train_idx]])
        m = train_logreg(X, y, l2, max_epochs)
        return BaselineRun(method, m.decision(tgt.X[test_idx]), train_idx, {"model": m})

    # FEDA / FEDA_pop
    feats = demographic_features if method == "FEDA_pop" else (lambda d: d.X.astype(np.float64))
    by_mode = cfg is not None and getattr(cfg, "feda_domain", "dataset") == "mode"
    if by_mode:
        modes = sorted({d.mode.value for d in datasets})
        dom = {d.name: modes.index(d.mode.value) for d in datasets}
        K = len(modes)
    else:
        dom = {d.name: i for i, d in enumerate(datasets)}
        K = len(datasets)
    parts_X, parts_y = [], []
    for d in sources:
        parts_X.append(feda_augment_rows(feats(d), np.full(len(d), dom[d.name]), K))
        parts_y.append(d.y)
    ft = feats(tgt)
    parts_X.append(feda_augment_rows(ft[train_idx], np.full(len(train_idx), dom[tgt.name]), K))
    parts_y.append(tgt.y[train_idx])
    m = train_logreg(np.vstack(parts_X), np.concatenate(parts_y), l2, max_epochs)
    Xt = feda_augment_rows(ft[test_idx], np.full(len(test_idx), dom[tgt.name]), K)
    return BaselineRun(method, m.decision(Xt), train_idx, {"model": m, "K": K})


def _model_kwargs(cfg) -> dict:
    if cfg is None:
        return {}
    return dict(lambda_=cfg.lambda_, beta=cfg.beta, alpha=cfg.alpha, tau=cfg.tau,
                tol=cfg.powell_tol, max_iter=cfg.powell_max_iter,
                min_samples=cfg.min_samples, squared=cfg.squared_div)
