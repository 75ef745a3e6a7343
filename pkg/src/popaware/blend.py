"""Second stage: per-subgroup blend weights over leaf/age/gender parameters.

A record ``x`` in subgroup ``(a, g)`` of dataset ``l`` is scored as::

    g0 + g1 * (theta_leaf . x) + g2 * (theta_age . x) + g3 * (theta_gender . x)

with all weights constrained nonnegative and fit by nonnegative least squares
against the 0/1 label.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ALL_SUBGROUPS, Dataset, N_SUBGROUPS, SubgroupKey
from .hierarchy import leaf_node, subgroup_component_rows
from .optimizer import FittedHierarchy
from .stats import SubgroupStats, information, subgroup_stats

LOCAL, INVARIANT = "local", "invariant"
DELTA, PREVALENCE, DEFAULT = "delta", "prevalence", "default"


def nnls(A, b, max_iter: Optional[int] = None, tol: Optional[float] = None):
    """Lawson-Hanson active-set solution of ``min ||A x - b||`` s.t. ``x >= 0``.

    Returns ``(x, residual_norm)``.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    if max_iter is None:
        max_iter = 3 * n + 10
    if tol is None:
        tol = 10.0 * np.finfo(float).eps * max(m, n) * max(1.0, np.abs(A).sum(axis=0).max(initial=0.0)) \
            * max(1.0, np.abs(b).max(initial=0.0))
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ (b - A @ x)
    outer = 0
    while not passive.all() and np.max(np.where(passive, -np.inf, w)) > tol and outer < max_iter:
        outer += 1
        j = int(np.argmax(np.where(passive, -np.inf, w)))
        passive[j] = True
        inner = 0
        while True:
            z = np.zeros(n)
            cols = np.flatnonzero(passive)
            z[cols] = np.linalg.lstsq(A[:, cols], b, rcond=None)[0]
            if np.all(z[cols] > 0):
                x = z
                break
            inner += 1
            if inner > max_iter:
                x = np.clip(z, 0.0, None)
                break
            neg = cols[z[cols] <= 0]
            step = np.min(x[neg] / (x[neg] - z[neg]))
            x = x + step * (z - x)
            drop = passive & (x <= tol)
            x[drop] = 0.0
            passive &= ~drop
        w = A.T @ (b - A @ x)
    return x, float(np.linalg.norm(A @ x - b))


def component_scores(x, components) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=np.float64)
    leaf, age, gender = components
    return float(np.dot(leaf, x)), float(np.dot(age, x)), float(np.dot(gender, x))


def fit_gamma(samples, free=(True, True, True, True)) -> np.ndarray:
    """NNLS fit of ``(g0, g1, g2, g3)`` on rows ``(s_l, s_a, s_g, y)``.

    Components with ``free[i]`` false are held at zero.
    """
    S = np.asarray(samples, dtype=np.float64).reshape(-1, 4)
    if len(S) == 0:
        raise ValueError("fit_gamma needs at least one labeled sample")
    design = np.column_stack([np.ones(len(S)), S[:, :3]])
    cols = np.flatnonzero(free)
    gamma = np.zeros(4)
    gamma[cols] = nnls(design[:, cols], S[:, 3])[0]
    return gamma


@dataclass(frozen=True)
class ThetaChoice:
    choice: str
    reason: str

    def __post_init__(self):
        if (self.choice == LOCAL) != (self.reason in (DELTA, PREVALENCE)):
            raise ValueError(f"inconsistent choice/reason {self.choice}/{self.reason}")


def licensing_select(st: SubgroupStats, tau: float = 0.9) -> ThetaChoice:
    """Decide between the dataset-local leaf and the shared demographic parameters."""
    if st.delta_local is not None and st.delta_pop is not None and st.delta_local < st.delta_pop:
        return ThetaChoice(LOCAL, DELTA)
    if st.prev_local is not None and st.prev_pop is not None and st.prev_local - st.prev_pop >= tau:
        return ThetaChoice(LOCAL, PREVALENCE)
    return ThetaChoice(INVARIANT, DEFAULT)


def licensing_case_oracle(p_local: float, p_pop: float) -> int:
    """Sign of ``I(p_local) - I(p_pop)``: -1, 0 or +1."""
    if p_local <= 0 or p_pop <= 0:
        raise ValueError("probabilities must be positive")
    diff = information(p_local) - information(p_pop)
    return (diff > 0) - (diff < 0)


@dataclass
class SubgroupClassifier:
    key: SubgroupKey
    dataset: str
    gamma: np.ndarray
    choice: Optional[ThetaChoice]
    components: tuple
    inherited: bool = False

    def __post_init__(self):
        if np.any(self.gamma < 0):
            raise ValueError("blend weights must be nonnegative")
        if self.choice is not None and self.choice.choice == LOCAL and (self.gamma[2] or self.gamma[3]):
            raise ValueError("local classifiers carry no demographic weight")


def predict(clf: SubgroupClassifier, x) -> float:
    s = component_scores(x, clf.components)
    g = clf.gamma
    return float(g[0] + g[1] * s[0] + g[2] * s[1] + g[3] * s[2])


def dataset_component_scores(fitted: FittedHierarchy, d: Dataset) -> np.ndarray:
    """``(n, 3)`` leaf/age/gender scores for every record of ``d``.

    Without demographic nodes the last two columns are zero.
    """
    blocks = fitted.flat().reshape(-1, 4)
    X = d.X.astype(np.float64)
    leaf = blocks[fitted.graph.index(leaf_node(d.name))]
    out = np.zeros((len(d), 3))
    out[:, 0] = X @ leaf
    if fitted.graph.population:
        rows = subgroup_component_rows(fitted.graph, d.name)
        per = rows[d.groups]
        out[:, 1] = np.einsum("ij,ij->i", X, blocks[per[:, 1]])
        out[:, 2] = np.einsum("ij,ij->i", X, blocks[per[:, 2]])
    return out


def train_subgroup_classifiers(fitted: FittedHierarchy, datasets: Sequence[Dataset],
                               tau: float = 0.9, min_samples: int = 5,
                               only: Optional[Sequence[str]] = None) -> dict:
    """Fit a blend classifier for every (dataset, subgroup) pair.

    Subgroups with fewer than ``min_samples`` labeled records inherit the
    dataset-level weights.  In the full model each subgroup also gets a
    licensing decision; a local decision refits ``(g0, g1)`` with the
    demographic weights pinned at zero.  Without demographic nodes only
    ``(g0, g1)`` are ever fit and no decision is recorded.
    """
    population = fitted.graph.population
    all_free = (True, True, population, population)
    local_free = (True, True, False, False)
    blocks = fitted.flat().reshape(-1, 4)
    out = {}
    for d in datasets:
        if only is not None and d.name not in only:
            continue
        lab = d.labeled_mask
        if not lab.any():
            raise ValueError(f"dataset {d.name!r} has no labeled records")
        scores = dataset_component_scores(fitted, d)
        samples = np.column_stack([scores, d.y.astype(np.float64)])
        dataset_gamma = fit_gamma(samples[lab], all_free)
        dataset_local = None
        rows = subgroup_component_rows(fitted.graph, d.name) if population else None
        leaf_vec = blocks[fitted.graph.index(leaf_node(d.name))]
        for key in ALL_SUBGROUPS:
            sel = lab & (d.groups == key.index)
            enough = int(sel.sum()) >= min_samples
            gamma = fit_gamma(samples[sel], all_free) if enough else dataset_gamma
            choice = None
            if population:
                choice = licensing_select(subgroup_stats(d, datasets, key), tau)
                if choice.choice == LOCAL:
                    if enough:
                        gamma = fit_gamma(samples[sel], local_free)
                    else:
                        if dataset_local is None:
                            dataset_local = fit_gamma(samples[lab], local_free)
                        gamma = dataset_local
                comps = tuple(blocks[i].copy() for i in rows[key.index])
            else:
                comps = (leaf_vec.copy(), np.zeros(4), np.zeros(4))
            out[(d.name, key)] = SubgroupClassifier(key, d.name, np.array(gamma), choice,
                                                    comps, inherited=not enough)
    return out


def score_dataset(classifiers: dict, fitted: FittedHierarchy, d: Dataset) -> np.ndarray:
    """Blend score for every record of ``d`` using its subgroup's classifier."""
    scores = dataset_component_scores(fitted, d)
    G = np.zeros((N_SUBGROUPS, 4))
    for key in ALL_SUBGROUPS:
        G[key.index] = classifiers[(d.name, key)].gamma
    g = G[d.groups]
    return g[:, 0] + np.einsum("ij,ij->i", g[:, 1:], scores)


def write_classifiers(classifiers: dict, path) -> None:
    lines = ["dataset,age_group,gender,g0,g1,g2,g3,choice,reason"]
    for (name, key), c in sorted(classifiers.items(), key=lambda kv: (kv[0][0], kv[0][1].index)):
        g = ",".join(repr(float(v)) for v in c.gamma)
        choice = c.choice.choice if c.choice else ""
        reason = c.choice.reason if c.choice else ""
        lines.append(f"{name},{key.age.value},{key.gender.value},{g},{choice},{reason}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
