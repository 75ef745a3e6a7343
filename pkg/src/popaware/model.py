"""End-to-end hierarchical model: centers, MAP fit, blend classifiers, scoring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .blend import score_dataset, train_subgroup_classifiers
from .core import Dataset
from .hierarchy import build_hierarchy, empirical_centers, leaf_node
from .optimizer import FittedHierarchy, ObjectiveSpec, fit_hierarchy
from .stats import ppv_vector


@dataclass
class HierModel:
    fitted: FittedHierarchy
    classifiers: dict
    spec: ObjectiveSpec

    def score(self, d: Dataset) -> np.ndarray:
        return score_dataset(self.classifiers, self.fitted, d)

    def choices(self, dataset: str) -> dict:
        """Subgroup key -> theta choice label ('' when no decision is made)."""
        return {k: (c.choice.choice if c.choice else "")
                for (name, k), c in self.classifiers.items() if name == dataset}


def build_spec(datasets: Sequence[Dataset], population: bool = True, lambda_: float = 1.0,
               beta: float = 0.2, alpha: float = 0.1, squared: bool = True) -> ObjectiveSpec:
    graph = build_hierarchy(datasets, population=population)
    centers = empirical_centers(graph, datasets)
    leaf_stats = {leaf_node(d.name): ppv_vector(d.X, d.y) for d in datasets}
    return ObjectiveSpec(graph, centers, leaf_stats, lambda_, beta, alpha, squared)


def fit_model(datasets: Sequence[Dataset], population: bool = True, *, lambda_: float = 1.0,
              beta: float = 0.2, alpha: float = 0.1, tau: float = 0.9,
              tol: float = 1e-6, max_iter: int = 500, min_samples: int = 5,
              squared: bool = True, only: Optional[Sequence[str]] = None,
              backend=None) -> HierModel:
    """Fit the hierarchy on the visible labels of ``datasets`` and train classifiers.

    ``datasets`` must already have held-out labels masked.  ``only`` limits
    classifier training to the named datasets.
    """
    spec = build_spec(datasets, population, lambda_, beta, alpha, squared)
    fitted = fit_hierarchy(spec, tol=tol, max_iter=max_iter, backend=backend)
    classifiers = train_subgroup_classifiers(fitted, datasets, tau=tau,
                                             min_samples=min_samples, only=only)
    return HierModel(fitted, classifiers, spec)
