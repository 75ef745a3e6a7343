"""The parameter hierarchy: root, demographic nodes, environments, dataset leaves."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (AgeGroup, CollectionMode, Dataset, Gender, N_SYMPTOMS,
                   SubgroupKey, N_GENDERS)
from .stats import ppv_vector

ROOT, AGE, GENDER, ENV, LEAF = "root", "age", "gender", "env", "leaf"


@dataclass(frozen=True)
class NodeId:
    kind: str
    value: Optional[str] = None

    def __str__(self):
        return self.kind if self.value is None else f"{self.kind}:{self.value}"

    @classmethod
    def parse(cls, s: str) -> "NodeId":
        kind, _, value = s.partition(":")
        return cls(kind, value or None)


def root() -> NodeId:
    return NodeId(ROOT)


def age_node(a: AgeGroup) -> NodeId:
    return NodeId(AGE, a.value)


def gender_node(g: Gender) -> NodeId:
    return NodeId(GENDER, g.value)


def env_node(m: CollectionMode) -> NodeId:
    return NodeId(ENV, m.value)


def leaf_node(name: str) -> NodeId:
    return NodeId(LEAF, name)


@dataclass(frozen=True)
class HierarchyGraph:
    nodes: tuple[NodeId, ...]
    parents: dict = field(hash=False)
    population: bool = True

    def index(self, n: NodeId) -> int:
        return self._pos[n]

    @property
    def _pos(self):
        pos = self.__dict__.get("_pos_cache")
        if pos is None:
            pos = {n: i for i, n in enumerate(self.nodes)}
            object.__setattr__(self, "_pos_cache", pos)
        return pos

    @property
    def leaves(self) -> list[NodeId]:
        return [n for n in self.nodes if n.kind == LEAF]

    def children(self, n: NodeId) -> list[NodeId]:
        return [c for c in self.nodes if n in self.parents[c]]

    @property
    def dim(self) -> int:
        return N_SYMPTOMS * len(self.nodes)


def build_hierarchy(datasets: Sequence[Dataset], population: bool = True) -> HierarchyGraph:
    """Build the node graph for ``datasets``.

    With ``population=False`` the demographic layer is dropped and environment
    nodes hang directly off the root (the ``Hier`` ablation).
    """
    if not datasets:
        raise ValueError("need at least one dataset")
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate dataset names: {names}")

    r = root()
    nodes = [r]
    parents: dict[NodeId, list[NodeId]] = {r: []}
    demo = []
    if population:
        demo = [age_node(a) for a in AgeGroup] + [gender_node(g) for g in Gender]
        for n in demo:
            nodes.append(n)
            parents[n] = [r]
    modes = [m for m in CollectionMode if any(d.mode is m for d in datasets)]
    for m in modes:
        n = env_node(m)
        nodes.append(n)
        parents[n] = list(demo) if population else [r]
    for d in datasets:
        n = leaf_node(d.name)
        nodes.append(n)
        parents[n] = [env_node(d.mode)]
    return HierarchyGraph(tuple(nodes), parents, population)


def _node_pool(n: NodeId, datasets: Sequence[Dataset]):
    """Concatenated (X, y) of every labeled record pooled at node ``n``."""
    Xs, ys = [], []
    for d in datasets:
        lab = d.labeled_mask
        if n.kind == ROOT:
            m = lab
        elif n.kind == LEAF:
            if d.name != n.value:
                continue
            m = lab
        elif n.kind == ENV:
            if d.mode.value != n.value:
                continue
            m = lab
        elif n.kind == AGE:
            m = lab & (d.ages == AgeGroup(n.value).index)
        elif n.kind == GENDER:
            m = lab & (d.genders == Gender(n.value).index)
        else:
            raise ValueError(f"unknown node kind {n.kind}")
        Xs.append(d.X[m])
        ys.append(d.y[m])
    if not Xs:
        return np.zeros((0, N_SYMPTOMS), dtype=np.int8), np.zeros(0, dtype=np.int8)
    return np.concatenate(Xs), np.concatenate(ys)


def empirical_centers(graph: HierarchyGraph, datasets: Sequence[Dataset],
                      laplace: float = 1.0) -> dict[NodeId, np.ndarray]:
    """Prior center of every node: smoothed per-symptom PPV of its record pool.

    Unlabeled records contribute nothing; an empty pool yields 0.5 everywhere.
    """
    return {n: ppv_vector(*_node_pool(n, datasets), laplace=laplace) for n in graph.nodes}


def hierarchy_subgroup_components(graph: HierarchyGraph, key: SubgroupKey, dataset: str
                                  ) -> tuple[NodeId, NodeId, NodeId]:
    leaf = leaf_node(dataset)
    if leaf not in graph.parents:
        raise KeyError(f"unknown dataset {dataset!r}")
    a, g = age_node(key.age), gender_node(key.gender)
    if a not in graph.parents or g not in graph.parents:
        raise KeyError("graph has no demographic nodes")
    return leaf, a, g


def subgroup_component_rows(graph: HierarchyGraph, dataset: str) -> np.ndarray:
    """``(10, 3)`` node-index table: leaf/age/gender node for each subgroup index."""
    leaf = graph.index(leaf_node(dataset))
    rows = np.empty((len(AgeGroup) * N_GENDERS, 3), dtype=np.int64)
    for i in range(rows.shape[0]):
        k = SubgroupKey.from_index(i)
        rows[i] = (leaf, graph.index(age_node(k.age)), graph.index(gender_node(k.gender)))
    return rows
