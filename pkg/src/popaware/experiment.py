"""Experiment protocol: split the target, fit every method, score held-out records."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .baselines import BASELINES, _model_kwargs, _visible, run_baseline
from .core import ALL_SUBGROUPS, Dataset, Role, split_labeled
from .data_io import ExperimentConfig, ResultRow
from .model import fit_model
from .stats import auc

log = logging.getLogger(__name__)

ALL = "ALL"


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)
    # (method, label_fraction, seed) -> (test indices, scores); not serialized
    predictions: dict = field(default_factory=dict, repr=False)
    models: dict = field(default_factory=dict, repr=False)

    def extend(self, other: "ExperimentResult") -> None:
        self.rows.extend(other.rows)
        self.predictions.update(other.predictions)
        self.models.update(other.models)

    def select(self, **crit) -> list:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in crit.items())]


def split_seed(seed: int, fraction: float) -> int:
    """Seed for the target split of one (seed, fraction) cell.

    Derived from the pair alone so any cell can be rerun in isolation.
    """
    ss = np.random.SeedSequence([int(seed), int(round(fraction * 1_000_000))])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _prepare(cfg: ExperimentConfig, datasets: Sequence[Dataset]) -> list[Dataset]:
    by_name = {d.name: d for d in datasets}
    missing = [n for n in cfg.datasets if n not in by_name]
    if missing:
        raise KeyError(f"datasets not available: {missing}")
    out = []
    for name in cfg.datasets:
        d = by_name[name]
        role = Role.Target if name == cfg.target else Role.Source
        out.append(d.with_role(role))
    return out


def _cell_rows(method, target: Dataset, test_idx, scores, fraction, seed, choices=None):
    y = target.y[test_idx]
    groups = target.groups[test_idx]
    rows = [ResultRow(method, target.name, ALL, ALL, fraction, seed, auc(scores, y), "")]
    for key in ALL_SUBGROUPS:
        m = groups == key.index
        val = auc(scores[m], y[m]) if m.any() else None
        choice = choices.get(key, "") if choices else ""
        rows.append(ResultRow(method, target.name, key.age.value, key.gender.value,
                              fraction, seed, val, choice))
    return rows


def run_experiment(config: ExperimentConfig, datasets: Sequence[Dataset],
                   keep_models: bool = False) -> ExperimentResult:
    """Run every configured method for every seed at ``config.label_fraction``."""
    data = _prepare(config, datasets)
    target = data[0]
    fraction = config.label_fraction
    result = ExperimentResult()
    for seed in config.seeds:
        train_idx, test_idx = split_labeled(target, fraction, split_seed(seed, fraction),
                                            stratify=config.stratify)
        if len(test_idx) == 0:
            log.warning("seed %s: no held-out target records at fraction %s", seed, fraction)
        test_set = set(test_idx.tolist())
        for method in config.methods:
            choices = None
            if method == "Hier_pop":
                visible = _visible(data, target, train_idx)
                model = fit_model(visible, population=True, only=[target.name],
                                  **_model_kwargs(config))
                scores = model.score(target)[test_idx]
                used = train_idx
                choices = model.choices(target.name)
                if keep_models:
                    result.models[(method, fraction, seed)] = model
            else:
                run = run_baseline(method, data, target.name, (train_idx, test_idx), config)
                scores, used = run.scores, run.train_target_indices
                if keep_models:
                    result.models[(method, fraction, seed)] = run.extra.get("model")
            if test_set.intersection(np.asarray(used).tolist()):
                raise RuntimeError(f"{method}: training labels overlap the evaluation set")
            result.predictions[(method, fraction, seed)] = (test_idx, scores)
            result.rows.extend(_cell_rows(method, target, test_idx, scores, fraction, seed, choices))
    return result


@dataclass(frozen=True)
class SweepPoint:
    method: str
    dataset: str
    label_fraction: float
    n_seeds: int
    mean_auc: Optional[float]            # overall AUC averaged over seeds
    mean_subgroup_auc: Optional[float]   # per-seed mean of defined subgroup AUCs, averaged over seeds


SWEEP_HEADER = ("method", "dataset", "label_fraction", "n_seeds", "mean_auc", "mean_subgroup_auc")


def summarize(rows: Sequence[ResultRow]) -> list[SweepPoint]:
    overall = defaultdict(list)
    subgroup = defaultdict(lambda: defaultdict(list))
    for r in rows:
        cell = (r.method, r.dataset, r.label_fraction)
        if r.age_group == ALL:
            overall[cell].append((r.seed, r.auc))
        elif r.auc is not None:
            subgroup[cell][r.seed].append(r.auc)
    out = []
    for cell, vals in overall.items():
        defined = [a for _, a in vals if a is not None]
        per_seed = [float(np.mean(v)) for _, v in sorted(subgroup[cell].items()) if v]
        out.append(SweepPoint(cell[0], cell[1], cell[2], len(vals),
                              float(np.mean(defined)) if defined else None,
                              float(np.mean(per_seed)) if per_seed else None))
    return out


def label_fraction_sweep(config: ExperimentConfig, datasets: Sequence[Dataset],
                         fractions: Sequence[float], seeds: Optional[Sequence[int]] = None
                         ) -> tuple[ExperimentResult, list[SweepPoint]]:
    if not fractions:
        raise ValueError("need at least one label fraction")
    seeds = tuple(seeds) if seeds is not None else config.seeds
    raw = ExperimentResult()
    for f in fractions:
        raw.extend(run_experiment(replace(config, label_fraction=float(f), seeds=seeds), datasets))
    return raw, summarize(raw.rows)


def write_sweep(points: Sequence[SweepPoint], path) -> None:
    from pathlib import Path
    fmt = lambda v: "-" if v is None else f"{v:.6f}"
    lines = [",".join(SWEEP_HEADER)]
    for p in points:
        lines.append(f"{p.method},{p.dataset},{float(p.label_fraction)!r},{p.n_seeds},"
                     f"{fmt(p.mean_auc)},{fmt(p.mean_subgroup_auc)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
