"""Synthetic multi-environment data following the selection-diagram structure.

Sampling is ancestral: subgroup ``(a, g)`` from the dataset's own mixture
(selection bias), ``y`` from a prevalence table shared by every dataset, base
symptoms from ``P(x_j | y, a, g)``, then per-environment bit noise on the
reported symptoms (feature instability).  Nothing environment-specific ever
touches ``y``.

All default numbers are synthetic.  Dataset sizes and overall positive rates
follow the four influenza studies; everything else was picked to make
symptoms predictive and the two kinds of instability visible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (ALL_SUBGROUPS, CollectionMode, Dataset, N_SUBGROUPS, N_SYMPTOMS,
                   Record, Role)

CS, HW = CollectionMode.CitizenScience, CollectionMode.HealthWorker


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    mode: CollectionMode
    size: int
    mix: tuple  # probability over the 10 subgroup indices


@dataclass(frozen=True)
class DgpConfig:
    datasets: tuple
    prevalence: tuple          # (10,) P(y=1 | a, g)
    emission: tuple            # (10, 2, 4) P(x_j=1 | y, a, g)
    distortion: dict = field(hash=False)  # mode -> (4, 2): (p_keep_if_1, p_report_if_0)
    target: str = "goviral"

    def __post_init__(self):
        prev = np.asarray(self.prevalence, dtype=float)
        emis = np.asarray(self.emission, dtype=float)
        if prev.shape != (N_SUBGROUPS,):
            raise ValueError("prevalence must have one entry per subgroup")
        if emis.shape != (N_SUBGROUPS, 2, N_SYMPTOMS):
            raise ValueError("emission must have shape (10, 2, 4)")
        arrays = [prev, emis] + [np.asarray(v, dtype=float) for v in self.distortion.values()]
        for spec in self.datasets:
            mix = np.asarray(spec.mix, dtype=float)
            if mix.shape != (N_SUBGROUPS,) or abs(mix.sum() - 1.0) > 1e-9:
                raise ValueError(f"mixture of {spec.name!r} must be 10 probabilities summing to 1")
            if spec.size < 0:
                raise ValueError("dataset size must be >= 0")
            if spec.mode not in self.distortion:
                raise ValueError(f"no distortion for mode {spec.mode}")
            arrays.append(mix)
        for a in arrays:
            if np.any(a < 0) or np.any(a > 1):
                raise ValueError("all probabilities must lie in [0, 1]")
        if self.target not in self.names:
            raise ValueError(f"target {self.target!r} is not a configured dataset")

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.datasets]

    def spec(self, name: str) -> DatasetSpec:
        for s in self.datasets:
            if s.name == name:
                return s
        raise KeyError(name)

    def resized(self, sizes: dict) -> "DgpConfig":
        specs = tuple(DatasetSpec(s.name, s.mode, sizes.get(s.name, s.size), s.mix)
                      for s in self.datasets)
        return DgpConfig(specs, self.prevalence, self.emission, self.distortion, self.target)

    def with_target(self, target: str) -> "DgpConfig":
        return DgpConfig(self.datasets, self.prevalence, self.emission, self.distortion, target)


@dataclass(frozen=True, eq=False)
class GeneratedBundle:
    datasets: tuple
    config: DgpConfig
    seed: int

    def __getitem__(self, name: str) -> Dataset:
        for d in self.datasets:
            if d.name == name:
                return d
        raise KeyError(name)


def _sample_block(cfg: DgpConfig, spec: DatasetSpec, n: int, rng: np.random.Generator):
    prev = np.asarray(cfg.prevalence)
    emis = np.asarray(cfg.emission)
    dist = np.asarray(cfg.distortion[spec.mode])
    groups = rng.choice(N_SUBGROUPS, size=n, p=np.asarray(spec.mix))
    y = (rng.random(n) < prev[groups]).astype(np.int8)
    base = rng.random((n, N_SYMPTOMS)) < emis[groups, y]
    u = rng.random((n, N_SYMPTOMS))
    reported = np.where(base, u < dist[:, 0], u < dist[:, 1])
    return reported.astype(np.int8), groups.astype(np.int64), y


def sample_record(cfg: DgpConfig, dataset: str, rng: np.random.Generator) -> Record:
    X, groups, y = _sample_block(cfg, cfg.spec(dataset), 1, rng)
    k = ALL_SUBGROUPS[int(groups[0])]
    return Record(tuple(X[0].tolist()), k.age, k.gender, int(y[0]))


def generate(cfg: DgpConfig, seed: int) -> GeneratedBundle:
    """Draw every configured dataset; streams are spawned per dataset from ``seed``."""
    streams = np.random.SeedSequence(seed).spawn(len(cfg.datasets))
    out = []
    for spec, ss in zip(cfg.datasets, streams):
        X, groups, y = _sample_block(cfg, spec, spec.size, np.random.default_rng(ss))
        role = Role.Target if spec.name == cfg.target else Role.Source
        out.append(Dataset.from_arrays(spec.name, spec.mode, role, X, groups, y))
    return GeneratedBundle(tuple(out), cfg, seed)


def _mix(**weights) -> tuple:
    """Subgroup mixture from keyword weights like ``a16_44_f=30``; normalized."""
    ages = ["a0_4", "a5_15", "a16_44", "a45_64", "a65"]
    v = np.zeros(N_SUBGROUPS)
    for key, w in weights.items():
        age, g = key.rsplit("_", 1)
        v[ages.index(age) * 2 + (0 if g == "m" else 1)] = w
    v = v / v.sum()
    return tuple(float(p) for p in v)


def _emission() -> tuple:
    # (y=0, y=1) rows per age band; order fever, cough, muscle_pain, sore_throat
    young = ((0.25, 0.40, 0.20, 0.40), (0.85, 0.80, 0.55, 0.55))
    # the two working-age bands lean on different symptoms
    adult = ((0.15, 0.30, 0.35, 0.20), (0.85, 0.45, 0.40, 0.80))
    middle = ((0.40, 0.45, 0.15, 0.35), (0.45, 0.85, 0.80, 0.40))
    older = ((0.55, 0.30, 0.20, 0.35), (0.25, 0.85, 0.75, 0.60))  # fever points the other way
    bands = [young, young, adult, middle, older]
    rows = []
    for i in range(N_SUBGROUPS):
        neg, pos = bands[i // 2]
        # women report muscle pain a little more often
        bump = 0.05 if i % 2 else 0.0
        neg = (neg[0], neg[1], neg[2] + bump, neg[3])
        pos = (pos[0], pos[1], pos[2] + bump, pos[3])
        rows.append((neg, pos))
    return tuple(rows)


def default_config() -> DgpConfig:
    """Four datasets mirroring the influenza studies' sizes and demographics."""
    # P(y=1 | a, g) as (male, female) per age band
    prev = (0.50, 0.55,   # 0-4
            0.72, 0.76,   # 5-15
            0.12, 0.78,   # 16-44
            0.35, 0.70,   # 45-64
            0.55, 0.62)   # 65+
    datasets = (
        DatasetSpec("goviral", CS, 520, _mix(
            a16_44_m=21, a16_44_f=40, a45_64_m=14, a45_64_f=23, a65_f=2)),
        DatasetSpec("fluwatch", CS, 915, _mix(
            a0_4_m=2, a0_4_f=2, a5_15_m=6, a5_15_f=8, a16_44_m=5, a16_44_f=15,
            a45_64_m=12, a45_64_f=34, a65_m=7, a65_f=9)),
        DatasetSpec("hongkong", HW, 4954, _mix(
            a0_4_m=1, a0_4_f=1, a5_15_m=3, a5_15_f=3, a16_44_m=56, a16_44_f=5,
            a45_64_m=20, a45_64_f=3, a65_m=4, a65_f=4)),
        DatasetSpec("hutterite", HW, 1281, _mix(
            a0_4_m=7, a0_4_f=7, a5_15_m=22, a5_15_f=22, a16_44_m=10, a16_44_f=11,
            a45_64_m=6, a45_64_f=6, a65_m=4, a65_f=5)),
    )
    distortion = {
        # citizen science: self-report loses and invents symptoms more often
        CS: ((0.75, 0.25), (0.85, 0.20), (0.70, 0.25), (0.80, 0.25)),
        HW: ((0.97, 0.03), (0.95, 0.05), (0.95, 0.05), (0.95, 0.05)),
    }
    return DgpConfig(datasets, prev, _emission(), distortion, target="goviral")


def expected_positive_rate(cfg: DgpConfig, name: str) -> float:
    return float(np.dot(cfg.spec(name).mix, cfg.prevalence))


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def empirical_mixture(d: Dataset) -> np.ndarray:
    return np.bincount(d.groups, minlength=N_SUBGROUPS) / max(len(d), 1)
