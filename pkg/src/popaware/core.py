"""Domain types shared by every module: symptoms, demographics, records, datasets.

Symptom vectors always use the canonical order ``fever, cough, muscle_pain,
sore_throat``.  Subgroups are the ten (age group, gender) cells; their integer
index is ``age.index * 2 + gender.index`` throughout the package.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

SYMPTOMS = ("fever", "cough", "muscle_pain", "sore_throat")
N_SYMPTOMS = len(SYMPTOMS)


class AgeGroup(enum.Enum):
    A0_4 = "0-4"
    A5_15 = "5-15"
    A16_44 = "16-44"
    A45_64 = "45-64"
    A65plus = "65+"

    @property
    def index(self) -> int:
        return _AGE_ORDER.index(self)

    @classmethod
    def from_label(cls, label: str) -> "AgeGroup":
        return cls(label)


_AGE_ORDER = list(AgeGroup)
N_AGES = len(_AGE_ORDER)


class Gender(enum.Enum):
    Male = "M"
    Female = "F"

    @property
    def index(self) -> int:
        return _GENDER_ORDER.index(self)


_GENDER_ORDER = list(Gender)
N_GENDERS = len(_GENDER_ORDER)
N_SUBGROUPS = N_AGES * N_GENDERS


class CollectionMode(enum.Enum):
    CitizenScience = "cs"
    HealthWorker = "hw"


class Role(enum.Enum):
    Source = "source"
    Target = "target"


@dataclass(frozen=True, order=True)
class SubgroupKey:
    age: AgeGroup = field(compare=False)
    gender: Gender = field(compare=False)
    index: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", self.age.index * N_GENDERS + self.gender.index)

    @classmethod
    def from_index(cls, i: int) -> "SubgroupKey":
        return cls(_AGE_ORDER[i // N_GENDERS], _GENDER_ORDER[i % N_GENDERS])

    @property
    def label(self) -> str:
        return f"{self.age.value}/{self.gender.value}"


ALL_SUBGROUPS = tuple(SubgroupKey.from_index(i) for i in range(N_SUBGROUPS))


@dataclass(frozen=True)
class Record:
    x: tuple[int, int, int, int]
    age: AgeGroup
    gender: Gender
    y: Optional[int] = None

    def __post_init__(self):
        x = tuple(int(v) for v in self.x)
        if len(x) != N_SYMPTOMS or any(v not in (0, 1) for v in x):
            raise ValueError(f"symptom vector must be {N_SYMPTOMS} bits, got {self.x!r}")
        object.__setattr__(self, "x", x)
        if self.y is not None:
            if self.y not in (0, 1):
                raise ValueError(f"label must be 0 or 1, got {self.y!r}")
            object.__setattr__(self, "y", int(self.y))

    @property
    def key(self) -> SubgroupKey:
        return SubgroupKey(self.age, self.gender)

    @property
    def labeled(self) -> bool:
        return self.y is not None


@dataclass(frozen=True, eq=False)
class Dataset:
    """A named collection of records from one collection environment.

    Array views (``X``, ``groups``, ``y``) are computed once and cached; ``y``
    uses ``-1`` for unlabeled records.
    """

    name: str
    mode: CollectionMode
    role: Role
    records: tuple[Record, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.role is Role.Source and any(r.y is None for r in self.records):
            raise ValueError(f"source dataset {self.name!r} has unlabeled records")

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.name, self.mode, self.role, self.records) == (
            other.name, other.mode, other.role, other.records)

    __hash__ = None

    @classmethod
    def from_arrays(cls, name, mode, role, X, groups, y) -> "Dataset":
        recs = []
        for xi, gi, yi in zip(np.asarray(X).tolist(), np.asarray(groups).tolist(), np.asarray(y).tolist()):
            k = SubgroupKey.from_index(gi)
            recs.append(Record(tuple(xi), k.age, k.gender, None if yi < 0 else yi))
        ds = cls(name, mode, role, tuple(recs))
        # seed the caches with the arrays we already have
        ds.__dict__["X"] = np.asarray(X, dtype=np.int8).reshape(-1, N_SYMPTOMS)
        ds.__dict__["groups"] = np.asarray(groups, dtype=np.int64)
        ds.__dict__["y"] = np.asarray(y, dtype=np.int8)
        return ds

    @cached_property
    def X(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, N_SYMPTOMS), dtype=np.int8)
        return np.array([r.x for r in self.records], dtype=np.int8)

    @cached_property
    def groups(self) -> np.ndarray:
        return np.array([r.key.index for r in self.records], dtype=np.int64)

    @cached_property
    def y(self) -> np.ndarray:
        return np.array([-1 if r.y is None else r.y for r in self.records], dtype=np.int8)

    @property
    def ages(self) -> np.ndarray:
        return self.groups // N_GENDERS

    @property
    def genders(self) -> np.ndarray:
        return self.groups % N_GENDERS

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.y >= 0

    def with_role(self, role: Role) -> "Dataset":
        if role is self.role:
            return self
        return Dataset.from_arrays(self.name, self.mode, role, self.X, self.groups, self.y)

    def mask_labels(self, keep: Iterable[int]) -> "Dataset":
        """Return a copy where only records in ``keep`` retain their label."""
        keep = np.asarray(list(keep), dtype=np.int64)
        y = np.full(len(self), -1, dtype=np.int8)
        y[keep] = self.y[keep]
        return Dataset.from_arrays(self.name, self.mode, self.role, self.X, self.groups, y)


def subgroup_partition(d: Dataset) -> dict[SubgroupKey, list[int]]:
    if len(d) == 0:
        raise ValueError("dataset is empty")
    buckets: dict[SubgroupKey, list[int]] = {k: [] for k in ALL_SUBGROUPS}
    for i, g in enumerate(d.groups.tolist()):
        buckets[ALL_SUBGROUPS[g]].append(i)
    return buckets


def split_labeled(d: Dataset, fraction: float, seed: int, stratify: bool = True
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Draw a labeled training subset of size ``round(fraction * n)``.

    Candidates are the labeled records of ``d``.  When ``stratify`` is set,
    each (subgroup, label) cell first contributes ``floor(fraction * size)``
    members; the remaining slots are filled by simple random sampling from
    whatever is left.  Returns sorted ``(train, test)`` index arrays.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    cand = np.flatnonzero(d.labeled_mask)
    n = len(cand)
    n_train = int(math.floor(fraction * n + 0.5))
    rng = np.random.default_rng(seed)

    chosen = np.zeros(len(d), dtype=bool)
    if stratify and n_train < n:
        cells = d.groups[cand] * 2 + d.y[cand]
        for c in np.unique(cells):
            members = cand[cells == c]
            quota = int(math.floor(fraction * len(members) + 1e-9))
            if quota:
                chosen[rng.choice(members, size=quota, replace=False)] = True
    rest = cand[~chosen[cand]]
    need = n_train - int(chosen.sum())
    if need > 0:
        chosen[rng.choice(rest, size=need, replace=False)] = True

    train = np.flatnonzero(chosen)
    test = cand[~chosen[cand]]
    return train, test


def as_records(X: Sequence[Sequence[int]], ages, genders, ys=None) -> list[Record]:
    ys = ys if ys is not None else [None] * len(X)
    return [Record(tuple(x), a, g, y) for x, a, g, y in zip(X, ages, genders, ys)]
