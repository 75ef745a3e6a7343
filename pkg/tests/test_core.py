import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from popaware.core import (ALL_SUBGROUPS, AgeGroup, CollectionMode, Dataset, Gender, Record,
                           Role, SubgroupKey, split_labeled, subgroup_partition)
from popaware.synth import default_config, empirical_mixture, generate


def _dataset(groups, ys, role=Role.Target):
    X = np.zeros((len(groups), 4), dtype=np.int8)
    return Dataset.from_arrays("t", CollectionMode.CitizenScience, role, X, groups, ys)


def test_subgroup_key_index_roundtrip():
    for i, k in enumerate(ALL_SUBGROUPS):
        assert k.index == i
        assert SubgroupKey.from_index(i) == k
    assert SubgroupKey(AgeGroup.A16_44, Gender.Female).label == "16-44/F"


def test_record_validation():
    with pytest.raises(ValueError):
        Record((1, 0, 2, 0), AgeGroup.A0_4, Gender.Male, 1)
    with pytest.raises(ValueError):
        Record((1, 0, 1), AgeGroup.A0_4, Gender.Male, 1)
    with pytest.raises(ValueError):
        Record((1, 0, 1, 0), AgeGroup.A0_4, Gender.Male, 3)
    assert not Record((0, 0, 0, 0), AgeGroup.A65plus, Gender.Female).labeled


def test_source_requires_labels():
    r = Record((1, 1, 0, 0), AgeGroup.A5_15, Gender.Male, None)
    with pytest.raises(ValueError):
        Dataset("s", CollectionMode.HealthWorker, Role.Source, (r,))
    Dataset("t", CollectionMode.HealthWorker, Role.Target, (r,))


def test_from_arrays_matches_records():
    rng = np.random.default_rng(3)
    X = rng.integers(0, 2, size=(25, 4))
    g = rng.integers(0, 10, size=25)
    y = rng.integers(-1, 2, size=25)
    d = Dataset.from_arrays("t", CollectionMode.CitizenScience, Role.Target, X, g, y)
    fresh = Dataset("t", CollectionMode.CitizenScience, Role.Target, d.records)
    assert np.array_equal(fresh.X, d.X)
    assert np.array_equal(fresh.groups, d.groups)
    assert np.array_equal(fresh.y, d.y)
    assert fresh == d


def test_partition_single_group():
    key = SubgroupKey(AgeGroup.A16_44, Gender.Female)
    d = _dataset([key.index] * 4, [1, 0, 1, 1])
    parts = subgroup_partition(d)
    assert parts[key] == [0, 1, 2, 3]
    assert sum(1 for v in parts.values() if not v) == 9


def test_partition_empty_dataset_rejected():
    with pytest.raises(ValueError):
        subgroup_partition(Dataset("t", CollectionMode.CitizenScience, Role.Target, ()))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=1, max_size=80))
def test_partition_property(groups):
    d = _dataset(groups, [0] * len(groups))
    parts = subgroup_partition(d)
    flat = sorted(i for v in parts.values() for i in v)
    assert flat == list(range(len(groups)))
    for key, idx in parts.items():
        assert all(groups[i] == key.index for i in idx)


def test_partition_matches_generator_mixture():
    cfg = default_config()
    d = generate(cfg, 11)["hongkong"]
    n = len(d)
    sizes = np.array([len(v) for v in subgroup_partition(d).values()])
    p = np.asarray(cfg.spec("hongkong").mix)
    # 4 multinomial standard deviations per cell
    assert np.all(np.abs(sizes - n * p) <= 4 * np.sqrt(n * p * (1 - p)) + 1)
    assert np.allclose(empirical_mixture(d), sizes / n)


def test_split_sizes_and_boundary():
    rng = np.random.default_rng(0)
    d = _dataset(rng.integers(0, 10, 100), rng.integers(0, 2, 100))
    tr, te = split_labeled(d, 0.2, seed=5)
    assert len(tr) == 20 and len(te) == 80
    assert set(tr).isdisjoint(te) and set(tr) | set(te) == set(range(100))
    tr, te = split_labeled(d, 1.0, seed=5)
    assert len(tr) == 100 and len(te) == 0
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            split_labeled(d, bad, seed=0)


def test_split_determinism_and_seed_sensitivity():
    rng = np.random.default_rng(1)
    d = _dataset(rng.integers(0, 10, 100), rng.integers(0, 2, 100))
    a = split_labeled(d, 0.3, seed=42)
    b = split_labeled(d, 0.3, seed=42)
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()
    distinct = sum(not np.array_equal(split_labeled(d, 0.3, s)[0], a[0]) for s in range(100))
    assert distinct >= 99


def test_split_ignores_unlabeled():
    d = _dataset([0] * 10, [1, -1, 0, -1, 1, 0, 1, 0, -1, 1])
    tr, te = split_labeled(d, 0.5, seed=0)
    assert len(tr) == round(0.5 * 7)
    assert np.all(d.y[tr] >= 0) and np.all(d.y[te] >= 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 1)), min_size=5, max_size=120),
       st.sampled_from([0.05, 0.1, 0.2, 0.25, 0.5]), st.integers(0, 10_000))
def test_split_stratification(cells, fraction, seed):
    groups = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    d = _dataset(groups, ys)
    tr, te = split_labeled(d, fraction, seed)
    n = len(cells)
    assert len(tr) == math.floor(fraction * n + 0.5)
    in_train = set(tr.tolist())
    need = math.ceil(1 / fraction)
    for c in set(cells):
        members = [i for i, v in enumerate(cells) if v == c]
        if len(members) >= need:
            assert in_train.intersection(members)


def test_mask_labels_keeps_only_selected():
    d = _dataset([1, 2, 3, 4], [1, 0, 1, 0])
    m = d.mask_labels([1, 3])
    assert m.y.tolist() == [-1, 0, -1, 0]
    assert d.y.tolist() == [1, 0, 1, 0]
