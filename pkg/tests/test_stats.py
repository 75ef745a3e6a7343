import math
import random

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import brute_auc, random_datasets
from popaware import kernels
from popaware.core import AgeGroup, CollectionMode, Dataset, Gender, Record, Role, SubgroupKey
from popaware.stats import (auc, delta, information, p_diff, ppv, ppv_vector, prevalence,
                            subgroup_stats)
from popaware.synth import default_config, generate

A, G = AgeGroup.A16_44, Gender.Female


def _recs(rows):
    return [Record(x, A, G, y) for x, y in rows]


def test_ppv_counting():
    rows = [((1, 0, 0, 0), 1)] * 3 + [((1, 0, 0, 0), 0), ((0, 1, 0, 0), 1)]
    assert ppv(_recs(rows), 0, laplace=0) == 0.75
    assert ppv(_recs(rows), 2, laplace=1) == 0.5
    assert ppv(_recs([((1, 1, 1, 1), 1)] * 4), 0, laplace=0) == 1.0
    assert ppv(_recs(rows), 0, laplace=1) == pytest.approx(4 / 6)


def test_ppv_vector_matches_scalar():
    d = random_datasets(1)[0]
    vec = ppv_vector(d.X, d.y)
    assert np.allclose(vec, [ppv(d, j) for j in range(4)])
    assert np.all((vec >= 0) & (vec <= 1))


def test_unlabeled_records_ignored():
    rows = _recs([((1, 0, 0, 0), 1), ((1, 0, 0, 0), 0)])
    extra = rows + [Record((1, 0, 0, 0), A, G, None)] * 5
    assert ppv(extra, 0, 0) == ppv(rows, 0, 0)
    assert prevalence(extra) == 0.5


def test_p_diff_values():
    half = _recs([((1, 0, 0, 0), 1), ((0, 0, 0, 0), 1)])
    assert p_diff(half, 0) == 0.0
    three_q = _recs([((1, 0, 0, 0), 1)] * 3 + [((0, 0, 0, 0), 1)])
    assert p_diff(three_q, 0) == 0.5
    assert p_diff(_recs([((1, 0, 0, 0), 0)]), 0, y=1) is None


def test_p_diff_six_record_table():
    table = [((1, 1, 0, 0), 1), ((1, 0, 0, 1), 1), ((0, 1, 1, 0), 1),
             ((1, 1, 1, 1), 0), ((0, 0, 0, 0), 0), ((1, 0, 1, 0), 1)]
    recs = _recs(table)
    # positives: 4 records; symptom counts fever 3, cough 2, muscle 2, throat 1
    expect = [abs(2 * 3 / 4 - 1), 0.0, 0.0, abs(2 * 1 / 4 - 1)]
    for j in range(4):
        assert p_diff(recs, j) == pytest.approx(expect[j])
    neg = [abs(2 * c - 1) for c in (0.5, 0.5, 0.5, 0.5)]
    for j in range(4):
        assert p_diff(recs, j, y=0) == pytest.approx(neg[j])
    assert delta(recs) == pytest.approx(np.mean(expect))


def test_delta_means():
    pos = _recs([((1, 1, 1, 1), 1)] * 3 + [((0, 0, 0, 0), 1)])
    assert delta(pos) == pytest.approx(0.5)
    pd = _recs([((1, 0, 0, 0), 1), ((1, 1, 0, 0), 1), ((1, 0, 1, 0), 1), ((1, 1, 1, 0), 1)])
    assert delta(pd) == pytest.approx(0.25 * (1 + 0 + 0 + 1))
    assert delta(_recs([((1, 0, 0, 0), 0)])) is None


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.tuples(*[st.integers(0, 1)] * 4), st.integers(0, 1)), min_size=1, max_size=40))
def test_delta_is_mean_of_p_diff(rows):
    recs = _recs(rows)
    d = delta(recs)
    parts = [p_diff(recs, j) for j in range(4)]
    if d is None:
        assert all(p is None for p in parts)
    else:
        assert d == pytest.approx(sum(parts) / 4, abs=1e-15)
        assert 0.0 <= d <= 1.0


def _count_stats(records):
    pos = [r for r in records if r.y == 1]
    lab = [r for r in records if r.y is not None]
    d = None
    if pos:
        d = sum(abs(2 * sum(r.x[j] for r in pos) / len(pos) - 1) for j in range(4)) / 4
    p = sum(r.y for r in lab) / len(lab) if lab else None
    return d, p, len(lab)


def test_subgroup_stats_counting_oracle():
    ds = random_datasets(7, sizes=(60, 50, 70))
    for key in [SubgroupKey(a, g) for a in AgeGroup for g in Gender]:
        st_ = subgroup_stats(ds[0], ds, key)
        local = [r for r in ds[0].records if r.key == key]
        pooled = [r for d in ds for r in d.records if r.key == key]
        dl, pl, nl = _count_stats(local)
        dp, pp, np_ = _count_stats(pooled)
        assert st_.n_local == nl and st_.n_pop == np_
        for got, want in ((st_.delta_local, dl), (st_.prev_local, pl),
                          (st_.delta_pop, dp), (st_.prev_pop, pp)):
            assert (got is None) == (want is None)
            if want is not None:
                assert got == pytest.approx(want, abs=1e-12)


def test_subgroup_stats_on_generated_bundle():
    b = generate(default_config(), 3)
    key = SubgroupKey(AgeGroup.A45_64, Gender.Female)
    st_ = subgroup_stats(b["goviral"], b.datasets, key)
    pooled = [r for d in b.datasets for r in d.records if r.key == key]
    dp, pp, n = _count_stats(pooled)
    assert st_.delta_pop == pytest.approx(dp) and st_.prev_pop == pytest.approx(pp)


def test_subgroup_stats_edge_cases():
    ds = random_datasets(2, sizes=(40,))
    t = ds[0]
    absent = [k for k in (SubgroupKey(a, g) for a in AgeGroup for g in Gender)
              if not np.any(t.groups == k.index)]
    only = Dataset(t.name, t.mode, t.role,
                   tuple(r for r in t.records if r.key.index == 4))
    k_missing = SubgroupKey(AgeGroup.A0_4, Gender.Male)
    s = subgroup_stats(only, [only], k_missing)
    assert s.n_local == 0 and s.delta_local is None and s.prev_local is None
    k = SubgroupKey.from_index(4)
    s = subgroup_stats(only, [only], k)
    assert (s.delta_local, s.prev_local) == (s.delta_pop, s.prev_pop)


def test_information():
    assert information(1.0) == 0.0
    assert information(1 / math.e) == pytest.approx(1.0)
    for bad in (0.0, -0.5):
        with pytest.raises(ValueError):
            information(bad)
    rng = random.Random(0)
    for _ in range(200):
        a, b = rng.uniform(1e-6, 1), rng.uniform(1e-6, 1)
        if a < b:
            assert information(a) > information(b)


def test_auc_examples():
    assert auc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0
    assert auc([0.9, 0.4, 0.6, 0.2], [1, 0, 0, 1]) == 0.5
    assert auc([0.1, 0.2], [1, 1]) is None
    assert auc([0.5, 0.5, 0.5], [1, 0, 1]) == 0.5
    with pytest.raises(ValueError):
        auc([0.1, 0.2], [1])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(0, 1)), min_size=2, max_size=40))
def test_auc_matches_pair_counting(pairs):
    s = [float(p[0]) for p in pairs]
    y = [p[1] for p in pairs]
    want = brute_auc(s, y)
    got = auc(s, y)
    assert (got is None) == (want is None)
    if want is not None:
        assert abs(got - want) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-8000, 8000), st.integers(0, 1)), min_size=2, max_size=40))
def test_auc_monotone_invariance_and_reversal(pairs):
    # multiples of 1/8 stay distinct under the transform below
    s = np.array([p[0] / 8.0 for p in pairs])
    y = [p[1] for p in pairs]
    a = auc(s, y)
    assume(a is not None)
    assert auc(np.exp(s / 100.0), y) == pytest.approx(a, abs=1e-12)
    if len(set(s.tolist())) == len(s):
        assert auc(-s, y) == pytest.approx(1 - a, abs=1e-12)


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_auc_kernels_agree(backend):
    if backend == "cython" and kernels.BACKEND != "cython":
        pytest.skip("compiled extension not built")
    mod = kernels.backend_module(backend)
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 60))
        s = rng.integers(0, 6, n).astype(np.float64)
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            continue
        got = mod.auc_sorted(s, (y == 1).astype(np.uint8), int(y.sum()), int(n - y.sum()))
        assert abs(got - brute_auc(s.tolist(), y.tolist())) <= 1e-12
