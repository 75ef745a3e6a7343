import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import grid_nnls_residual, random_datasets, random_nnls_problem
from popaware.blend import (DEFAULT, DELTA, INVARIANT, LOCAL, PREVALENCE, SubgroupClassifier,
                            ThetaChoice, component_scores, dataset_component_scores, fit_gamma,
                            licensing_case_oracle, licensing_select, nnls, predict, score_dataset,
                            train_subgroup_classifiers, write_classifiers)
from popaware.core import ALL_SUBGROUPS, SubgroupKey
from popaware.hierarchy import leaf_node
from popaware.model import build_spec, fit_model
from popaware.optimizer import fit_hierarchy
from popaware.stats import SubgroupStats, subgroup_stats


def test_nnls_exact_recovery():
    rng = np.random.default_rng(0)
    s_l = rng.normal(size=30)
    samples = np.column_stack([s_l, np.zeros(30), np.zeros(30), 0.5 + 2 * s_l])
    assert np.allclose(fit_gamma(samples), [0.5, 2, 0, 0], atol=1e-8)


def test_nnls_all_zero_targets():
    rng = np.random.default_rng(1)
    samples = np.column_stack([rng.uniform(0, 3, (20, 3)), np.zeros(20)])
    assert np.array_equal(fit_gamma(samples), np.zeros(4))


def test_nnls_nonnegative_and_kkt():
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(2)
    for _ in range(200):
        m, n = int(rng.integers(3, 30)), int(rng.integers(1, 7))
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        x, r = nnls(A, b)
        assert np.all(x >= 0)
        assert r == pytest.approx(np.linalg.norm(A @ x - b))
        grad = A.T @ (A @ x - b)
        assert np.all(grad >= -1e-8)
        assert np.all(np.abs(grad[x > 0]) <= 1e-8)
        _, r_ref = scipy_opt.nnls(A, b)
        assert r <= r_ref + 1e-9


def test_nnls_beats_grid():
    rng = np.random.default_rng(3)
    A, b = random_nnls_problem(rng)
    x, r = nnls(A, b)
    assert r ** 2 <= grid_nnls_residual(A, b) + 1e-9


def test_fit_gamma_free_mask_and_errors():
    rng = np.random.default_rng(4)
    S = np.column_stack([rng.normal(size=(40, 3)), rng.integers(0, 2, 40)])
    g = fit_gamma(S, (True, True, False, False))
    assert g[2] == 0 and g[3] == 0
    with pytest.raises(ValueError):
        fit_gamma(np.zeros((0, 4)))


def _rule(st_, tau):
    """Direct transcription of the three-branch licensing rule."""
    if st_.delta_local is not None and st_.delta_pop is not None:
        if st_.delta_local < st_.delta_pop:
            return LOCAL, DELTA
    if st_.prev_local is not None and st_.prev_pop is not None:
        if st_.prev_local - st_.prev_pop >= tau:
            return LOCAL, PREVALENCE
    return INVARIANT, DEFAULT


def random_stats(rng):
    def maybe(v):
        return None if rng.random() < 0.15 else v
    return SubgroupStats(maybe(rng.random()), maybe(rng.random()), maybe(rng.random()),
                         maybe(rng.random()), rng.randint(0, 50), rng.randint(0, 500))


def test_licensing_matches_transcription():
    rng = random.Random(0)
    for _ in range(1000):
        s = random_stats(rng)
        tau = rng.choice([0.9, 0.5, 0.1])
        c = licensing_select(s, tau)
        assert (c.choice, c.reason) == _rule(s, tau)


def test_licensing_examples():
    assert licensing_select(SubgroupStats(0.2, 0.4, 0.5, 0.5, 10, 100)) == ThetaChoice(LOCAL, DELTA)
    assert licensing_select(SubgroupStats(0.5, 0.4, 0.95, 0.03, 10, 100), 0.9) == \
        ThetaChoice(LOCAL, PREVALENCE)
    assert licensing_select(SubgroupStats(0.5, 0.3, 0.6, 0.5, 10, 100)) == \
        ThetaChoice(INVARIANT, DEFAULT)
    assert licensing_select(SubgroupStats(None, 0.3, None, 0.5, 0, 100)).choice == INVARIANT


def test_theta_choice_consistency():
    with pytest.raises(ValueError):
        ThetaChoice(LOCAL, DEFAULT)
    with pytest.raises(ValueError):
        ThetaChoice(INVARIANT, DELTA)


def test_case_oracle_examples():
    assert licensing_case_oracle(0.8, 0.6) == -1
    assert licensing_case_oracle(0.4, 0.4) == 0
    assert licensing_case_oracle(0.3, 0.6) == 1
    with pytest.raises(ValueError):
        licensing_case_oracle(0.0, 0.5)


SIGN_CASES = {1: (True, True), 2: (True, False), 3: (False, True), 4: (False, False)}


def _draw(rng, above):
    return rng.uniform(0.5, 1.0) if above else rng.uniform(1e-6, 0.5)


@pytest.mark.parametrize("case", [1, 2, 3, 4])
def test_sign_cases_signed_delta(case):
    rng = random.Random(case)
    for _ in range(1000):
        pl, pp = (_draw(rng, s) for s in SIGN_CASES[case])
        d_l, d_p = 2 * pl - 1, 2 * pp - 1
        sign = licensing_case_oracle(pl, pp)
        assert (d_l > d_p) == (pl > pp) == (sign < 0)


def test_sign_cases_absolute_delta_counterexample():
    # with delta = |2p - 1| the implication breaks once the local value is below 1/2
    pl, pp = 0.1, 0.6
    assert abs(2 * pl - 1) > abs(2 * pp - 1)
    assert licensing_case_oracle(pl, pp) == 1


def test_component_scores_basis():
    comps = (np.array([1., 2, 3, 4]), np.array([5., 6, 7, 8]), np.array([9., 10, 11, 12]))
    for j in range(4):
        e = np.eye(4)[j]
        assert component_scores(e, comps) == (comps[0][j], comps[1][j], comps[2][j])


def test_predict_examples():
    rng = np.random.default_rng(5)
    comps = tuple(rng.normal(size=4) for _ in range(3))
    k = SubgroupKey.from_index(3)
    zero = SubgroupClassifier(k, "d", np.zeros(4), None, comps)
    basis = SubgroupClassifier(k, "d", np.array([0, 1.0, 0, 0]), None, comps)
    for j in range(4):
        e = np.eye(4)[j]
        assert predict(zero, e) == 0.0
        assert predict(basis, e) == comps[0][j]
    gamma = rng.uniform(0, 2, 4)
    clf = SubgroupClassifier(k, "d", gamma, None, comps)
    for _ in range(100):
        x = rng.integers(0, 2, 4)
        want = gamma[0] + sum(gamma[i + 1] * sum(comps[i][j] * x[j] for j in range(4))
                              for i in range(3))
        assert predict(clf, x) == pytest.approx(want, abs=1e-12)


def test_classifier_invariants():
    k = SubgroupKey.from_index(0)
    comps = (np.zeros(4),) * 3
    with pytest.raises(ValueError):
        SubgroupClassifier(k, "d", np.array([0, -1.0, 0, 0]), None, comps)
    with pytest.raises(ValueError):
        SubgroupClassifier(k, "d", np.array([0, 1.0, 0.5, 0]), ThetaChoice(LOCAL, DELTA), comps)


@pytest.fixture(scope="module")
def toy():
    ds = random_datasets(30, sizes=(30, 60, 45))
    spec = build_spec(ds)
    fitted = fit_hierarchy(spec)
    return ds, fitted


def test_classifiers_match_standalone_fits(toy):
    ds, fitted = toy
    clfs = train_subgroup_classifiers(fitted, ds, min_samples=5)
    for d in ds:
        scores = dataset_component_scores(fitted, d)
        S = np.column_stack([scores, d.y])
        lab = d.labeled_mask
        ds_gamma = fit_gamma(S[lab])
        for key in ALL_SUBGROUPS:
            c = clfs[(d.name, key)]
            sel = lab & (d.groups == key.index)
            expected_choice = licensing_select(subgroup_stats(d, ds, key))
            assert c.choice == expected_choice
            if expected_choice.choice == LOCAL:
                free = (True, True, False, False)
                want = fit_gamma(S[sel], free) if sel.sum() >= 5 else fit_gamma(S[lab], free)
                assert c.gamma[2] == 0 and c.gamma[3] == 0
            else:
                want = fit_gamma(S[sel]) if sel.sum() >= 5 else ds_gamma
            assert np.allclose(c.gamma, want, atol=1e-12)
            assert c.inherited == (sel.sum() < 5)
            assert np.all(c.gamma >= 0)


def test_small_subgroup_inherits(toy):
    ds, fitted = toy
    d = ds[0]
    clfs = train_subgroup_classifiers(fitted, [d], min_samples=5)
    small = [k for k in ALL_SUBGROUPS if 0 < np.sum(d.groups == k.index) < 5]
    assert small
    lab = d.labeled_mask
    S = np.column_stack([dataset_component_scores(fitted, d), d.y])
    for k in small:
        c = clfs[(d.name, k)]
        assert c.inherited
        if c.choice.choice == INVARIANT:
            assert np.allclose(c.gamma, fit_gamma(S[lab]))


def test_local_scores_ignore_demographic_parameters(toy):
    ds, fitted = toy
    clfs = train_subgroup_classifiers(fitted, ds, tau=0.0)
    local = [(k, c) for k, c in clfs.items() if c.choice.choice == LOCAL]
    assert local
    rng = np.random.default_rng(6)
    for _, c in local:
        bumped = SubgroupClassifier(c.key, c.dataset, c.gamma, c.choice,
                                    (c.components[0], c.components[1] + rng.normal(size=4),
                                     c.components[2] + rng.normal(size=4)))
        for _ in range(10):
            x = rng.integers(0, 2, 4)
            assert predict(bumped, x) == predict(c, x)


def test_score_dataset_matches_predict(toy):
    ds, fitted = toy
    clfs = train_subgroup_classifiers(fitted, ds)
    d = ds[1]
    s = score_dataset(clfs, fitted, d)
    for i, r in enumerate(d.records):
        assert s[i] == pytest.approx(predict(clfs[(d.name, r.key)], r.x), abs=1e-12)


def test_no_population_classifiers(toy):
    ds, _ = toy
    m = fit_model(ds, population=False)
    for c in m.classifiers.values():
        assert c.choice is None and c.gamma[2] == 0 and c.gamma[3] == 0


def test_unlabeled_dataset_rejected(toy):
    ds, fitted = toy
    bare = ds[0].mask_labels([])
    with pytest.raises(ValueError):
        train_subgroup_classifiers(fitted, [bare])


def test_write_classifiers(tmp_path, toy):
    ds, fitted = toy
    clfs = train_subgroup_classifiers(fitted, ds)
    p = tmp_path / "c.csv"
    write_classifiers(clfs, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "dataset,age_group,gender,g0,g1,g2,g3,choice,reason"
    assert len(lines) == 1 + len(ds) * 10
    cells = lines[1].split(",")
    assert cells[0] == "d0" and cells[1] == "0-4" and cells[2] == "M"
    assert all(float(v) >= 0 for v in cells[3:7])
