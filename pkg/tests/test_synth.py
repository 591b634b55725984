import numpy as np
import pytest

from girp.dataset import FeatureKind
from girp.splits import LESS_THAN, Split, best_split
from girp.synth import (
    ColumnSpec,
    GuardClause,
    PlantedRule,
    generate,
    oracle_best_split,
    rule_from_dict,
    two_rule_columns,
    two_rule_rules,
    _rule_dict,
)

from helpers import random_dataset


def test_no_rules_zero_contributions():
    table, contribs, truth = generate([], 20, 3, seed=1)
    assert np.all(contribs.values == 0.0)
    assert np.all(contribs.predicted_scores == 0.0)
    assert truth["rules"] == []


def test_single_rule_definition():
    rule = PlantedRule((GuardClause(Split(0, LESS_THAN, threshold=0.5)),),
                       target_var=1, contribution_level=2.0)
    table, contribs, _ = generate([rule], 100, 3, seed=2)
    active = table.values[:, 0] < 0.5
    assert np.all(contribs.values[active, 1] == 2.0)
    assert np.all(contribs.values[~active, 1] == 0.0)
    assert np.all(contribs.values[:, [0, 2]] == 0.0)


def test_generate_is_pure():
    rules = two_rule_rules()
    a = generate(rules, 50, 6, seed=9, columns=two_rule_columns())
    b = generate(rules, 50, 6, seed=9, columns=two_rule_columns())
    assert np.array_equal(a[0].values, b[0].values)
    assert np.array_equal(a[1].values, b[1].values)
    assert a[2] == b[2]


def test_features_do_not_depend_on_rules():
    cols = two_rule_columns()
    a, _, _ = generate(two_rule_rules(), 80, 6, seed=4, columns=cols)
    b, _, _ = generate([], 80, 6, seed=4, columns=cols)
    assert np.array_equal(a.values, b.values)


def test_guard_negation():
    rule = PlantedRule((GuardClause(Split(0, LESS_THAN, threshold=0.5), expect=False),),
                       target_var=0, contribution_level=1.0)
    table, contribs, _ = generate([rule], 60, 2, seed=5)
    active = ~(table.values[:, 0] < 0.5)
    assert np.all(contribs.values[active, 0] == 1.0)
    assert np.all(contribs.values[~active, 0] == 0.0)


def test_out_of_range_rule_rejected():
    rule = PlantedRule((GuardClause(Split(5, LESS_THAN, threshold=0.5)),),
                       target_var=0, contribution_level=1.0)
    with pytest.raises(ValueError):
        generate([rule], 10, 2, seed=0)
    bad_target = PlantedRule((), target_var=7, contribution_level=1.0)
    with pytest.raises(ValueError):
        generate([bad_target], 10, 2, seed=0)


def test_noise_is_seed_deterministic():
    rule = PlantedRule((GuardClause(Split(0, LESS_THAN, threshold=0.5)),),
                       target_var=1, contribution_level=2.0, noise_sd=0.1)
    a = generate([rule], 40, 3, seed=8, noise_sd=0.05)
    b = generate([rule], 40, 3, seed=8, noise_sd=0.05)
    assert np.array_equal(a[1].values, b[1].values)
    assert not np.array_equal(a[1].values,
                              generate([rule], 40, 3, seed=9, noise_sd=0.05)[1].values)


def test_rule_dict_round_trip():
    for rule in two_rule_rules():
        assert rule_from_dict(_rule_dict(rule)) == rule


def test_categorical_and_grid_columns():
    cols = [ColumnSpec(FeatureKind.categorical(["a", "b", "c"])),
            ColumnSpec(FeatureKind.ordinal(), grid=(0.25, 0.75)),
            ColumnSpec(FeatureKind.binary())]
    table, _, truth = generate([], 200, 3, seed=12, columns=cols)
    assert set(np.unique(table.values[:, 0])) <= {0.0, 1.0, 2.0}
    assert set(np.unique(table.values[:, 1])) == {0.25, 0.75}
    assert set(np.unique(table.values[:, 2])) <= {0.0, 1.0}
    assert truth["columns"][0]["levels"] == ["a", "b", "c"]
    assert truth["columns"][1]["grid"] == [0.25, 0.75]


def test_oracle_agrees_on_constant_matrix():
    rng = np.random.default_rng(3)
    table, _ = random_dataset(rng, 30, 3)
    from girp.dataset import ContributionMatrix
    constant = ContributionMatrix(np.full((30, 3), 2.0), np.full(30, 6.0))
    assert best_split(np.arange(30), table, constant, min_node_size=2) is None
    assert oracle_best_split(np.arange(30), table, constant, min_node_size=2) is None


def test_oracle_categorical_exhaustive_cross_check():
    rng = np.random.default_rng(31)
    kind = FeatureKind.categorical([f"L{i}" for i in range(5)])
    values = rng.integers(0, 5, size=(120, 1)).astype(np.float64)
    from girp.dataset import ContributionMatrix, FeatureTable
    table = FeatureTable(("c",), (kind,), values, tuple(str(i) for i in range(120)))
    c = rng.normal(size=(120, 1))
    contribs = ContributionMatrix(c, c.sum(axis=1))
    got = best_split(np.arange(120), table, contribs, min_node_size=5)
    want = oracle_best_split(np.arange(120), table, contribs, min_node_size=5)
    assert got.split == want.split
    assert abs(got.abs_g - abs(want.g_value)) <= 1e-9 * max(1.0, abs(want.g_value))


def test_oracle_categorical_reduction_cross_check():
    rng = np.random.default_rng(77)
    kind = FeatureKind.categorical([f"L{i}" for i in range(12)])
    values = rng.integers(0, 12, size=(200, 1)).astype(np.float64)
    from girp.dataset import ContributionMatrix, FeatureTable
    table = FeatureTable(("c",), (kind,), values, tuple(str(i) for i in range(200)))
    c = rng.normal(size=(200, 1))
    contribs = ContributionMatrix(c, c.sum(axis=1))
    got = best_split(np.arange(200), table, contribs, min_node_size=5,
                     max_categorical_exhaustive=8)
    want = oracle_best_split(np.arange(200), table, contribs, min_node_size=5,
                             max_categorical_exhaustive=8)
    assert got.split == want.split
    assert abs(got.abs_g - abs(want.g_value)) <= 1e-9 * max(1.0, abs(want.g_value))


def test_oracle_split_identity_on_many_subsets():
    rng = np.random.default_rng(500)
    table, contribs = random_dataset(rng, 120, 5)
    for _ in range(100):
        size = int(rng.integers(6, 120))
        idx = np.sort(rng.choice(120, size=size, replace=False))
        got = best_split(idx, table, contribs, min_node_size=2)
        want = oracle_best_split(idx, table, contribs, min_node_size=2)
        if want is None:
            assert got is None
            continue
        assert got.split == want.split
        assert abs(got.abs_g - abs(want.g_value)) <= 1e-9 * max(1.0, abs(want.g_value))
