import json

import numpy as np
import pytest

from icl.conditional_law import icl_fit
from icl.functionals import conditional_quantile
from icl.oracle import (
    PROPERTIES,
    Counterexample,
    OracleBudget,
    brute_crps_min,
    brute_expected_score_min,
    brute_isotonic_mean,
    check_counterexample,
    load_fixture,
    per_atom,
    random_ga_member,
    random_instance,
    search_counterexample,
    set_partitions,
)
from icl.scoring import brier_score, quantile_score
from icl.space import EnumerationCapError, FiniteSpace, Preorder


def test_set_partition_counts():
    assert [set_partitions(n).shape[0] for n in range(1, 9)] == [1, 2, 5, 15, 52, 203, 877, 4140]


def test_brute_isotonic_examples(chain3, vee3):
    sp, C, y = chain3
    assert np.allclose(brute_isotonic_mean(sp, C, y), [0.5, 0.5, 2], atol=1e-15)
    assert np.array_equal(brute_isotonic_mean(sp, C, [0.0, 1.0, 2.0]), [0, 1, 2])
    sp, P, y = vee3
    assert np.allclose(brute_isotonic_mean(sp, P, y), [1, 1, 1], atol=1e-15)


def test_budget_is_enforced():
    budget = OracleBudget(max_atoms=3)
    with pytest.raises(EnumerationCapError):
        brute_isotonic_mean(FiniteSpace.uniform(4), Preorder.chain(4), np.zeros(4), budget)
    with pytest.raises(EnumerationCapError):
        brute_crps_min(FiniteSpace.uniform(4), Preorder.chain(4), np.arange(4.0), budget)


def test_score_min_antichain_is_pointwise():
    sp, y = FiniteSpace.uniform(3), np.array([2.0, -1.0, 0.5])
    res = brute_expected_score_min(sp, Preorder.antichain(3), per_atom(brier_score, y), y)
    assert np.array_equal(res.x, y) and res.value == 0


def test_score_min_on_chain_matches_known_answer(chain3):
    sp, C, y = chain3
    res = brute_expected_score_min(sp, C, per_atom(brier_score, y), [0.0, 0.5, 1.0, 2.0])
    assert np.array_equal(res.x, [0.5, 0.5, 2.0])
    assert res.value == pytest.approx(1 / 6)


def test_quantile_oracle_matches_path(chain3):
    sp, C, y = chain3
    score = per_atom(lambda x, t: quantile_score(0.5, x, t), y)
    res = brute_expected_score_min(sp, C, score, y)
    x = conditional_quantile(sp, C, y, 0.5).values
    assert np.dot(sp.weights, quantile_score(0.5, x, y)) == pytest.approx(res.value, abs=1e-12)


def test_crps_oracle_degenerate_cases():
    y = np.array([3.0, 1.0, 2.0])
    sp = FiniteSpace.uniform(3)
    assert np.array_equal(brute_crps_min(sp, Preorder.antichain(3), y),
                          [[0, 0, 1], [1, 1, 1], [0, 1, 1]])
    assert np.array_equal(brute_crps_min(sp, Preorder.chain(3), [4.0, 4.0, 4.0]), np.ones((3, 1)))


def test_crps_oracle_on_chain(chain3):
    sp, C, y = chain3
    assert np.allclose(brute_crps_min(sp, C, y), icl_fit(sp, C, y).cdf_matrix, atol=1e-12)


def test_random_ga_members_are_members():
    rng = np.random.default_rng(8)
    for _ in range(50):
        sp, P, y = random_instance(rng, 6)
        G = random_ga_member(rng, P, 4)
        assert np.all(np.diff(G, axis=1) >= 0) and np.all(G[:, -1] == 1)
        for i, j in P.pairs():
            assert np.all(G[i] >= G[j])


def test_oracle_is_deterministic():
    a = brute_crps_min(*random_instance(np.random.default_rng(3), 6))
    b = brute_crps_min(*random_instance(np.random.default_rng(3), 6))
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("prop", PROPERTIES)
def test_fixtures_replay_bit_identically(prop):
    frozen = load_fixture(prop)
    assert frozen.property == prop
    replay = search_counterexample(prop, frozen.seed)
    assert json.dumps(replay.to_json(), sort_keys=True) == json.dumps(frozen.to_json(), sort_keys=True)
    assert check_counterexample(prop, frozen.instance)


@pytest.mark.parametrize("prop", PROPERTIES)
def test_search_succeeds_for_other_seeds(prop):
    for seed in (1, 2, 3):
        assert search_counterexample(prop, seed) is not None


def test_search_rejects_unknown_property():
    with pytest.raises(ValueError):
        search_counterexample("associativity", 0)
    with pytest.raises(ValueError):
        Counterexample.from_json({"schema": "icl/0"})
