import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from icl.closure import MAXIMAL, MINIMAL, min_closure
from icl.oracle import random_preorder
from icl.space import Preorder, upper_set_masks


def _all_minimisers(order, v):
    masks = upper_set_masks(order)
    sums = masks.astype(float) @ v
    best = sums.min()
    return masks[np.abs(sums - best) <= 1e-12], best


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_against_enumeration(n, seed):
    rng = np.random.default_rng(seed)
    P = random_preorder(rng, n)
    v = rng.integers(-3, 4, n) / 7.0
    minimisers, best = _all_minimisers(P, v)
    hi, vh = min_closure(P, v, MAXIMAL)
    lo, vl = min_closure(P, v, MINIMAL)
    assert vh == pytest.approx(best, abs=1e-12) and vl == pytest.approx(best, abs=1e-12)
    assert np.array_equal(hi, minimisers.any(axis=0))
    assert np.array_equal(lo, minimisers.all(axis=0))
    assert P.is_upper_set(hi) and P.is_upper_set(lo)


def test_value_matches_networkx_min_cut():
    rng = np.random.default_rng(11)
    for _ in range(40):
        n = int(rng.integers(2, 12))
        P = random_preorder(rng, n)
        v = rng.integers(-9, 10, n).astype(float)
        g = nx.DiGraph()
        g.add_nodes_from(["s", "t", *range(n)])
        for i in range(n):
            if v[i] < 0:
                g.add_edge("s", i, capacity=-v[i])
            elif v[i] > 0:
                g.add_edge(i, "t", capacity=v[i])
        for i, j in P.pairs():
            g.add_edge(int(i), int(j))  # no capacity attribute means infinite
        cut, _ = nx.minimum_cut(g, "s", "t")
        _, value = min_closure(P, v)
        assert value == pytest.approx(cut + v[v < 0].sum(), abs=1e-9)


def test_sign_forced():
    C = Preorder.chain(4)
    assert not min_closure(C, np.ones(4))[0].any()
    assert min_closure(C, -np.ones(4))[0].all()
    assert min_closure(C, np.zeros(4), MAXIMAL)[0].all()
    assert not min_closure(C, np.zeros(4), MINIMAL)[0].any()


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        min_closure(Preorder.chain(2), [1.0])
    with pytest.raises(ValueError):
        min_closure(Preorder.chain(2), [1.0, 2.0], policy="largest")
