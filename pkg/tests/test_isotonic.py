import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from icl.isotonic import isotonic_mean, minmax_value, minmax_values, pava_chain
from icl.oracle import brute_isotonic_mean, load_fixture, random_instance
from icl.space import FiniteSpace, Preorder, is_upper_measurable, upper_set_masks


def test_chain_example(chain3):
    sp, C, y = chain3
    fit = isotonic_mean(sp, C, y)
    assert np.array_equal(fit.fitted, [0.5, 0.5, 2.0])
    assert fit.blocks == ((0, 1), (2,))
    assert fit.objective == pytest.approx(1 / 6)


def test_isotonic_input_is_fixed():
    sp = FiniteSpace.from_unnormalized([1, 2, 3, 4])
    y = np.array([-1.0, 0.0, 0.0, 3.5])
    assert np.array_equal(isotonic_mean(sp, Preorder.chain(4), y).fitted, y)


def test_vee_example(vee3):
    sp, P, y = vee3
    assert np.allclose(isotonic_mean(sp, P, y).fitted, [1, 1, 1], atol=1e-12)


def test_pava_matches_general_solver(chain3):
    sp, C, y = chain3
    assert np.array_equal(pava_chain(sp.weights, y).fitted, [0.5, 0.5, 2.0])
    assert np.array_equal(pava_chain(sp.weights, [0, 1, 2.0]).fitted, [0, 1, 2])
    with pytest.raises(ValueError):
        pava_chain(sp.weights, y, Preorder.from_edges(3, [(0, 1), (0, 2)]))


def test_pava_with_ties_in_total_preorder():
    x = np.array([2.0, 1.0, 2.0, 0.0])
    P = Preorder(x[:, None] <= x[None, :])
    sp = FiniteSpace.uniform(4)
    y = np.array([0.0, 3.0, 2.0, 1.0])
    assert np.allclose(pava_chain(sp.weights, y, P).fitted, brute_isotonic_mean(sp, P, y))


def test_minmax_examples(chain3, vee3):
    sp, C, y = chain3
    assert minmax_value(sp, C, y, 0) == 0.5
    assert minmax_value(sp, C, [0, 1, 4.0], 2) == 4.0
    sp, P, y = vee3
    assert minmax_value(sp, P, y, 2) == pytest.approx(1.0)


def test_dimension_errors():
    with pytest.raises(ValueError):
        isotonic_mean(FiniteSpace.uniform(3), Preorder.chain(2), [1, 2, 3])
    with pytest.raises(ValueError):
        isotonic_mean(FiniteSpace.uniform(3), Preorder.chain(3), [1, 2])


def _certificate_gap(sp, P, y, fitted):
    w = sp.weights
    masks = upper_set_masks(P).astype(float)
    ineq = (masks @ (w * y) - masks @ (w * fitted)).max()
    eq = max(abs(np.dot(w[b], y[b] - fitted[b])) for b in
             [np.abs(fitted - v) <= 1e-10 for v in np.unique(fitted)])
    return ineq, eq


@given(st.integers(0, 2**32 - 1))
def test_projection_certificate(seed):
    sp, P, y = random_instance(np.random.default_rng(seed), 7)
    fit = isotonic_mean(sp, P, y)
    assert is_upper_measurable(P, fit.fitted, tol=1e-12)
    ineq, eq = _certificate_gap(sp, P, y, fit.fitted)
    assert ineq <= 1e-9 and eq <= 1e-9
    assert np.dot(sp.weights, fit.fitted) == pytest.approx(np.dot(sp.weights, y), abs=1e-12)
    for b in fit.blocks:
        b = list(b)
        assert np.ptp(fit.fitted[b]) <= 1e-10


@given(st.integers(0, 2**32 - 1))
def test_three_way_agreement(seed):
    sp, P, y = random_instance(np.random.default_rng(seed), 7)
    fast = isotonic_mean(sp, P, y).fitted
    assert np.allclose(fast, brute_isotonic_mean(sp, P, y), atol=1e-9)
    assert np.allclose(fast, minmax_values(sp, P, y), atol=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_monotone_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    sp, P, y = random_instance(rng, 8)
    bump = rng.integers(0, 3, sp.n).astype(float)
    a = isotonic_mean(sp, P, y).fitted
    b = isotonic_mean(sp, P, y + bump).fitted
    assert np.all(a <= b + 1e-10)
    assert np.allclose(isotonic_mean(sp, P, a).fitted, a, atol=1e-12)


def test_frozen_linearity_failure():
    inst = load_fixture("linearity").instance
    sp, P = FiniteSpace(inst["weights"]), Preorder.from_edges(inst["n"], inst["order"])
    y1, y2 = np.array(inst["y1"]), np.array(inst["y2"])
    lhs = isotonic_mean(sp, P, y1 + y2).fitted
    rhs = isotonic_mean(sp, P, y1).fitted + isotonic_mean(sp, P, y2).fitted
    assert np.abs(lhs - rhs).max() > 1e-9


def test_frozen_tower_failure():
    inst = load_fixture("tower").instance
    sp = FiniteSpace(inst["weights"])
    coarse = Preorder.from_edges(inst["n"], inst["order_coarse"])
    fine = Preorder.from_edges(inst["n"], inst["order_fine"])
    # the coarse lattice has fewer upper sets
    assert {tuple(m) for m in upper_set_masks(coarse)} < {tuple(m) for m in upper_set_masks(fine)}
    y = np.array(inst["y"])
    nested = isotonic_mean(sp, coarse, isotonic_mean(sp, fine, y).fitted).fitted
    assert np.abs(nested - isotonic_mean(sp, coarse, y).fitted).max() > 1e-9


def test_larger_instance_runs():
    rng = np.random.default_rng(4)
    n = 200
    x = rng.normal(size=(n, 2))
    from icl.space import preorder_from_covariates
    P = preorder_from_covariates(x)
    y = x.sum(axis=1) + rng.normal(size=n)
    fit = isotonic_mean(FiniteSpace.uniform(n), P, y)
    assert is_upper_measurable(P, fit.fitted, tol=1e-10)
