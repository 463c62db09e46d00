"""Weighted least-squares isotonic regression on a preorder.

The fit is the finite-space conditional expectation of ``y`` given the
lattice of upper sets: the projection of ``y`` onto the cone of vectors that
are increasing along the order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closure import MAXIMAL, min_closure
from .space import DEFAULT_ENUMERATION_CAP, FiniteSpace, Preorder, upper_set_masks

LEVEL_TOL = 1e-10


@dataclass(frozen=True)
class IsotonicFit:
    """Fitted values, their level sets and the weighted residual sum of squares."""

    fitted: np.ndarray
    blocks: tuple
    objective: float


def _finish(weights, y, fitted) -> IsotonicFit:
    fitted = np.asarray(fitted, dtype=float)
    fitted.setflags(write=False)
    order = np.argsort(fitted, kind="stable")
    blocks, current = [], [int(order[0])]
    for a, b in zip(order[:-1], order[1:]):
        if fitted[b] - fitted[a] > LEVEL_TOL:
            blocks.append(tuple(sorted(current)))
            current = []
        current.append(int(b))
    blocks.append(tuple(sorted(current)))
    objective = float(np.dot(weights, (y - fitted) ** 2))
    return IsotonicFit(fitted, tuple(blocks), objective)


def _pava(w: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pool adjacent violators for a sequence that must be nondecreasing."""
    means, wts, sizes = [], [], []
    for wi, yi in zip(w, y):
        means.append(float(yi))
        wts.append(float(wi))
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), wts.pop(), sizes.pop()
            w1 = wts[-1]
            means[-1] = (w1 * means[-1] + w2 * m2) / (w1 + w2)
            wts[-1] = w1 + w2
            sizes[-1] += s2
    return np.repeat(means, sizes)


def pava_chain(weights, y, order: Preorder | None = None) -> IsotonicFit:
    """Isotonic regression along a total order.

    Without ``order`` the atoms are taken in index order. Ties in a total
    preorder are pooled before the sweep.
    """
    w = np.asarray(weights, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if w.size != y.size:
        raise ValueError("weights and y must have equal length")
    if order is None:
        order = Preorder.chain(y.size)
    if order.n != y.size:
        raise ValueError("order size does not match y")
    if not order.is_total():
        raise ValueError("pava_chain requires a total order")
    labels, q = order.quotient()
    cw, cy = _class_sums(labels, w, y)
    # in a chain, the rank of a class is its number of predecessors
    rank = np.argsort(q.leq.sum(axis=0))
    fitted_classes = np.empty(cw.size)
    fitted_classes[rank] = _pava(cw[rank], cy[rank])
    return _finish(w, y, fitted_classes[labels])


def _class_sums(labels, w, y):
    k = labels.max() + 1
    cw = np.bincount(labels, weights=w, minlength=k)
    cy = np.bincount(labels, weights=w * y, minlength=k) / cw
    return cw, cy


def _partition_solve(q: Preorder, w: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Recursive splitting by minimum closure on a partial order.

    A block whose mean is ``c`` splits off the maximal upper subset ``A`` with
    ``sum_A w (c - y) < 0``; the part above gets larger fitted values.
    """
    fitted = np.empty(w.size)
    stack = [np.arange(w.size)]
    while stack:
        block = stack.pop()
        bw, by = w[block], y[block]
        c = float(np.dot(bw, by) / bw.sum())
        if block.size == 1:
            fitted[block] = c
            continue
        v = bw * (c - by)
        scale = float(np.dot(bw, np.abs(by - c))) + 1e-300
        mask, value = min_closure(q.restrict(block), v, policy=MAXIMAL)
        if value >= -1e-12 * scale or mask.all() or not mask.any():
            fitted[block] = c
            continue
        stack.append(block[mask])
        stack.append(block[~mask])
    return fitted


def isotonic_mean(space: FiniteSpace, order: Preorder, y) -> IsotonicFit:
    """Weighted L2 projection of ``y`` onto vectors increasing along ``order``."""
    y = space.check_vector(y, "y")
    if order.n != space.n:
        raise ValueError(f"order has {order.n} elements, space has {space.n} atoms")
    w = space.weights
    if order.is_total():
        return pava_chain(w, y, order)
    labels, q = order.quotient()
    cw, cy = _class_sums(labels, w, y)
    return _finish(w, y, _partition_solve(q, cw, cy)[labels])


def minmax_value(space: FiniteSpace, order: Preorder, y, i: int,
                 cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """``min_{L lower, i in L} max_{U upper, i in U}`` of the weighted mean of y on ``L ∩ U``.

    Exhaustive; only for small verification instances.
    """
    y = space.check_vector(y, "y")
    return float(_minmax_all(space.weights, order, y, cap)[i])


def minmax_values(space: FiniteSpace, order: Preorder, y,
                  cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """:func:`minmax_value` at every atom, sharing one enumeration."""
    y = space.check_vector(y, "y")
    return _minmax_all(space.weights, order, y, cap)


def _minmax_all(w, order, y, cap):
    U = upper_set_masks(order, cap).astype(float)
    L = 1.0 - U  # complements of upper sets are the lower sets
    S = (L * (w * y)) @ U.T
    W = (L * w) @ U.T
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = S / W
    out = np.empty(order.n)
    for i in range(order.n):
        sub = avg[np.ix_(L[:, i] > 0, U[:, i] > 0)]
        out[i] = sub.max(axis=1).min()
    return out
