"""Conditional functionals given a lattice, via minimising sets and paths.

For an identification function ``V`` and threshold ``eta`` the objective
``s_A(eta) = sum_{i in A} w_i V(eta, y_i)`` is modular in ``A``. Its minimisers
over upper sets form a lattice; choosing the maximal one for every ``eta``
gives a decreasing path whose pointwise inverse ``sup{eta : i in A_eta}`` is
the conditional functional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closure import MAXIMAL, min_closure
from .scoring import IdentificationFunction, mean_identification, quantile_identification
from .space import FiniteSpace, Preorder, preorder_from_covariates

BREAK_TOL = 1e-12


@dataclass(frozen=True)
class ModularObjective:
    """Per-atom contributions ``v_i = w_i V(eta, y_i)``."""

    values: np.ndarray
    eta: float
    alpha: float | None = None

    def __call__(self, members) -> float:
        mask = np.zeros(self.values.size, dtype=bool)
        if isinstance(members, np.ndarray) and members.dtype == bool:
            mask = members
        else:
            mask[list(members)] = True
        return float(self.values[mask].sum())


def modular_objective(space: FiniteSpace, y, V: IdentificationFunction, eta: float) -> ModularObjective:
    y = space.check_vector(y, "y")
    v = space.weights * np.asarray(V(eta, y), dtype=float)
    return ModularObjective(v, float(eta), V.alpha)


def minimizing_set(space: FiniteSpace, order: Preorder, y, V: IdentificationFunction,
                   eta: float, policy: str = MAXIMAL) -> frozenset:
    """Maximal (union) or minimal (intersection) minimiser of ``s_A(eta)``."""
    obj = modular_objective(space, y, V, eta)
    mask, _ = min_closure(order, obj.values, policy=policy)
    return frozenset(np.flatnonzero(mask).tolist())


@dataclass(frozen=True)
class MinimizingPath:
    """Upper sets on the cells ``(-inf, e_1], (e_1, e_2], ..., (e_r, inf)``.

    ``sets[k]`` is the membership mask on cell ``k``; ``lo`` and ``hi`` bound
    the response and are used to clip infinite values.
    """

    events: np.ndarray
    sets: np.ndarray
    lo: float
    hi: float
    alpha: float | None = None

    def set_at(self, eta: float) -> frozenset:
        k = int(np.searchsorted(self.events, eta, side="left"))
        return frozenset(np.flatnonzero(self.sets[k]).tolist())


@dataclass(frozen=True)
class ConditionalFunctional:
    """Per-atom values; ``clipped`` flags atoms whose inverse was infinite."""

    values: np.ndarray
    clipped: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _parametric_breakpoints(order: Preorder, p: np.ndarray, q: np.ndarray,
                            lo: float, hi: float) -> list[float]:
    """Kinks of ``t -> min_A sum_A (p + t q)`` on ``(lo, hi)`` (Eisner and Severance).

    Each upper set contributes the line ``P_A + t Q_A``; the minimum is the
    concave lower envelope, found by repeatedly intersecting two envelope lines.
    """
    scale = float(np.abs(p).sum() + np.abs(q).sum() * max(abs(lo), abs(hi), 1.0))
    tol = BREAK_TOL * max(scale, 1e-300)

    def line(t):
        mask, _ = min_closure(order, p + t * q, policy=MAXIMAL)
        return mask, float(p[mask].sum()), float(q[mask].sum())

    found: list[float] = []
    ml, Pl, Ql = line(lo)
    mr, Pr, Qr = line(hi)
    stack = [((ml, Pl, Ql), (mr, Pr, Qr))]
    while stack:
        (m1, P1, Q1), (m2, P2, Q2) = stack.pop()
        if np.array_equal(m1, m2) or abs(Q1 - Q2) <= tol:
            continue
        t = (P2 - P1) / (Q1 - Q2)
        m, P, Q = line(t)
        if P + t * Q >= P1 + t * Q1 - tol or np.array_equal(m, m1) or np.array_equal(m, m2):
            if lo + BREAK_TOL < t < hi - BREAK_TOL:
                found.append(float(t))
            continue
        stack.append(((m1, P1, Q1), (m, P, Q)))
        stack.append(((m, P, Q), (m2, P2, Q2)))
    return _dedupe(found)


def _dedupe(values, tol: float = 1e-12) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def alpha_breakpoints(space: FiniteSpace, order: Preorder, y) -> np.ndarray:
    """Levels in ``(0, 1)`` where the quantile minimiser changes, over all eta-cells.

    On the cell ``(z_k, z_{k+1}]`` the objective is ``sum_A w (1{y <= z_k} - alpha)``,
    affine in ``alpha`` for every upper set.
    """
    y = space.check_vector(y, "y")
    w = space.weights
    found = []
    for zk in np.unique(y)[:-1]:
        found.extend(_parametric_breakpoints(order, w * (y <= zk), -w, 0.0, 1.0))
    return np.array(_dedupe(found))


def mean_events(space: FiniteSpace, order: Preorder, y) -> np.ndarray:
    """Thresholds where the mean minimiser changes (``s_A = sum_A w (eta - y)``)."""
    y = space.check_vector(y, "y")
    w = space.weights
    return np.array(_parametric_breakpoints(order, -w * y, w.copy(), y.min() - 1.0, y.max() + 1.0))


def build_decreasing_path(space: FiniteSpace, order: Preorder, y, V: IdentificationFunction,
                          events=None) -> MinimizingPath:
    """Maximal minimisers on each cell between consecutive events.

    ``V`` must be constant in ``eta`` on each cell ``(e_k, e_{k+1}]``; the right
    endpoint represents the cell. By default the events are the observed
    responses, or the parametric breakpoints for the mean.
    """
    y = space.check_vector(y, "y")
    if events is None:
        events = mean_events(space, order, y) if V.kind == "mean" else np.unique(y)
    events = np.asarray(events, dtype=float)
    reps = np.append(events, (events[-1] if events.size else y.max()) + 1.0)
    sets = np.zeros((reps.size, space.n), dtype=bool)
    for k, eta in enumerate(reps):
        v = space.weights * np.asarray(V(eta, y), dtype=float)
        sets[k], _ = min_closure(order, v, policy=MAXIMAL)
    # maximal minimisers decrease in eta, so each column must be a prefix
    if np.any(sets[1:] & ~sets[:-1]):
        raise AssertionError("minimising path is not decreasing")
    sets.setflags(write=False)
    return MinimizingPath(events, sets, float(y.min()), float(y.max()), V.alpha)


def path_inverse(path: MinimizingPath) -> ConditionalFunctional:
    """``sup{eta : i in A_eta}``, checked against ``inf{eta : i not in A_eta}``."""
    left = np.concatenate([[-np.inf], path.events])
    right = np.concatenate([path.events, [np.inf]])
    member = path.sets
    sup_rep = np.where(member, right[:, None], -np.inf).max(axis=0)
    inf_rep = np.where(~member, left[:, None], np.inf).min(axis=0)
    if not np.array_equal(sup_rep, inf_rep):
        raise AssertionError("sup and inf representations disagree")
    clipped = ~np.isfinite(sup_rep)
    values = np.clip(sup_rep, path.lo, path.hi)
    values.setflags(write=False)
    return ConditionalFunctional(values, clipped)


def conditional_mean(space: FiniteSpace, order: Preorder, y) -> ConditionalFunctional:
    return path_inverse(build_decreasing_path(space, order, y, mean_identification()))


def _side_level(alpha: float, breaks: np.ndarray, side: str) -> float:
    if side == "lower":
        below = breaks[breaks < alpha - BREAK_TOL]
        return 0.5 * (alpha + (below.max() if below.size else 0.0))
    if side == "upper":
        above = breaks[breaks > alpha + BREAK_TOL]
        return 0.5 * (alpha + (above.min() if above.size else 1.0))
    raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")


def conditional_quantile(space: FiniteSpace, order: Preorder, y, alpha: float,
                         side: str = "lower") -> ConditionalFunctional:
    """Lower or upper conditional ``alpha``-quantile from a minimising path.

    The lower quantile uses the path at a level just below ``alpha`` (strictly
    between ``alpha`` and the previous breakpoint), which realises the
    left-continuous extension; the upper quantile uses a level just above.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    y = space.check_vector(y, "y")
    level = _side_level(alpha, alpha_breakpoints(space, order, y), side)
    out = path_inverse(build_decreasing_path(space, order, y, quantile_identification(level)))
    # every v_i is -level * w_i below min(y) and positive above max(y)
    if out.clipped.any():
        raise AssertionError("quantile path produced an infinite value")
    return out


@dataclass(frozen=True)
class FixedPointResult:
    """Both sides of the quantile fixed-point equivalence for a candidate ``x``.

    ``grouped``: ``x`` is the lower quantile of ``y`` within each level set of ``x``.
    ``lattice``: ``x`` is the lower conditional quantile given the order induced by ``x``.
    ``witness`` names a level set where ``grouped`` fails.
    """

    grouped: bool
    lattice: bool
    witness: tuple | None = None

    @property
    def agree(self) -> bool:
        return self.grouped == self.lattice


def weighted_lower_quantile(values, weights, alpha: float) -> float:
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    idx = np.argsort(v, kind="stable")
    cum = np.cumsum(w[idx]) / w.sum()
    k = int(np.searchsorted(cum, alpha - BREAK_TOL, side="left"))
    return float(v[idx][min(k, v.size - 1)])


def check_quantile_fixed_point(x, y, space: FiniteSpace, alpha: float) -> FixedPointResult:
    """Is ``x`` its own conditional ``alpha``-quantile, grouped and lattice-wise?"""
    x = space.check_vector(x, "x")
    y = space.check_vector(y, "y")
    w = space.weights
    witness = None
    for value in np.unique(x):
        g = x == value
        q = weighted_lower_quantile(y[g], w[g], alpha)
        if q != value:
            witness = (tuple(np.flatnonzero(g).tolist()), float(value), q)
            break
    order = preorder_from_covariates(x)
    lattice = bool(np.array_equal(conditional_quantile(space, order, y, alpha).values, x))
    return FixedPointResult(witness is None, lattice, witness)

