"""Finite probability spaces, preorders on atoms and their upper sets.

A sigma-lattice on a finite space is always the family of upper sets of
some preorder, so lattices are carried around as :class:`Preorder` objects
and only enumerated explicitly on verification paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

WEIGHT_TOL = 1e-12
MASS_TOL = 1e-12
DEFAULT_ENUMERATION_CAP = 20


class EnumerationCapError(ValueError):
    """Raised when an exhaustive enumeration would exceed its size cap."""


@dataclass(frozen=True)
class FiniteSpace:
    """Atoms ``0..n-1`` carrying strictly positive probability weights."""

    weights: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise ValueError("a finite space needs at least one atom")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("atom weights must be finite and strictly positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"atom weights sum to {w.sum()!r}, expected 1")
        if self.labels is not None and len(self.labels) != w.size:
            raise ValueError("labels must have one entry per atom")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, n: int) -> "FiniteSpace":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def from_unnormalized(cls, weights, labels=None) -> "FiniteSpace":
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        return cls(w / w.sum(), labels)

    def check_vector(self, values, name: str = "vector") -> np.ndarray:
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.size != self.n:
            raise ValueError(f"{name} has length {v.size}, space has {self.n} atoms")
        return v


def transitive_closure(rel: np.ndarray) -> np.ndarray:
    """Reflexive-transitive closure of a boolean relation (Warshall)."""
    c = np.array(rel, dtype=bool)
    n = c.shape[0]
    c |= np.eye(n, dtype=bool)
    for k in range(n):
        c |= np.outer(c[:, k], c[k, :])
    return c


@dataclass(frozen=True, eq=False)
class Preorder:
    """Reflexive, transitive relation on ``n`` elements; ``leq[i, j]`` means i ⪯ j."""

    leq: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.leq, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("relation matrix must be square")
        if not m.diagonal().all():
            raise ValueError("preorder must be reflexive")
        # i ⪯ k ⪯ j must imply i ⪯ j
        composed = (m.astype(np.int64) @ m.astype(np.int64)) > 0
        if np.any(composed & ~m):
            raise ValueError("preorder must be transitive")
        m.setflags(write=False)
        object.__setattr__(self, "leq", m)

    @property
    def n(self) -> int:
        return self.leq.shape[0]

    def __eq__(self, other):
        return isinstance(other, Preorder) and np.array_equal(self.leq, other.leq)

    def __hash__(self):
        return hash(self.leq.tobytes())

    @classmethod
    def from_edges(cls, n: int, edges) -> "Preorder":
        rel = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for {n} elements")
            rel[i, j] = True
        return cls(transitive_closure(rel))

    @classmethod
    def chain(cls, n: int) -> "Preorder":
        return cls(np.triu(np.ones((n, n), dtype=bool)))

    @classmethod
    def antichain(cls, n: int) -> "Preorder":
        return cls(np.eye(n, dtype=bool))

    def reversed(self) -> "Preorder":
        return Preorder(self.leq.T.copy())

    def pairs(self) -> np.ndarray:
        """All strict pairs ``(i, j)`` with ``i != j`` and ``i ⪯ j``."""
        m = self.leq & ~np.eye(self.n, dtype=bool)
        return np.argwhere(m)

    def is_total(self) -> bool:
        return bool(np.all(self.leq | self.leq.T))

    def classes(self) -> np.ndarray:
        """Label of each element's equivalence class (mutual ⪯), numbered by first member."""
        if "classes" not in self._cache:
            eq = self.leq & self.leq.T
            labels = np.full(self.n, -1, dtype=int)
            k = 0
            for i in range(self.n):
                if labels[i] < 0:
                    labels[eq[i]] = k
                    k += 1
            self._cache["classes"] = labels
        return self._cache["classes"]

    def quotient(self) -> tuple[np.ndarray, "Preorder"]:
        """Class labels and the partial order induced on the classes."""
        if "quotient" not in self._cache:
            labels = self.classes()
            k = labels.max() + 1
            reps = np.array([np.flatnonzero(labels == c)[0] for c in range(k)])
            self._cache["quotient"] = (labels, Preorder(self.leq[np.ix_(reps, reps)]))
        return self._cache["quotient"]

    def covers(self) -> np.ndarray:
        """Hasse edges ``(i, j)``: i ≺ j strictly with nothing strictly in between.

        Only meaningful for partial orders; for preorders use :meth:`quotient` first.
        """
        if "covers" not in self._cache:
            strict = self.leq & ~self.leq.T
            si = strict.astype(np.int64)
            between = (si @ si) > 0
            self._cache["covers"] = np.argwhere(strict & ~between)
        return self._cache["covers"]

    def is_upper_set(self, members) -> bool:
        mask = _as_mask(members, self.n)
        # some i in the set with a successor j outside
        return not np.any(self.leq[mask][:, ~mask])

    def upper_closure(self, members) -> frozenset:
        mask = _as_mask(members, self.n)
        return frozenset(np.flatnonzero(self.leq[mask].any(axis=0)).tolist())

    def restrict(self, idx) -> "Preorder":
        idx = np.asarray(idx, dtype=int)
        return Preorder(self.leq[np.ix_(idx, idx)])


def _as_mask(members, n: int) -> np.ndarray:
    arr = np.asarray(members)
    if arr.dtype == bool and arr.shape == (n,):
        return arr
    mask = np.zeros(n, dtype=bool)
    mask[list(members)] = True
    return mask


def preorder_from_covariates(table, space: FiniteSpace | None = None) -> Preorder:
    """Componentwise order on the rows of an ``n x p`` covariate table."""
    x = np.asarray(table, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("covariate table must be two-dimensional")
    if np.isnan(x).any():
        raise ValueError("covariate table has missing values")
    if space is not None and x.shape[0] != space.n:
        raise ValueError(f"covariate table has {x.shape[0]} rows, space has {space.n} atoms")
    leq = np.all(x[:, None, :] <= x[None, :, :], axis=2)
    return Preorder(leq)


def preorder_from_stochastic_order(cdfs: Sequence) -> Preorder:
    """``i ⪯ j`` iff ``F_i <=_st F_j``, i.e. ``F_i(x) >= F_j(x)`` on the merged jump grid."""
    n = len(cdfs)
    if n == 0:
        return Preorder(np.zeros((0, 0), dtype=bool))
    grid = np.unique(np.concatenate([np.asarray(F.points) for F in cdfs]))
    vals = np.vstack([F.cdf(grid) for F in cdfs])
    leq = np.all(vals[:, None, :] >= vals[None, :, :] - MASS_TOL, axis=2)
    return Preorder(leq)


def upper_set_masks(order: Preorder, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Boolean matrix whose rows are all upper sets, in increasing bitmask order."""
    n = order.n
    if n > cap:
        raise EnumerationCapError(f"{n} elements exceed the enumeration cap of {cap}")
    codes = np.arange(1 << n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    keep = np.ones(codes.size, dtype=bool)
    for i, j in order.pairs():
        keep &= ~bits[:, i] | bits[:, j]
    return bits[keep]


def enumerate_upper_sets(order: Preorder, cap: int = DEFAULT_ENUMERATION_CAP) -> list[frozenset]:
    """Every upward-closed subset, including the empty set and the whole space.

    Exponential in ``n``; reserved for verification code.
    """
    sets = []
    for row in upper_set_masks(order, cap):
        members = frozenset(np.flatnonzero(row).tolist())
        assert order.is_upper_set(row)
        sets.append(members)
    return sets


def is_upper_measurable(order: Preorder, values, tol: float = 0.0) -> bool:
    """True iff ``i ⪯ j`` implies ``values[i] <= values[j]`` (up to ``tol``)."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size != order.n:
        raise ValueError("values length does not match the preorder")
    pairs = order.pairs()
    if pairs.size == 0:
        return True
    return bool(np.all(v[pairs[:, 0]] <= v[pairs[:, 1]] + tol))
