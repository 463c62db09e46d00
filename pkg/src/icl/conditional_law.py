"""Isotonic conditional law of a real response on a finite space.

The law is assembled threshold by threshold: the survival probability at
each observed value ``z`` is the isotonic regression of ``1{y > z}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .distributions import StepCdf
from .isotonic import isotonic_mean
from .space import FiniteSpace, Preorder

ASSEMBLY_TOL = 1e-10


class AssemblyError(AssertionError):
    """The per-threshold fits do not assemble into monotone step cdfs."""


@dataclass(frozen=True, eq=False)
class IclFit:
    """Per-atom step cdfs evaluated on the sorted unique responses.

    ``cdf_matrix[i, k]`` is ``F_i(thresholds[k])``.
    """

    thresholds: np.ndarray
    cdf_matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.cdf_matrix.shape[0]

    @cached_property
    def rows(self) -> tuple:
        return tuple(StepCdf.from_grid(self.thresholds, row) for row in self.cdf_matrix)

    def survival(self) -> np.ndarray:
        return 1.0 - self.cdf_matrix

    def quantile(self, alpha: float, side: str = "lower") -> np.ndarray:
        return icl_quantile(self, alpha, side)

    def means(self) -> np.ndarray:
        return np.array([F.mean() for F in self.rows])


def _check_assembly(order: Preorder, cdf: np.ndarray) -> None:
    if np.any(np.diff(cdf, axis=1) < -ASSEMBLY_TOL):
        raise AssemblyError("fitted cdf rows are not increasing in the threshold")
    if np.any(np.abs(cdf[:, -1] - 1.0) > ASSEMBLY_TOL):
        raise AssemblyError("fitted cdf rows do not reach 1 at the largest response")
    pairs = order.pairs()
    if pairs.size and np.any(cdf[pairs[:, 0]] < cdf[pairs[:, 1]] - ASSEMBLY_TOL):
        raise AssemblyError("fitted cdf columns are not antitonic along the order")


def icl_fit(space: FiniteSpace, order: Preorder, y) -> IclFit:
    """Isotonic conditional law of ``y`` given the upper sets of ``order``."""
    y = space.check_vector(y, "y")
    if order.n != space.n:
        raise ValueError(f"order has {order.n} elements, space has {space.n} atoms")
    z = np.unique(y)
    cdf = np.empty((space.n, z.size))
    for k, zk in enumerate(z[:-1]):
        cdf[:, k] = 1.0 - isotonic_mean(space, order, (y > zk).astype(float)).fitted
    cdf[:, -1] = 1.0
    _check_assembly(order, cdf)
    # rounding can leave values a hair outside [0, 1]
    cdf = np.clip(cdf, 0.0, 1.0)
    z.setflags(write=False)
    cdf.setflags(write=False)
    return IclFit(z, cdf)


def icl_quantile(fit: IclFit, alpha: float, side: str = "lower") -> np.ndarray:
    """Per-atom lower (or upper) ``alpha``-quantile of the fitted rows."""
    if side == "lower":
        return np.array([F.lower_quantile(alpha) for F in fit.rows])
    if side == "upper":
        return np.array([F.upper_quantile(alpha) for F in fit.rows])
    raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")


@dataclass(frozen=True)
class EquivalenceResult:
    """Outcome of comparing the isotonic and classical conditional laws.

    ``witness`` is ``(lower_class, upper_class, z)`` for comparable classes
    whose empirical cdfs are in the wrong order at ``z``.
    """

    holds: bool
    classical: np.ndarray
    witness: tuple | None = None


def classical_law(space: FiniteSpace, order: Preorder, y) -> tuple[np.ndarray, np.ndarray]:
    """Empirical cdf of ``y`` within each class of mutually equivalent atoms.

    Returns ``(thresholds, cdf_matrix)`` with one row per atom.
    """
    y = space.check_vector(y, "y")
    labels = order.classes()
    z = np.unique(y)
    k = labels.max() + 1
    w = space.weights
    mass = np.zeros((k, z.size))
    np.add.at(mass, (labels, np.searchsorted(z, y)), w)
    cdf = np.cumsum(mass, axis=1) / mass.sum(axis=1, keepdims=True)
    return z, cdf[labels]


def check_classical_equivalence(space: FiniteSpace, order: Preorder, y) -> EquivalenceResult:
    """Does the classical conditional law given the order classes respect the order?

    When it does, it must coincide with :func:`icl_fit`; that is asserted.
    """
    z, classical = classical_law(space, order, y)
    labels = order.classes()
    for i, j in order.pairs():
        if labels[i] == labels[j]:
            continue
        bad = np.flatnonzero(classical[i] < classical[j] - 1e-12)
        if bad.size:
            lo = tuple(np.flatnonzero(labels == labels[i]).tolist())
            hi = tuple(np.flatnonzero(labels == labels[j]).tolist())
            return EquivalenceResult(False, classical, (lo, hi, float(z[bad[0]])))
    fit = icl_fit(space, order, y)
    if np.max(np.abs(fit.cdf_matrix - classical)) > ASSEMBLY_TOL:
        raise AssertionError("monotone classical law differs from the isotonic conditional law")
    return EquivalenceResult(True, classical)
