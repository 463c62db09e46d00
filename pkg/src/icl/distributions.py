"""Right-continuous step distribution functions on the real line."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StepCdf:
    """Finitely supported distribution given by jump points and cumulative masses.

    ``F(x)`` is the cumulative mass at the largest jump point ``<= x`` and 0
    below the first jump point.
    """

    points: np.ndarray
    cum: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float).reshape(-1)
        c = np.array(self.cum, dtype=float).reshape(-1)
        if p.size == 0 or p.size != c.size:
            raise ValueError("points and cum must be nonempty and of equal length")
        if not np.all(np.isfinite(p)):
            raise ValueError("jump points must be finite")
        if np.any(np.diff(p) <= 0):
            raise ValueError("jump points must be strictly increasing")
        if c[0] <= 0 or np.any(np.diff(c) <= 0):
            raise ValueError("cumulative masses must be positive and strictly increasing")
        if abs(c[-1] - 1.0) > CUM_TOL:
            raise ValueError(f"total mass is {c[-1]!r}, expected 1")
        c[-1] = 1.0
        p.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "cum", c)

    @classmethod
    def from_masses(cls, points, masses) -> "StepCdf":
        """Build from (possibly unsorted, repeated) atoms; equal points are merged."""
        p = np.asarray(points, dtype=float).reshape(-1)
        m = np.asarray(masses, dtype=float).reshape(-1)
        if p.size != m.size:
            raise ValueError("points and masses must have equal length")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        uniq, inv = np.unique(p, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, m)
        keep = merged > 0
        return cls(uniq[keep], np.cumsum(merged[keep]))

    @classmethod
    def point_mass(cls, x: float) -> "StepCdf":
        return cls([x], [1.0])

    @classmethod
    def empirical(cls, values, weights=None) -> "StepCdf":
        v = np.asarray(values, dtype=float).reshape(-1)
        w = np.full(v.size, 1.0 / v.size) if weights is None else np.asarray(weights, dtype=float)
        return cls.from_masses(v, w / w.sum())

    @classmethod
    def from_grid(cls, grid, values, tol: float = CUM_TOL) -> "StepCdf":
        """Build from cdf values on a sorted grid, dropping increments of at most ``tol``."""
        g = np.asarray(grid, dtype=float)
        v = np.asarray(values, dtype=float)
        inc = np.diff(np.concatenate([[0.0], v]))
        keep = inc > tol
        return cls(g[keep], v[keep])

    @property
    def masses(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.cum]))

    def cdf(self, x):
        idx = np.searchsorted(self.points, x, side="right")
        return np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0.0)

    def left_limit(self, x):
        idx = np.searchsorted(self.points, x, side="left")
        return np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0.0)

    def lower_quantile(self, alpha: float, tol: float = CUM_TOL) -> float:
        _check_level(alpha)
        k = int(np.searchsorted(self.cum, alpha - tol, side="left"))
        return float(self.points[min(k, self.points.size - 1)])

    def upper_quantile(self, alpha: float, tol: float = CUM_TOL) -> float:
        _check_level(alpha)
        k = int(np.searchsorted(self.cum, alpha + tol, side="right"))
        return float(self.points[min(k, self.points.size - 1)])

    def mean(self) -> float:
        return float(np.dot(self.masses, self.points))

    def same_as(self, other: "StepCdf", tol: float = CUM_TOL) -> bool:
        return (
            self.points.size == other.points.size
            and np.array_equal(self.points, other.points)
            and bool(np.all(np.abs(self.cum - other.cum) <= tol))
        )

    def key(self) -> tuple:
        return (tuple(self.points.tolist()), tuple(self.cum.tolist()))

    def __repr__(self):
        atoms = ", ".join(f"{m:.4g}@{p:.4g}" for m, p in zip(self.masses, self.points))
        return f"StepCdf({atoms})"


def _check_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {alpha!r}")


def cdf_eval(F: StepCdf, x: float) -> float:
    return float(F.cdf(x))


def left_limit_eval(F: StepCdf, x: float) -> float:
    """Mass strictly below ``x``."""
    return float(F.left_limit(x))


def lower_quantile(F: StepCdf, alpha: float) -> float:
    """``inf{z : F(z) >= alpha}``."""
    return F.lower_quantile(alpha)


def upper_quantile(F: StepCdf, alpha: float) -> float:
    """``sup{z : F(z) <= alpha}``."""
    return F.upper_quantile(alpha)


def mean(F: StepCdf) -> float:
    return F.mean()


def stochastically_leq(F: StepCdf, G: StepCdf, tol: float = CUM_TOL) -> bool:
    """``F <=_st G``: ``F(x) >= G(x)`` everywhere (checked on the merged jump grid)."""
    grid = np.union1d(F.points, G.points)
    return bool(np.all(F.cdf(grid) >= G.cdf(grid) - tol))
