"""Exact calibration diagnostics for step-cdf forecasts on a finite space.

Every notion compares a forecast with the conditional law of the response
given some function of the forecast. On a finite space the conditioning
reduces to grouping atoms, and each statement only needs checking on a
finite grid of thresholds or levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .conditional_law import icl_fit
from .distributions import CUM_TOL, StepCdf
from .functionals import weighted_lower_quantile
from .isotonic import isotonic_mean
from .space import FiniteSpace, preorder_from_covariates, preorder_from_stochastic_order

CHECK_TOL = 1e-10


class HierarchyViolation(AssertionError):
    """A profile passed a stronger calibration check but failed a weaker one."""


@dataclass(frozen=True)
class ForecastProfile:
    """One predictive step cdf per atom, plus the realised responses."""

    cdfs: tuple
    space: FiniteSpace
    y: np.ndarray

    def __post_init__(self):
        cdfs = tuple(self.cdfs)
        if len(cdfs) != self.space.n:
            raise ValueError(f"{len(cdfs)} forecasts for {self.space.n} atoms")
        if not all(isinstance(F, StepCdf) for F in cdfs):
            raise TypeError("forecasts must be StepCdf instances")
        y = self.space.check_vector(self.y, "y")
        y.setflags(write=False)
        object.__setattr__(self, "cdfs", cdfs)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.space.n

    def grid(self) -> np.ndarray:
        """All forecast jump points and responses."""
        return np.unique(np.concatenate([F.points for F in self.cdfs] + [self.y]))

    def cdf_table(self, grid) -> np.ndarray:
        return np.vstack([F.cdf(grid) for F in self.cdfs])


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    witness: dict | None = None

    def __bool__(self):
        return self.ok


def group_identical(cdfs: Sequence[StepCdf], tol: float = CUM_TOL) -> list[np.ndarray]:
    """Atoms partitioned by identical forecast (same jumps, masses within ``tol``)."""
    reps: list[StepCdf] = []
    members: list[list[int]] = []
    for i, F in enumerate(cdfs):
        for r, G in enumerate(reps):
            if F.same_as(G, tol):
                members[r].append(i)
                break
        else:
            reps.append(F)
            members.append([i])
    return [np.array(m) for m in members]


def _group_by_value(values: np.ndarray, tol: float) -> list[np.ndarray]:
    idx = np.argsort(values, kind="stable")
    groups, current = [], [idx[0]]
    for a, b in zip(idx[:-1], idx[1:]):
        if values[b] - values[a] > tol:
            groups.append(np.array(sorted(current)))
            current = []
        current.append(b)
    groups.append(np.array(sorted(current)))
    return groups


def check_auto(profile: ForecastProfile, tol: float = CHECK_TOL) -> CheckResult:
    """``F(z) = P(Y <= z | F)`` for every z."""
    w, y = profile.space.weights, profile.y
    grid = profile.grid()
    for g in group_identical(profile.cdfs):
        F = profile.cdfs[g[0]]
        observed = StepCdf.empirical(y[g], w[g]).cdf(grid)
        diff = np.abs(F.cdf(grid) - observed)
        if diff.max() > tol:
            k = int(np.argmax(diff))
            return CheckResult(False, {"group": g.tolist(), "z": float(grid[k]),
                                       "forecast": float(F.cdf(grid[k])),
                                       "observed": float(observed[k])})
    return CheckResult(True)


def check_isotonic(profile: ForecastProfile, tol: float = CHECK_TOL) -> CheckResult:
    """The isotonic conditional law given the stochastic order of the forecasts reproduces them."""
    order = preorder_from_stochastic_order(profile.cdfs)
    fit = icl_fit(profile.space, order, profile.y)
    grid = profile.grid()
    fitted = np.vstack([F.cdf(grid) for F in fit.rows])
    diff = np.abs(fitted - profile.cdf_table(grid))
    if diff.max() > tol:
        i, k = np.unravel_index(int(np.argmax(diff)), diff.shape)
        return CheckResult(False, {"atom": int(i), "z": float(grid[k]),
                                   "forecast": float(profile.cdfs[i].cdf(grid[k])),
                                   "fitted": float(fitted[i, k])})
    return CheckResult(True)


def check_threshold(profile: ForecastProfile, tol: float = CHECK_TOL) -> CheckResult:
    """``F(z) = P(Y <= z | F(z))`` for every z."""
    w, y = profile.space.weights, profile.y
    grid = profile.grid()
    table = profile.cdf_table(grid)
    for k, z in enumerate(grid):
        hit = (y <= z).astype(float)
        for g in _group_by_value(table[:, k], CUM_TOL):
            freq = float(np.dot(w[g], hit[g]) / w[g].sum())
            value = float(table[g[0], k])
            if abs(freq - value) > tol:
                return CheckResult(False, {"z": float(z), "group": g.tolist(),
                                           "forecast": value, "observed": freq})
    return CheckResult(True)


def _midpoints(levels: np.ndarray) -> np.ndarray:
    edges = np.unique(np.concatenate([[0.0, 1.0], levels]))
    return 0.5 * (edges[:-1] + edges[1:])


def quantile_levels(profile: ForecastProfile) -> np.ndarray:
    """Levels where either side of quantile calibration can change, plus midpoints.

    Groups only change at forecast cum levels; within each such cell the
    group quantiles change at the group's own cumulative weights.
    """
    w, y = profile.space.weights, profile.y
    cum = np.unique(np.concatenate([F.cum for F in profile.cdfs]))
    levels = [cum]
    for a in _midpoints(cum):
        q = np.array([F.lower_quantile(a) for F in profile.cdfs])
        for value in np.unique(q):
            g = q == value
            yw = np.bincount(np.searchsorted(np.unique(y[g]), y[g]), weights=w[g])
            levels.append(np.cumsum(yw) / w[g].sum())
    lv = np.unique(np.concatenate(levels))
    lv = lv[(lv > CUM_TOL) & (lv < 1.0 - CUM_TOL)]
    return np.unique(np.concatenate([lv, _midpoints(lv)]))


def check_quantile(profile: ForecastProfile, tol: float = CHECK_TOL) -> CheckResult:
    """``F^{-1}(alpha)`` is the lower alpha-quantile of Y given ``F^{-1}(alpha)``.

    Also checks ``P(Y < x | .) <= alpha <= P(Y <= x | .)`` on every group.
    """
    w, y = profile.space.weights, profile.y
    for a in quantile_levels(profile):
        q = np.array([F.lower_quantile(a) for F in profile.cdfs])
        for value in np.unique(q):
            g = np.flatnonzero(q == value)
            wg = w[g] / w[g].sum()
            below = float(np.dot(wg, y[g] < value))
            upto = float(np.dot(wg, y[g] <= value))
            emp = weighted_lower_quantile(y[g], w[g], a)
            if emp != value or below > a + tol or a > upto + tol:
                return CheckResult(False, {"alpha": float(a), "group": g.tolist(),
                                           "forecast": float(value), "observed": emp,
                                           "below": below, "at_or_below": upto})
    return CheckResult(True)


def check_pit_bounds(profile: ForecastProfile, tol: float = CHECK_TOL) -> CheckResult:
    """``P(F(Y) < alpha) <= alpha <= P(F(Y-) <= alpha)`` for all alpha."""
    w, y = profile.space.weights, profile.y
    upper = np.array([F.cdf(v) for F, v in zip(profile.cdfs, y)], dtype=float)
    lower = np.array([F.left_limit(v) for F, v in zip(profile.cdfs, y)], dtype=float)
    attained = np.unique(np.concatenate([upper, lower, [0.0, 1.0]]))
    grid = np.unique(np.concatenate([attained, _midpoints(attained)]))
    for a in grid:
        strictly_below = float(w[upper < a - tol].sum())
        reached = float(w[lower <= a + tol].sum())
        if strictly_below > a + tol or a > reached + tol:
            return CheckResult(False, {"alpha": float(a), "p_below": strictly_below,
                                       "p_left_limit": reached})
    return CheckResult(True)


@dataclass(frozen=True)
class CalibrationReport:
    auto: bool
    isotonic: bool
    threshold: bool
    quantile: bool
    pit_bounds: bool
    witnesses: dict = field(default_factory=dict)
    tolerance: float = CHECK_TOL

    def __post_init__(self):
        if self.auto and not self.isotonic:
            raise HierarchyViolation("auto-calibrated but not isotonically calibrated")
        if self.isotonic and not (self.threshold and self.quantile):
            raise HierarchyViolation("isotonically calibrated but not threshold and quantile calibrated")

    def flags(self) -> dict:
        return {"auto": self.auto, "isotonic": self.isotonic, "threshold": self.threshold,
                "quantile": self.quantile, "pit_bounds": self.pit_bounds}


def calibration_report(profile: ForecastProfile, tol: float = CHECK_TOL) -> CalibrationReport:
    checks = {"auto": check_auto, "isotonic": check_isotonic, "threshold": check_threshold,
              "quantile": check_quantile, "pit_bounds": check_pit_bounds}
    results = {name: fn(profile, tol) for name, fn in checks.items()}
    witnesses = {name: r.witness for name, r in results.items() if not r.ok}
    return CalibrationReport(**{k: r.ok for k, r in results.items()},
                             witnesses=witnesses, tolerance=tol)


@dataclass(frozen=True)
class MeanFixedPointResult:
    """``grouped``: x equals the mean of y on each level set of x.
    ``lattice``: x equals the isotonic regression of y on the order induced by x.
    """

    grouped: bool
    lattice: bool

    @property
    def agree(self) -> bool:
        return self.grouped == self.lattice


def check_mean_fixed_point(x, y, space: FiniteSpace, tol: float = CHECK_TOL) -> MeanFixedPointResult:
    x = space.check_vector(x, "x")
    y = space.check_vector(y, "y")
    w = space.weights
    _, inv = np.unique(x, return_inverse=True)
    means = np.bincount(inv, weights=w * y) / np.bincount(inv, weights=w)
    grouped = bool(np.all(np.abs(means[inv] - x) <= tol))
    fit = isotonic_mean(space, preorder_from_covariates(x), y).fitted
    lattice = bool(np.all(np.abs(fit - x) <= tol))
    return MeanFixedPointResult(grouped, lattice)
