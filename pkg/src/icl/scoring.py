"""Identification functions, elementary losses and proper scoring rules.

Every integral over the real line here has a piecewise-constant integrand,
so the CRPS and its quantile representation are computed as exact finite
sums. Passing ``exact=True`` performs those sums in rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .distributions import StepCdf


@dataclass(frozen=True)
class IdentificationFunction:
    """``V(x, y)``, increasing and left-continuous in ``x``.

    ``kind`` is ``"mean"``, ``"quantile"`` or ``"custom"``; ``alpha`` is set for
    quantiles. ``strict`` records whether ``V`` is strictly increasing in ``x``.
    """

    evaluator: Callable
    kind: str = "custom"
    alpha: float | None = None
    strict: bool = False

    def __call__(self, x, y):
        return self.evaluator(x, y)


def mean_identification() -> IdentificationFunction:
    return IdentificationFunction(lambda x, y: np.asarray(x, float) - np.asarray(y, float),
                                  kind="mean", strict=True)


def quantile_identification(alpha: float) -> IdentificationFunction:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")

    def v(x, y):
        return (np.asarray(x, float) > np.asarray(y, float)).astype(float) - alpha

    return IdentificationFunction(v, kind="quantile", alpha=float(alpha), strict=False)


def check_identification(V: IdentificationFunction, xs, ys, eps: float = 1e-9) -> bool:
    """Spot-check that ``V(., y)`` is increasing and left-continuous on a grid."""
    xs = np.sort(np.asarray(xs, dtype=float))
    for y in np.asarray(ys, dtype=float):
        vals = np.asarray(V(xs, y), dtype=float)
        if np.any(np.diff(vals) < -1e-12):
            return False
        left = np.asarray(V(xs - eps, y), dtype=float)
        if np.any(np.abs(left - vals) > 1e-6 * (1 + np.abs(vals))):
            return False
    return True


def elementary_quantile_score(alpha, eta, x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return (1 - alpha) * ((y < eta) & (eta <= x)) + alpha * ((x < eta) & (eta <= y))


def elementary_mean_score(eta, x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return (eta - y) * ((y < eta) & (eta <= x)) + (y - eta) * ((x < eta) & (eta <= y))


def quantile_score(alpha, x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return ((y <= x).astype(float) - alpha) * (x - y)


def brier_score(x, y):
    return (np.asarray(x, float) - np.asarray(y, float)) ** 2


def lebesgue_grid(lo: float, hi: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint grid on ``[lo, hi]`` with cell mass ``step`` (Lebesgue on a grid)."""
    k = int(np.ceil((hi - lo) / step))
    points = lo + step * (np.arange(k) + 0.5)
    return points, np.full(k, step)


def mixture_mean_score(eta_points, eta_weights, x, y):
    """``sum_k h_k * S^E_{eta_k}(x, y)`` for a finite discrete measure ``H``.

    With ``H`` Lebesgue measure the mixture equals ``(x - y)**2 / 2``.
    """
    pts = np.asarray(eta_points, float).reshape(-1)
    wts = np.asarray(eta_weights, float).reshape(-1)
    if pts.size == 0:
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
    vals = elementary_mean_score(pts.reshape((-1,) + (1,) * np.ndim(x)), x, y)
    return np.tensordot(wts, vals, axes=1)


def mixture_quantile_score(alpha, eta_points, eta_weights, x, y):
    pts = np.asarray(eta_points, float).reshape(-1)
    wts = np.asarray(eta_weights, float).reshape(-1)
    if pts.size == 0:
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
    vals = elementary_quantile_score(alpha, pts.reshape((-1,) + (1,) * np.ndim(x)), x, y)
    return np.tensordot(wts, vals, axes=1)


def crps(F: StepCdf, y: float, exact: bool = False) -> float:
    """CRPS as the integral of ``(F(z) - 1{y <= z})**2`` over z.

    The line is cut at the jump points and at ``y``; the integrand is constant
    on each cell and vanishes on both unbounded cells.
    """
    if exact:
        return float(crps_fraction(F, y))
    cuts = np.union1d(F.points, [y])
    left = cuts[:-1]
    lengths = np.diff(cuts)
    vals = F.cdf(left) - (y <= left)
    return float(np.sum(vals ** 2 * lengths))


def crps_fraction(F: StepCdf, y: float) -> Fraction:
    """Rational value of :func:`crps` for the binary fractions stored in ``F`` and ``y``."""
    y = Fraction(float(y))
    points = [Fraction(float(p)) for p in F.points]
    cum = [Fraction(float(c)) for c in F.cum]
    cuts = sorted(set(points) | {y})
    total = Fraction(0)
    k = 0
    level = Fraction(0)
    for a, b in zip(cuts[:-1], cuts[1:]):
        while k < len(points) and points[k] <= a:
            level = cum[k]
            k += 1
        ind = 1 if y <= a else 0
        total += (level - ind) ** 2 * (b - a)
    return total


def crps_via_quantiles(F: StepCdf, y: float, exact: bool = False) -> float:
    """``2 * int_0^1 QS_alpha(F^{-1}(alpha), y) d alpha`` summed over cum-level cells.

    On ``(c_{k-1}, c_k]`` the lower quantile is the k-th jump point ``p_k``, so
    the cell contributes ``(p_k - y) * (1{y <= p_k} (c_k - c_{k-1}) - (c_k^2 - c_{k-1}^2) / 2)``.
    """
    if exact:
        return float(crps_via_quantiles_fraction(F, y))
    c = F.cum
    prev = np.concatenate([[0.0], c[:-1]])
    p = F.points
    ind = (y <= p).astype(float)
    return float(2 * np.sum((p - y) * (ind * (c - prev) - (c * c - prev * prev) / 2)))


def crps_via_quantiles_fraction(F: StepCdf, y: float) -> Fraction:
    """Rational value of :func:`crps_via_quantiles`."""
    y_ = Fraction(float(y))
    total = Fraction(0)
    prev = Fraction(0)
    for p, c in zip(F.points, F.cum):
        p_, c_ = Fraction(float(p)), Fraction(float(c))
        ind = 1 if y_ <= p_ else 0
        total += (p_ - y_) * (ind * (c_ - prev) - (c_ * c_ - prev * prev) / 2)
        prev = c_
    return 2 * total


def mean_crps(cdfs, y, weights=None, exact: bool = False) -> float:
    y = np.asarray(y, dtype=float)
    w = np.full(y.size, 1.0 / y.size) if weights is None else np.asarray(weights, float)
    return float(sum(wi * crps(F, yi, exact=exact) for F, yi, wi in zip(cdfs, y, w)))


def crps_matrix(thresholds, cdf_matrix, y, weights=None) -> float:
    """Mean CRPS of cdfs tabulated on a sorted grid containing every observation.

    Row ``i`` is taken constant between grid points and equal to 1 from the
    last one on, so each integral is a finite sum over grid cells.
    """
    z = np.asarray(thresholds, dtype=float)
    G = np.asarray(cdf_matrix, dtype=float)
    y = np.asarray(y, dtype=float)
    if G.shape != (y.size, z.size):
        raise ValueError("cdf matrix must have one row per observation and one column per threshold")
    if y.min() < z[0] or y.max() > z[-1]:
        raise ValueError("observations must lie within the threshold grid")
    w = np.full(y.size, 1.0 / y.size) if weights is None else np.asarray(weights, float)
    ind = y[:, None] <= z[None, :-1]
    per_atom = ((G[:, :-1] - ind) ** 2) @ np.diff(z)
    return float(np.dot(w, per_atom))
