"""Brute-force verifiers and randomized instance generators.

Nothing here calls the fast solvers: the oracles enumerate partitions or
upper sets directly, so agreement with the solvers is an independent check.
Every routine enforces an :class:`OracleBudget` before enumerating.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from .distributions import StepCdf
from .space import EnumerationCapError, FiniteSpace, Preorder, transitive_closure, upper_set_masks

FIXTURE_DIR = Path(__file__).parent / "fixtures"
SCHEMA = "icl/1"
PROPERTIES = ("linearity", "tower", "ic_without_ac", "tcqc_without_ic")


@dataclass(frozen=True)
class OracleBudget:
    max_atoms: int = 8
    max_upper_sets: int = 1 << 12
    max_attempts: int = 20000

    def check(self, order: Preorder) -> None:
        if order.n > self.max_atoms:
            raise EnumerationCapError(f"{order.n} atoms exceed the oracle budget of {self.max_atoms}")


DEFAULT_BUDGET = OracleBudget()


@lru_cache(maxsize=None)
def set_partitions(n: int) -> np.ndarray:
    """All partitions of ``n`` items as restricted growth strings, one per row."""
    rows = [[0]] if n else [[]]
    for _ in range(1, n):
        rows = [r + [b] for r in rows for b in range(max(r) + 2)]
    out = np.array(rows, dtype=np.int64).reshape(len(rows), n)
    out.setflags(write=False)
    return out


def brute_isotonic_mean(space: FiniteSpace, order: Preorder, y,
                        budget: OracleBudget = DEFAULT_BUDGET) -> np.ndarray:
    """Best feasible vector among all "block means on a partition" candidates."""
    budget.check(order)
    y = space.check_vector(y, "y")
    w = space.weights
    labels = set_partitions(space.n)
    n = space.n
    onehot = labels[:, :, None] == np.arange(n)  # partition, atom, block
    W = np.einsum("pab,a->pb", onehot, w)
    S = np.einsum("pab,a->pb", onehot, w * y)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = S / W
    fitted = np.take_along_axis(means, labels, axis=1)
    feasible = np.ones(labels.shape[0], dtype=bool)
    for i, j in order.pairs():
        feasible &= fitted[:, i] <= fitted[:, j] + 1e-12
    sse = ((fitted - y) ** 2) @ w
    sse[~feasible] = np.inf
    return fitted[int(np.argmin(sse))].copy()


def _bit_index(masks: np.ndarray) -> np.ndarray:
    return (masks.astype(np.int64) << np.arange(masks.shape[1])).sum(axis=1)


def _subset_min(values: np.ndarray, n: int) -> np.ndarray:
    """``out[U] = min over subsets V of U of values[V]`` on all ``2**n`` bitmasks."""
    out = values.copy()
    idx = np.arange(1 << n)
    for b in range(n):
        has = (idx >> b) & 1 == 1
        out[has] = np.minimum(out[has], out[idx[has] ^ (1 << b)])
    return out


@dataclass(frozen=True)
class ScoreMinimum:
    x: np.ndarray
    value: float


def brute_expected_score_min(space: FiniteSpace, order: Preorder,
                             score: Callable[[np.ndarray, int], np.ndarray], value_domain,
                             budget: OracleBudget = DEFAULT_BUDGET) -> ScoreMinimum:
    """Minimise ``sum_i w_i score(x_i, i)`` over increasing ``x`` with values in ``value_domain``.

    An increasing ``x`` is a decreasing chain of upper sets ``{x >= d_k}``,
    so a dynamic programme over the domain from the top value down visits
    every candidate exactly once.
    """
    budget.check(order)
    n, w = space.n, space.weights
    d = np.unique(np.asarray(value_domain, dtype=float))
    cost = np.vstack([np.asarray(score(d, i), dtype=float) for i in range(n)]) * w[:, None]
    # neighbouring values with identical costs are interchangeable
    keep = np.ones(d.size, dtype=bool)
    keep[1:] = np.any(cost[:, 1:] != cost[:, :-1], axis=0)
    d, cost = d[keep], cost[:, keep]

    ups = upper_set_masks(order, cap=budget.max_atoms)
    if ups.shape[0] > budget.max_upper_sets:
        raise EnumerationCapError("too many upper sets for the oracle budget")
    full = 1 << n
    bits = ((np.arange(full)[:, None] >> np.arange(n)) & 1).astype(bool)
    is_upper = np.zeros(full, dtype=bool)
    is_upper[_bit_index(ups)] = True
    set_cost = bits.astype(float) @ cost  # set, level

    r = d.size
    best = np.where(is_upper, set_cost[:, r - 1], np.inf)
    history = [best]
    for k in range(r - 2, -1, -1):
        inner = np.where(is_upper, best - set_cost[:, k], np.inf)
        best = np.where(is_upper, set_cost[:, k] + _subset_min(inner, n), np.inf)
        history.append(best)
    history.reverse()

    # backtrack from the whole space, taking the smallest bitmask on ties
    x = np.empty(n)
    U = full - 1
    for k in range(r - 1):
        target = history[k][U] - set_cost[U, k]
        cand = np.flatnonzero(is_upper & ((np.arange(full) & ~U) == 0))
        vals = history[k + 1][cand] - set_cost[cand, k]
        V = int(cand[np.flatnonzero(np.abs(vals - target) <= 1e-12 * (1 + abs(target)))[0]])
        x[bits[U] & ~bits[V]] = d[k]
        U = V
    x[bits[U]] = d[r - 1]
    return ScoreMinimum(x, float(history[0][full - 1]))


def per_atom(fn: Callable, y) -> Callable[[np.ndarray, int], np.ndarray]:
    """Adapt ``fn(x, y_i)`` to the ``score(x, i)`` signature."""
    y = np.asarray(y, dtype=float)
    return lambda x, i: fn(x, y[i])


def block_mean_candidates(space: FiniteSpace, u) -> np.ndarray:
    """Weighted means of ``u`` over every nonempty subset of atoms."""
    u = space.check_vector(u, "u")
    n = space.n
    bits = ((np.arange(1, 1 << n)[:, None] >> np.arange(n)) & 1).astype(float)
    return np.unique((bits @ (space.weights * u)) / (bits @ space.weights))


def brute_crps_min(space: FiniteSpace, order: Preorder, y,
                   budget: OracleBudget = DEFAULT_BUDGET) -> np.ndarray:
    """CRPS minimiser over the stochastically monotone kernels, one threshold at a time.

    The expected CRPS is an integral over thresholds of expected Brier scores,
    so each survival column is minimised separately. Returns the cdf matrix on
    the sorted unique responses.
    """
    y = space.check_vector(y, "y")
    z = np.unique(y)
    cdf = np.ones((space.n, z.size))
    brier = lambda x, t: (x - t) ** 2  # noqa: E731
    for k, zk in enumerate(z[:-1]):
        u = (y > zk).astype(float)
        res = brute_expected_score_min(space, order, per_atom(brier, u),
                                       block_mean_candidates(space, u), budget)
        cdf[:, k] = 1.0 - res.x
    return cdf


# random instances


def random_preorder(rng: np.random.Generator, n: int, density: float | None = None,
                    tie_prob: float = 0.15) -> Preorder:
    """Random partial order on random classes; ties become preorder cycles."""
    if density is None:
        density = rng.uniform(0.1, 0.7)
    labels = np.arange(n)
    for i in range(1, n):
        if rng.random() < tie_prob:
            labels[i] = labels[rng.integers(0, i)]
    k = labels.max() + 1
    rel = np.triu(rng.random((k, k)) < density, 1)
    perm = rng.permutation(k)
    rel = transitive_closure(rel[np.ix_(perm, perm)])
    return Preorder(rel[np.ix_(labels, labels)])


def random_space(rng: np.random.Generator, n: int) -> FiniteSpace:
    if rng.random() < 0.4:
        return FiniteSpace.uniform(n)
    return FiniteSpace.from_unnormalized(rng.integers(1, 6, n).astype(float))


def random_response(rng: np.random.Generator, n: int) -> np.ndarray:
    if rng.random() < 0.6:
        return rng.integers(0, max(2, n // 2 + 2), n).astype(float)
    return np.round(rng.normal(size=n), 3)


def random_instance(rng: np.random.Generator, max_n: int = 8, min_n: int = 1):
    n = int(rng.integers(min_n, max_n + 1))
    return random_space(rng, n), random_preorder(rng, n), random_response(rng, n)


def random_step_cdf(rng: np.random.Generator, support=None, max_atoms: int = 4) -> StepCdf:
    if support is None:
        support = np.arange(5.0)
    k = int(rng.integers(1, min(max_atoms, len(support)) + 1))
    pts = rng.choice(np.asarray(support, dtype=float), size=k, replace=False)
    masses = rng.integers(1, 5, k).astype(float)
    return StepCdf.from_masses(pts, masses / masses.sum())


def random_ga_member(rng: np.random.Generator, order: Preorder, m: int) -> np.ndarray:
    """Random cdf matrix on ``m`` thresholds, increasing in k, antitonic along ``order``.

    ``G[i, k] = max{R[j, k'] : i ⪯ j, k' <= k}`` with last column 1.
    """
    R = rng.random((order.n, m))
    if rng.random() < 0.5:
        R = np.round(R * 4) / 4
    G = np.maximum.accumulate(R, axis=1)
    G = np.where(order.leq[:, :, None], G[None, :, :], -np.inf).max(axis=1)
    G[:, -1] = 1.0
    return G


# counterexample search


@dataclass(frozen=True)
class Counterexample:
    property: str
    seed: int
    attempt: int
    instance: dict

    def to_json(self) -> dict:
        return {"schema": SCHEMA, "property": self.property, "seed": self.seed,
                "attempt": self.attempt, "instance": self.instance}

    @classmethod
    def from_json(cls, data: dict) -> "Counterexample":
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {data.get('schema')!r}")
        return cls(data["property"], int(data["seed"]), int(data["attempt"]), data["instance"])


def _edges(order: Preorder) -> list:
    return [[int(i), int(j)] for i, j in order.pairs()]


def _order_from(instance: dict, key: str = "order") -> Preorder:
    return Preorder.from_edges(instance["n"], instance[key])


def _cdfs_json(cdfs) -> list:
    return [{"points": F.points.tolist(), "cum": F.cum.tolist()} for F in cdfs]


def _cdfs_from(instance: dict) -> list:
    return [StepCdf(c["points"], c["cum"]) for c in instance["forecasts"]]


def _draw(property_id: str, rng: np.random.Generator) -> dict:
    from .conditional_law import classical_law, icl_fit

    if property_id == "linearity":
        n = 3
        return {"n": n, "weights": [1 / n] * n, "order": _edges(Preorder.chain(n)),
                "y1": rng.integers(0, 4, n).astype(float).tolist(),
                "y2": rng.integers(0, 4, n).astype(float).tolist()}
    if property_id == "tower":
        n = int(rng.integers(3, 5))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
        fine = Preorder.from_edges(n, pairs)
        return {"n": n, "weights": [1 / n] * n, "order_coarse": _edges(Preorder.chain(n)),
                "order_fine": _edges(fine), "y": rng.integers(0, 4, n).astype(float).tolist()}
    if property_id == "ic_without_ac":
        sizes = rng.integers(1, 4, int(rng.integers(2, 5)))
        groups = np.repeat(np.arange(sizes.size), sizes)
        n = groups.size
        order = Preorder(groups[:, None] <= groups[None, :])
        y = rng.integers(0, 4, n).astype(float)
        space = FiniteSpace.uniform(n)
        fit = icl_fit(space, order, y)
        return {"n": n, "weights": space.weights.tolist(), "y": y.tolist(),
                "groups": groups.tolist(), "forecasts": _cdfs_json(fit.rows)}
    if property_id == "tcqc_without_ic":
        size = int(rng.integers(2, 5))
        groups = np.repeat([0, 1], size)
        n = groups.size
        space = FiniteSpace.uniform(n)
        y = rng.integers(0, 4, n).astype(float)
        z, cdf = classical_law(space, Preorder(groups[:, None] == groups[None, :]), y)
        pooled = np.cumsum(np.bincount(np.searchsorted(z, y), minlength=z.size)) / n
        pool = rng.random(z.size) < 0.5
        pool[-1] = False
        cdf = np.where(pool, pooled, cdf)
        if np.any(np.diff(cdf, axis=1) < 0):
            return {}
        rows = [StepCdf.from_grid(z, row) for row in cdf]
        return {"n": n, "weights": space.weights.tolist(), "y": y.tolist(),
                "groups": groups.tolist(), "pooled_thresholds": z[pool].tolist(),
                "forecasts": _cdfs_json(rows)}
    raise ValueError(f"unknown property {property_id!r}")


def check_counterexample(property_id: str, instance: dict) -> bool:
    """Recompute the defining failure for a stored instance."""
    from .calibration import ForecastProfile, check_auto, check_isotonic, check_quantile, check_threshold
    from .isotonic import isotonic_mean

    if not instance:
        return False
    space = FiniteSpace(instance["weights"])
    if property_id == "linearity":
        order = _order_from(instance)
        y1, y2 = np.array(instance["y1"]), np.array(instance["y2"])
        lhs = isotonic_mean(space, order, y1 + y2).fitted
        rhs = isotonic_mean(space, order, y1).fitted + isotonic_mean(space, order, y2).fitted
        return bool(np.max(np.abs(lhs - rhs)) > 1e-9)
    if property_id == "tower":
        coarse, fine = _order_from(instance, "order_coarse"), _order_from(instance, "order_fine")
        y = np.array(instance["y"])
        nested = isotonic_mean(space, coarse, isotonic_mean(space, fine, y).fitted).fitted
        direct = isotonic_mean(space, coarse, y).fitted
        return bool(np.max(np.abs(nested - direct)) > 1e-9)
    profile = ForecastProfile(_cdfs_from(instance), space, np.array(instance["y"]))
    if property_id == "ic_without_ac":
        return check_isotonic(profile).ok and not check_auto(profile).ok
    if property_id == "tcqc_without_ic":
        return (check_threshold(profile).ok and check_quantile(profile).ok
                and not check_isotonic(profile).ok)
    raise ValueError(f"unknown property {property_id!r}")


def search_counterexample(property_id: str, seed: int,
                          budget: OracleBudget = DEFAULT_BUDGET) -> Counterexample | None:
    """First instance (in the seeded draw sequence) exhibiting the failure."""
    if property_id not in PROPERTIES:
        raise ValueError(f"unknown property {property_id!r}")
    rng = np.random.default_rng(seed)
    for attempt in range(budget.max_attempts):
        instance = _draw(property_id, rng)
        if check_counterexample(property_id, instance):
            return Counterexample(property_id, int(seed), attempt, instance)
    return None


def fixture_path(property_id: str) -> Path:
    return FIXTURE_DIR / f"{property_id}.json"


def load_fixture(property_id: str) -> Counterexample:
    return Counterexample.from_json(json.loads(fixture_path(property_id).read_text()))


def write_fixture(example: Counterexample) -> Path:
    path = fixture_path(example.property)
    path.write_text(json.dumps(example.to_json(), indent=2, sort_keys=True) + "\n")
    return path
