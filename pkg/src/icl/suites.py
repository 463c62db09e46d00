"""Randomized verification batteries behind ``icl verify``.

Each check draws one instance from its own seed and returns a record with
an ``ok`` flag, so a failing instance can be replayed in isolation.
"""

from __future__ import annotations

import json

import numpy as np

from . import oracle
from .calibration import CalibrationReport, ForecastProfile, HierarchyViolation, calibration_report
from .conditional_law import classical_law, icl_fit
from .distributions import StepCdf
from .functionals import conditional_quantile
from .isotonic import isotonic_mean, minmax_values
from .scoring import crps_matrix, elementary_mean_score, quantile_score
from .space import Preorder

TOL = 1e-9
SUITES = ("universality", "hierarchy", "oracle", "counterexamples")


def instance_seeds(seed: int, count: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)]


def random_profile(rng: np.random.Generator, max_n: int = 6) -> ForecastProfile:
    """Forecast profile of one of four kinds, so every calibration pattern turns up."""
    space, order, y = oracle.random_instance(rng, max_n)
    n = space.n
    kind = int(rng.integers(0, 4))
    if kind == 0:
        cdfs = icl_fit(space, order, y).rows
    elif kind == 1:
        groups = rng.integers(0, max(1, n // 2) + 1, n)
        z, cdf = classical_law(space, Preorder(groups[:, None] == groups[None, :]), y)
        cdfs = [StepCdf.from_grid(z, row) for row in cdf]
    elif kind == 2:
        support = np.unique(y)
        cdfs = [oracle.random_step_cdf(rng, support) for _ in range(n)]
    else:
        support = np.unique(y)
        groups = rng.integers(0, max(1, n // 2) + 1, n)
        per_group = [oracle.random_step_cdf(rng, support) for _ in range(groups.max() + 1)]
        cdfs = [per_group[g] for g in groups]
    return ForecastProfile(tuple(cdfs), space, y)


def check_oracle(seed: int, max_n: int) -> dict:
    """Isotonic solver against two brute-force routes, ICL against the CRPS oracle."""
    space, order, y = oracle.random_instance(np.random.default_rng(seed), max_n)
    fast = isotonic_mean(space, order, y).fitted
    brute = oracle.brute_isotonic_mean(space, order, y)
    minmax = minmax_values(space, order, y)
    iso_err = float(max(np.abs(fast - brute).max(), np.abs(fast - minmax).max()))
    crps_err = float(np.abs(icl_fit(space, order, y).cdf_matrix - oracle.brute_crps_min(space, order, y)).max())
    return {"seed": seed, "n": space.n, "ok": iso_err <= TOL and crps_err <= TOL,
            "isotonic_error": iso_err, "crps_error": crps_err}


def check_universality(seed: int, max_n: int, members: int = 200) -> dict:
    """ICL beats random members in CRPS and is optimal for every elementary score."""
    rng = np.random.default_rng(seed)
    space, order, y = oracle.random_instance(rng, max_n)
    w = space.weights
    fit = icl_fit(space, order, y)
    z, F = fit.thresholds, fit.cdf_matrix
    base = crps_matrix(z, F, y, w)
    worse = 0
    for _ in range(members):
        G = oracle.random_ga_member(rng, order, z.size)
        t = rng.uniform(0.01, 1.0)
        G = t * G + (1 - t) * F
        differs = np.abs(G - F).max() > TOL
        if differs and not crps_matrix(z, G, y, w) > base:
            worse += 1

    gaps = []
    for k in range(z.size - 1):
        u = (y > z[k]).astype(float)
        s = 1.0 - F[:, k]
        for eta in np.unique(np.concatenate([s, [0.0, 1.0], 0.5 * (s[:, None] + s[None, :]).ravel()])):
            score = oracle.per_atom(lambda x, t, e=eta: elementary_mean_score(e, x, t), u)
            best = oracle.brute_expected_score_min(
                space, order, score, np.concatenate([oracle.block_mean_candidates(space, u), [eta - 1, eta]]))
            gaps.append(float(np.dot(w, elementary_mean_score(eta, s, u)) - best.value))
    for a in np.unique(F[(F > 0) & (F < 1)]):
        q = conditional_quantile(space, order, y, a).values
        best = oracle.brute_expected_score_min(
            space, order, oracle.per_atom(lambda x, t, a=a: quantile_score(a, x, t), y), y)
        gaps.append(float(np.dot(w, quantile_score(a, q, y)) - best.value))
    gap = max(gaps, default=0.0)
    return {"seed": seed, "n": space.n, "ok": worse == 0 and gap <= TOL,
            "members_not_worse": worse, "max_score_gap": gap}


def check_hierarchy(seed: int, max_n: int) -> dict:
    profile = random_profile(np.random.default_rng(seed), max_n)
    try:
        report: CalibrationReport = calibration_report(profile)
    except HierarchyViolation as exc:
        return {"seed": seed, "n": profile.n, "ok": False, "violation": str(exc)}
    return {"seed": seed, "n": profile.n, "ok": True, "flags": report.flags()}


def check_counterexample_fixture(property_id: str) -> dict:
    """Replay the search from the frozen seed and compare with the fixture."""
    frozen = oracle.load_fixture(property_id)
    replay = oracle.search_counterexample(property_id, frozen.seed)
    identical = replay is not None and (
        json.dumps(replay.to_json(), sort_keys=True) == json.dumps(frozen.to_json(), sort_keys=True))
    holds = oracle.check_counterexample(property_id, frozen.instance)
    return {"property": property_id, "seed": frozen.seed, "attempt": frozen.attempt,
            "ok": bool(identical and holds), "replay_identical": bool(identical), "property_holds": bool(holds)}


def run_suite(name: str, seed: int, max_n: int, count: int) -> list[dict]:
    if name == "counterexamples":
        return [check_counterexample_fixture(p) for p in oracle.PROPERTIES]
    check = {"universality": check_universality, "hierarchy": check_hierarchy,
             "oracle": check_oracle}.get(name)
    if check is None:
        raise ValueError(f"unknown suite {name!r}")
    return [check(s, max_n) for s in instance_seeds(seed, count)]
