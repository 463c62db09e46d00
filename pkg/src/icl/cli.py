"""Command line interface: ``icl fit | score | calibrate | verify``.

Exit codes: 0 success, 2 unparseable input, 3 invalid input, 4 a
verification or consistency check failed.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import ForecastProfile, HierarchyViolation, calibration_report
from .conditional_law import icl_fit
from .io import (SCHEMA, DataParseError, DataValidationError, build_order, dumps_report,
                 read_dataset, read_forecasts)
from .scoring import brier_score, crps, crps_via_quantiles, quantile_score
from .suites import SUITES, run_suite

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_FAILED = 0, 2, 3, 4
BASE_LEVELS = np.round(np.arange(1, 20) * 0.05, 2)
CRPS_AGREEMENT_TOL = 1e-12


class VerificationFailed(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise DataParseError(message)


def _levels(cdfs) -> np.ndarray:
    """The fixed 0.05 grid plus every interior cumulative level of the forecasts."""
    cum = np.concatenate([F.cum for F in cdfs])
    natural = cum[(cum > 0) & (cum < 1)]
    return np.unique(np.concatenate([BASE_LEVELS, natural]))


def _quantile_curves(cdfs, levels) -> dict:
    return {"levels": levels,
            "lower": [[F.lower_quantile(a) for F in cdfs] for a in levels],
            "upper": [[F.upper_quantile(a) for F in cdfs] for a in levels]}


def cmd_fit(args) -> dict:
    data = read_dataset(args.input, args.response, args.weights)
    order = build_order(args.order, data)
    fit = icl_fit(data.space, order, data.y)
    return {"n": data.n, "covariates": list(data.names), "weights": data.space.weights,
            "y": data.y, "order_pairs": order.pairs(), "thresholds": fit.thresholds,
            "cdf_matrix": fit.cdf_matrix,
            "quantiles": _quantile_curves(fit.rows, _levels(fit.rows))}


def cmd_score(args) -> dict:
    data = read_dataset(args.input, args.response, args.weights)
    cdfs = read_forecasts(args.fit, data.n)
    w, y = data.space.weights, data.y
    by_jumps = np.array([crps(F, v) for F, v in zip(cdfs, y)])
    by_quantiles = np.array([crps_via_quantiles(F, v) for F, v in zip(cdfs, y)])
    mean_crps, mean_crps_q = float(np.dot(w, by_jumps)), float(np.dot(w, by_quantiles))
    z = np.unique(np.concatenate([F.points for F in cdfs] + [y]))
    table = np.vstack([F.cdf(z) for F in cdfs])
    brier = [float(np.dot(w, brier_score(table[:, k], y <= zk))) for k, zk in enumerate(z)]
    levels = _levels(cdfs)
    qs = [float(np.dot(w, quantile_score(a, [F.lower_quantile(a) for F in cdfs], y))) for a in levels]
    report = {"n": data.n, "mean_crps": mean_crps, "mean_crps_quantile_form": mean_crps_q,
              "crps_per_row": by_jumps, "brier_grid": {"thresholds": z, "mean_brier": brier},
              "quantile_score_grid": {"levels": levels, "mean_quantile_score": qs}}
    if abs(mean_crps - mean_crps_q) > CRPS_AGREEMENT_TOL * max(1.0, abs(mean_crps)):
        raise VerificationFailed("the two CRPS representations disagree", report)
    return report


def cmd_calibrate(args) -> dict:
    data = read_dataset(args.input, args.response, args.weights)
    cdfs = read_forecasts(args.forecast, data.n)
    try:
        report = calibration_report(ForecastProfile(tuple(cdfs), data.space, data.y))
    except HierarchyViolation as exc:
        raise VerificationFailed(str(exc), {}) from exc
    return {"n": data.n, "flags": report.flags(), "witnesses": report.witnesses,
            "tolerance": report.tolerance}


def cmd_verify(args) -> dict:
    records = run_suite(args.suite, args.seed, args.n, args.count)
    failed = [r for r in records if not r["ok"]]
    report = {"suite": args.suite, "passed": not failed, "checked": len(records),
              "failures": len(failed), "instances": records}
    if failed:
        raise VerificationFailed(f"{len(failed)} of {len(records)} instances failed", report)
    return report


def _default_seed() -> int:
    raw = os.environ.get("ICL_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise DataParseError(f"ICL_SEED must be an integer, got {raw!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icl", description="Isotonic conditional laws on finite spaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(p):
        p.add_argument("input", help="CSV file with a header row")
        p.add_argument("--response", default="y", help="response column (default: y)")
        p.add_argument("--weights", default=None, help="optional positive weight column")
        p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    p = sub.add_parser("fit", help="fit the isotonic conditional law")
    data_args(p)
    p.add_argument("--order", default="componentwise",
                   help="componentwise | column:<index or name> | file:<edge list>")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("score", help="CRPS, Brier and quantile scores of a fit")
    data_args(p)
    p.add_argument("fit", help="fit report or forecast JSON")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("calibrate", help="calibration flags of a forecast")
    data_args(p)
    p.add_argument("forecast", help="fit report or forecast JSON")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("verify", help="run a randomized verification suite")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--seed", type=int, default=None, help="base seed (default: $ICL_SEED or 0)")
    p.add_argument("--n", type=int, default=6, help="maximum number of atoms")
    p.add_argument("--count", type=int, default=50, help="number of random instances")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_verify)
    return parser


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("handler", "out")}


def _emit(report: dict, out) -> None:
    text = dumps_report(report)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        body, code = args.handler(args), EXIT_OK
    except DataParseError as exc:
        print(f"icl: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DataValidationError, ValueError) as exc:
        print(f"icl: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except VerificationFailed as exc:
        print(f"icl: verification failed: {exc.args[0]}", file=sys.stderr)
        body, code = exc.args[1], EXIT_FAILED
    report = {"schema": SCHEMA, "command": args.command, "version": __version__,
              "config": _config(args), "result": body,
              "timing": {"seconds": round(time.perf_counter() - started, 6)}}
    _emit(report, getattr(args, "out", None))
    return code


if __name__ == "__main__":
    sys.exit(main())
