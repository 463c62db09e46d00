"""CSV ingestion and JSON report serialization."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distributions import StepCdf
from .space import FiniteSpace, Preorder, preorder_from_covariates

SCHEMA = "icl/1"


class DataParseError(ValueError):
    """Input could not be parsed (exit code 2)."""


class DataValidationError(ValueError):
    """Input parsed but is inconsistent (exit code 3)."""


@dataclass(frozen=True)
class Dataset:
    names: tuple
    covariates: np.ndarray
    y: np.ndarray
    space: FiniteSpace

    @property
    def n(self) -> int:
        return self.y.size


def read_dataset(path, response: str = "y", weights: str | None = None) -> Dataset:
    """Read a headed CSV; every column other than response and weights is a covariate."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataParseError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise DataParseError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise DataValidationError("dataset has no rows")
    for k, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataParseError(f"line {k} has {len(r)} fields, header has {len(header)}")
    if response not in header:
        raise DataValidationError(f"response column {response!r} not found")
    if weights is not None and weights not in header:
        raise DataValidationError(f"weight column {weights!r} not found")

    table = np.empty((len(body), len(header)))
    for k, r in enumerate(body):
        for j, cell in enumerate(r):
            cell = cell.strip()
            if cell == "" or cell.lower() == "nan":
                raise DataValidationError(f"missing value in row {k + 1}, column {header[j]!r}")
            try:
                table[k, j] = float(cell)
            except ValueError as exc:
                raise DataParseError(f"row {k + 1}, column {header[j]!r}: {cell!r} is not a number") from exc
    if not np.all(np.isfinite(table)):
        raise DataValidationError("values must be finite")

    cov_idx = [j for j, h in enumerate(header) if h not in (response, weights)]
    if not cov_idx:
        raise DataValidationError("at least one covariate column is required")
    y = table[:, header.index(response)]
    if weights is None:
        space = FiniteSpace.uniform(y.size)
    else:
        w = table[:, header.index(weights)]
        if np.any(w <= 0):
            raise DataValidationError("weights must be strictly positive")
        space = FiniteSpace.from_unnormalized(w)
    return Dataset(tuple(header[j] for j in cov_idx), table[:, cov_idx], y, space)


def read_edges(path, n: int) -> Preorder:
    """One ``i j`` pair per line, 0-indexed; closed transitively."""
    edges = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataParseError(f"cannot read {path}: {exc}") from exc
    for k, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise DataParseError(f"{path}:{k}: expected two indices")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise DataParseError(f"{path}:{k}: indices must be integers") from exc
        if not (0 <= i < n and 0 <= j < n):
            raise DataValidationError(f"{path}:{k}: edge ({i}, {j}) out of range for {n} rows")
        edges.append((i, j))
    return Preorder.from_edges(n, edges)


def build_order(spec: str, data: Dataset) -> Preorder:
    """``componentwise``, ``column:<index or name>`` or ``file:<path>``."""
    if spec == "componentwise":
        return preorder_from_covariates(data.covariates, data.space)
    kind, _, arg = spec.partition(":")
    if kind == "column" and arg:
        if arg in data.names:
            j = data.names.index(arg)
        else:
            try:
                j = int(arg)
            except ValueError as exc:
                raise DataValidationError(f"unknown covariate column {arg!r}") from exc
            if not 0 <= j < len(data.names):
                raise DataValidationError(f"covariate column index {j} out of range")
        return preorder_from_covariates(data.covariates[:, j], data.space)
    if kind == "file" and arg:
        return read_edges(arg, data.n)
    raise DataParseError(f"unrecognised order specification {spec!r}")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataParseError(f"cannot read JSON from {path}: {exc}") from exc


def read_forecasts(path, n: int) -> list:
    """Per-row step cdfs from a fit report or a ``{"forecasts": [...]}`` document."""
    data = read_json(path)
    if isinstance(data.get("result"), dict):
        data = data["result"]
    try:
        if "cdf_matrix" in data:
            z = np.asarray(data["thresholds"], dtype=float)
            cdfs = [StepCdf.from_grid(z, row) for row in np.asarray(data["cdf_matrix"], dtype=float)]
        elif "forecasts" in data:
            cdfs = [StepCdf(f["points"], f["cum"]) for f in data["forecasts"]]
        else:
            raise DataParseError(f"{path} holds neither a cdf matrix nor forecasts")
    except (KeyError, TypeError) as exc:
        raise DataParseError(f"malformed forecast document {path}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, DataParseError):
            raise
        raise DataValidationError(f"invalid forecast in {path}: {exc}") from exc
    if len(cdfs) != n:
        raise DataValidationError(f"{len(cdfs)} forecasts for {n} rows")
    return cdfs


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps_report(report: dict) -> str:
    """Stable JSON: sorted keys, plain Python scalars, trailing newline."""
    return json.dumps(_plain(report), indent=2, sort_keys=True, allow_nan=False) + "\n"
