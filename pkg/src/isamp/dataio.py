"""CSV dataset ingestion for the survey-data fitting workflow.

Input files are comma-separated with one header row, UTF-8, '.' decimal.
Rows missing any required field are dropped (listwise deletion) and
counted, as are rows with non-positive weights; sampling weights are
inverted into unnormalized inclusion probabilities, which is sufficient
because only proportionality matters downstream.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .exceptions import DomainError, LoadError
from .model import Observation


@dataclass(frozen=True)
class DatasetSpec:
    path: str
    response_column: str
    weight_column: str
    weight_kind: str = "weight"  # or "inclusion_prob"
    y_covariates: Tuple[str, ...] = ()
    pi_covariates: Tuple[str, ...] = ()
    spline_column: Optional[str] = None
    categorical_columns: Tuple[str, ...] = ()
    log_columns: Tuple[str, ...] = ()
    log1p_columns: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.weight_kind not in ("weight", "inclusion_prob"):
            raise DomainError("weight_kind must be 'weight' or 'inclusion_prob'")


@dataclass
class LoadReport:
    n_rows: int = 0
    n_used: int = 0
    n_dropped_missing: int = 0
    n_dropped_weight: int = 0
    dummy_columns: Tuple[str, ...] = ()


def _required_columns(spec: DatasetSpec):
    cols = [spec.response_column, spec.weight_column]
    cols += list(spec.y_covariates) + list(spec.pi_covariates)
    cols += list(spec.categorical_columns)
    if spec.spline_column:
        cols.append(spec.spline_column)
    # preserve order, drop duplicates
    seen = []
    for c in cols:
        if c not in seen:
            seen.append(c)
    return seen


def load_dataset(spec: DatasetSpec) -> Tuple[List[Observation], LoadReport]:
    """Read a CSV file into observations plus a row-accounting report."""
    try:
        frame = pd.read_csv(spec.path)
    except FileNotFoundError as exc:
        raise LoadError(f"no such file: {spec.path}") from exc
    except Exception as exc:
        raise LoadError(f"could not parse {spec.path}: {exc}") from exc

    required = _required_columns(spec)
    missing_cols = [c for c in required if c not in frame.columns]
    if missing_cols:
        raise LoadError(f"missing columns: {', '.join(missing_cols)}")

    report = LoadReport(n_rows=len(frame))
    numeric_cols = [c for c in required if c not in spec.categorical_columns]
    for c in numeric_cols:
        frame[c] = pd.to_numeric(frame[c], errors="coerce")

    # log transforms are applied only where explicitly configured
    for c in spec.log_columns:
        if c in frame.columns:
            with np.errstate(divide="ignore", invalid="ignore"):
                frame[c] = np.where(frame[c] > 0, np.log(frame[c]), np.nan)
    for c in spec.log1p_columns:
        if c in frame.columns:
            with np.errstate(divide="ignore", invalid="ignore"):
                frame[c] = np.where(frame[c] > -1, np.log1p(frame[c]), np.nan)

    mask_missing = frame[numeric_cols].isna().any(axis=1)
    for c in spec.categorical_columns:
        mask_missing |= frame[c].isna()
    report.n_dropped_missing = int(mask_missing.sum())
    frame = frame.loc[~mask_missing]

    w = frame[spec.weight_column].to_numpy(dtype=float)
    bad_w = w <= 0
    report.n_dropped_weight = int(bad_w.sum())
    frame = frame.loc[~bad_w]
    w = w[~bad_w]
    if len(frame) == 0:
        raise LoadError("no usable rows after dropping missing/invalid entries")
    report.n_used = len(frame)

    pi = 1.0 / w if spec.weight_kind == "weight" else w
    log_pi = np.log(pi)

    dummies = []
    dummy_names = []
    for c in spec.categorical_columns:
        levels = sorted(frame[c].astype(str).unique())
        for level in levels[1:]:  # first (sorted) level is the reference
            dummies.append((frame[c].astype(str) == level).to_numpy(dtype=float))
            dummy_names.append(f"{c}={level}")
    dummy_mat = np.column_stack(dummies) if dummies else np.empty((len(frame), 0))
    report.dummy_columns = tuple(dummy_names)

    def block(cols):
        if not cols:
            return np.empty((len(frame), 0))
        return frame[list(cols)].to_numpy(dtype=float)

    ones = np.ones((len(frame), 1))
    Xy = np.hstack([ones, block(spec.y_covariates), dummy_mat])
    Xpi = np.hstack([ones, block(spec.pi_covariates), dummy_mat])
    y = frame[spec.response_column].to_numpy(dtype=float)
    xs = (frame[spec.spline_column].to_numpy(dtype=float)
          if spec.spline_column else [None] * len(frame))

    observations = [
        Observation(y=float(y[i]), log_pi=float(log_pi[i]),
                    x_y=Xy[i], x_pi=Xpi[i],
                    x_spline=None if xs[i] is None else float(xs[i]))
        for i in range(len(frame))
    ]
    return observations, report


def write_dataset(path, observations: Sequence[Observation],
                  covariate_names: Optional[Sequence[str]] = None):
    """Write observations back to CSV (inverse of ``load_dataset`` for tests).

    Emits the response, the weight (1/pi) and the non-intercept y-design
    columns with full round-trip precision.
    """
    n_cov = observations[0].x_y.size - 1
    names = list(covariate_names) if covariate_names else [f"x{i+1}" for i in range(n_cov)]
    if len(names) != n_cov:
        raise DomainError("one name per non-intercept covariate required")
    lines = [",".join(["y", "weight"] + names)]
    for obs in observations:
        w = math.exp(-obs.log_pi)
        vals = [obs.y, w] + [float(v) for v in obs.x_y[1:]]
        lines.append(",".join(f"{v:.17g}" for v in vals))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
