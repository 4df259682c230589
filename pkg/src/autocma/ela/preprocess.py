"""Feature pruning, min-max scaling, and feature-matrix persistence."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, SchemaError
from .features import ElaVector


def prune_correlated(matrix: np.ndarray, feature_names, threshold: float = 0.95):
    """Greedy pass in feature order: drop a feature when |Pearson r| with any
    already-kept feature exceeds the threshold. Zero-variance features count
    as correlated with everything and are dropped."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 3:
        raise ParameterError("need a matrix with at least 3 rows")
    if matrix.shape[1] != len(feature_names):
        raise ParameterError("feature_names length must match matrix columns")
    if not np.all(np.isfinite(matrix)):
        raise ParameterError("feature matrix must be finite")

    kept: list = []
    kept_cols: list = []
    for j, name in enumerate(feature_names):
        col = matrix[:, j]
        if col.std() <= 0.0:
            continue
        correlated = False
        for kc in kept_cols:
            r = np.corrcoef(col, kc)[0, 1]
            if abs(r) > threshold:
                correlated = True
                break
        if not correlated:
            kept.append(name)
            kept_cols.append(col)
    return kept


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature min/max over the kept features, learned on training data."""

    names: tuple
    mins: np.ndarray
    maxs: np.ndarray

    def to_doc(self) -> dict:
        return {
            "names": list(self.names),
            "mins": [float(v) for v in self.mins],
            "maxs": [float(v) for v in self.maxs],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "FeatureScaler":
        return cls(
            names=tuple(doc["names"]),
            mins=np.asarray(doc["mins"], dtype=float),
            maxs=np.asarray(doc["maxs"], dtype=float),
        )


def fit_scaler(matrix: np.ndarray, feature_names, kept_names=None) -> FeatureScaler:
    """Learn min/max per kept feature from training rows."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] < 2:
        raise ParameterError("need at least 2 rows to fit a scaler")
    names = list(feature_names)
    if kept_names is None:
        kept_names = names
    idx = []
    for name in kept_names:
        if name not in names:
            raise SchemaError(f"kept feature {name!r} not present in feature_names")
        idx.append(names.index(name))
    sub = matrix[:, idx]
    return FeatureScaler(
        names=tuple(kept_names),
        mins=sub.min(axis=0),
        maxs=sub.max(axis=0),
    )


def apply_scaler(scaler: FeatureScaler, ela: ElaVector) -> ElaVector:
    """Map each kept feature through (v - min) / (max - min).

    Test-time values may fall outside [0, 1] and pass through unclipped;
    zero-range features map to 0.
    """
    available = dict(zip(ela.names, ela.values))
    missing = [n for n in scaler.names if n not in available]
    if missing:
        raise SchemaError(f"feature vector is missing {missing}")
    vals = np.array([available[n] for n in scaler.names], dtype=float)
    span = scaler.maxs - scaler.mins
    out = np.where(span > 0, (vals - scaler.mins) / np.where(span > 0, span, 1.0), 0.0)
    return ElaVector(names=scaler.names, values=out)


def scale_rows(scaler: FeatureScaler, matrix: np.ndarray, feature_names) -> np.ndarray:
    """Vectorized apply_scaler over a feature matrix in manifest order."""
    names = list(feature_names)
    idx = [names.index(n) for n in scaler.names]
    sub = np.asarray(matrix, dtype=float)[:, idx]
    span = scaler.maxs - scaler.mins
    return np.where(span > 0, (sub - scaler.mins) / np.where(span > 0, span, 1.0), 0.0)


# -- persistence ---------------------------------------------------------------

def write_feature_csv(path, ids, matrix: np.ndarray, feature_names) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["function_id", *feature_names])
        for fid, row in zip(ids, np.asarray(matrix, dtype=float)):
            writer.writerow([fid, *[repr(float(v)) for v in row]])


def read_feature_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "function_id":
            raise SchemaError("feature CSV must start with a function_id column")
        names = tuple(header[1:])
        ids, rows = [], []
        for rec in reader:
            ids.append(rec[0])
            rows.append([float(v) for v in rec[1:]])
    return ids, np.asarray(rows, dtype=float), names


def write_manifest(path, feature_names) -> None:
    with open(path, "w") as fh:
        json.dump(list(feature_names), fh, indent=1)
        fh.write("\n")


def read_manifest(path):
    with open(path) as fh:
        return tuple(json.load(fh))
