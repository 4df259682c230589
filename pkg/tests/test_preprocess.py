"""Tests for feature pruning, scaling, and persistence."""

import numpy as np
import pytest

from autocma.ela import (
    ElaVector,
    apply_scaler,
    fit_scaler,
    prune_correlated,
    read_feature_csv,
    read_manifest,
    write_feature_csv,
    write_manifest,
)
from autocma.errors import ParameterError, SchemaError


def _names(k):
    return tuple(f"feat{i}" for i in range(k))


def test_identical_columns_drop_second():
    rng = np.random.default_rng(0)
    a = rng.uniform(size=10)
    M = np.column_stack([a, a, rng.uniform(size=10)])
    kept = prune_correlated(M, _names(3))
    assert kept == ["feat0", "feat2"]


def test_negated_column_dropped():
    rng = np.random.default_rng(1)
    a = rng.uniform(size=10)
    M = np.column_stack([a, -a])
    kept = prune_correlated(M, _names(2))
    assert kept == ["feat0"]


def test_zero_variance_column_dropped():
    rng = np.random.default_rng(2)
    M = np.column_stack([np.full(10, 3.0), rng.uniform(size=10)])
    kept = prune_correlated(M, _names(2))
    assert kept == ["feat1"]


def test_kept_set_matches_brute_force():
    rng = np.random.default_rng(3)
    base = rng.uniform(size=(40, 4))
    M = np.column_stack(
        [
            base[:, 0],
            base[:, 0] * 1.001 + 1e-4 * rng.uniform(size=40),
            base[:, 1],
            base[:, 2],
            -base[:, 2] + 1e-5 * rng.uniform(size=40),
            base[:, 3],
            base[:, 0] + base[:, 1],
            rng.uniform(size=40),
            base[:, 3] * 2.0,
            rng.uniform(size=40),
        ]
    )
    names = _names(10)
    kept = prune_correlated(M, names, threshold=0.95)
    idx = [names.index(n) for n in kept]
    # no kept pair may correlate beyond the threshold
    for i, a in enumerate(idx):
        for b in idx[i + 1 :]:
            r = np.corrcoef(M[:, a], M[:, b])[0, 1]
            assert abs(r) <= 0.95, (a, b, r)
    # every dropped feature must correlate with some kept feature before it
    for j, name in enumerate(names):
        if name in kept:
            continue
        hits = [
            k
            for k in idx
            if k < j and abs(np.corrcoef(M[:, j], M[:, k])[0, 1]) > 0.95
        ]
        assert hits, name


def test_prune_requires_three_rows():
    with pytest.raises(ParameterError):
        prune_correlated(np.ones((2, 2)), _names(2))


def test_scaler_midpoint_and_boundaries():
    M = np.array([[2.0], [4.0]])
    scaler = fit_scaler(M, _names(1))
    mid = apply_scaler(scaler, ElaVector(names=_names(1), values=np.array([3.0])))
    assert mid.values[0] == 0.5
    low = apply_scaler(scaler, ElaVector(names=_names(1), values=np.array([2.0])))
    assert low.values[0] == 0.0


def test_scaler_out_of_range_passthrough():
    M = np.array([[2.0], [4.0]])
    scaler = fit_scaler(M, _names(1))
    out = apply_scaler(scaler, ElaVector(names=_names(1), values=np.array([5.0])))
    assert out.values[0] == 1.5


def test_scaler_zero_range_maps_to_zero():
    M = np.array([[7.0, 1.0], [7.0, 3.0]])
    scaler = fit_scaler(M, _names(2))
    out = apply_scaler(scaler, ElaVector(names=_names(2), values=np.array([7.0, 2.0])))
    assert out.values[0] == 0.0
    assert out.values[1] == 0.5


def test_scaler_unknown_feature_is_schema_error():
    M = np.array([[0.0, 1.0], [1.0, 2.0]])
    scaler = fit_scaler(M, _names(2))
    with pytest.raises(SchemaError):
        apply_scaler(scaler, ElaVector(names=("other",), values=np.array([1.0])))


def test_training_rows_map_into_unit_interval():
    rng = np.random.default_rng(5)
    M = rng.normal(size=(20, 6)) * 10
    names = _names(6)
    kept = prune_correlated(M, names)
    scaler = fit_scaler(M, names, kept)
    for row in M:
        out = apply_scaler(scaler, ElaVector(names=names, values=row))
        assert np.all(out.values >= 0.0) and np.all(out.values <= 1.0)


def test_scaler_requires_two_rows():
    with pytest.raises(ParameterError):
        fit_scaler(np.ones((1, 2)), _names(2))


def test_feature_csv_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    M = rng.uniform(size=(4, 3))
    ids = [f"fn-{i}" for i in range(4)]
    path = tmp_path / "features.csv"
    write_feature_csv(path, ids, M, _names(3))
    back_ids, back, names = read_feature_csv(path)
    assert back_ids == ids
    assert names == _names(3)
    assert np.array_equal(back, M)


def test_manifest_round_trip(tmp_path):
    path = tmp_path / "manifest.json"
    write_manifest(path, _names(5))
    assert read_manifest(path) == _names(5)
