"""Tests for configuration encoding and the multi-head network."""

import numpy as np
import pytest

from autocma.cmaes import Configuration, default_config, resolve_auto_rates
from autocma.ela import FeatureScaler
from autocma.ela.features import ElaVector
from autocma.errors import ParameterError, SchemaError
from autocma.nets import (
    CATEGORICAL_FIELDS,
    CONTINUOUS_FIELDS,
    EncodedConfig,
    LabeledDataset,
    NnArchitecture,
    NnModel,
    decode,
    encode,
    full_grid,
    grid_search,
    load_model,
    predict,
    save_model,
    train,
    _softmax,
)


def _random_config(rng) -> Configuration:
    return Configuration(
        lambda_=int(rng.integers(5, 51)),
        parent_ratio=float(rng.uniform(0.3, 0.5)),
        sigma0=float(rng.uniform(0.1, 0.5)),
        lr_sigma=float(rng.uniform(0, 1)),
        lr_cma=float(rng.uniform(0, 1)),
        lr_rank_mu=float(rng.uniform(0, 0.35)),
        lr_rank_one=float(rng.uniform(0, 0.35)),
        active=bool(rng.integers(2)),
        mirrored=("none", "mirrored", "mirrored_pairwise")[rng.integers(3)],
        threshold_convergence=bool(rng.integers(2)),
        weights_scheme=("default", "equal", "half_power_lambda")[rng.integers(3)],
    )


# -- encoding ----------------------------------------------------------------------

def test_encode_lambda_rescaling():
    cfg = _random_config(np.random.default_rng(0))
    cfg = Configuration(**{**cfg.__dict__, "lambda_": 27})
    enc = encode(cfg)
    assert enc.continuous[0] == pytest.approx((27 - 5) / 45)


def test_encode_lower_boundary_maps_to_zero():
    cfg = _random_config(np.random.default_rng(1))
    cfg = Configuration(**{**cfg.__dict__, "parent_ratio": 0.3})
    assert encode(cfg).continuous[1] == 0.0


def test_encode_one_hot_blocks():
    cfg = _random_config(np.random.default_rng(2))
    cfg = Configuration(**{**cfg.__dict__, "mirrored": "mirrored_pairwise"})
    enc = encode(cfg)
    np.testing.assert_array_equal(enc.onehot[1], [0.0, 0.0, 1.0])
    for block in enc.onehot:
        assert block.sum() == 1.0
        assert set(np.unique(block)) <= {0.0, 1.0}


def test_encode_rejects_auto_sentinel():
    with pytest.raises(ParameterError):
        encode(default_config(5))


def test_decode_clamps_out_of_domain():
    enc = encode(resolve_auto_rates(default_config(5), 5))
    raw = EncodedConfig(
        continuous=np.array([1.7, -0.2, -0.1, 0.5, 1.2, -0.3, 2.0]),
        onehot=enc.onehot,
    )
    cfg = decode(raw)
    assert cfg.lambda_ == 50
    assert cfg.parent_ratio == 0.3
    assert cfg.sigma0 == 0.1
    assert cfg.lr_cma == 1.0
    assert cfg.lr_rank_mu == 0.0
    assert cfg.lr_rank_one == 0.35


def test_decode_argmax_with_ties_takes_lowest_index():
    enc = encode(resolve_auto_rates(default_config(5), 5))
    blocks = (
        np.array([0.5, 0.5]),
        np.array([0.2, 0.5, 0.3]),
        np.array([0.5, 0.5]),
        np.array([1 / 3, 1 / 3, 1 / 3]),
    )
    cfg = decode(EncodedConfig(continuous=enc.continuous, onehot=blocks))
    assert cfg.active is False
    assert cfg.mirrored == "mirrored"
    assert cfg.threshold_convergence is False
    assert cfg.weights_scheme == "default"


def test_round_trip_1000_random_configs():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        cfg = _random_config(rng)
        back = decode(encode(cfg))
        assert back.lambda_ == cfg.lambda_
        for name, _, _ in CONTINUOUS_FIELDS[1:]:
            assert getattr(back, name) == pytest.approx(getattr(cfg, name), abs=1e-12)
        for name, _ in CATEGORICAL_FIELDS:
            assert getattr(back, name) == getattr(cfg, name)


# -- training ---------------------------------------------------------------------

def _toy_dataset(rng, n=40, n_features=8, with_categoricals=True):
    X = rng.uniform(0, 1, (n, n_features))
    W = rng.uniform(-0.5, 0.5, (n_features, 7))
    cont = np.clip(X @ W * 0.3 + 0.5, 0, 1)
    cat = None
    if with_categoricals:
        cat = np.column_stack(
            [
                (X[:, 0] > 0.5).astype(int),
                np.minimum((X[:, 1] * 3).astype(int), 2),
                (X[:, 2] > 0.5).astype(int),
                np.minimum((X[:, 3] * 3).astype(int), 2),
            ]
        )
    return LabeledDataset(
        X=X, cont_targets=cont, cat_targets=cat,
        feature_names=tuple(f"f{i}" for i in range(n_features)),
    )


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    ds = _toy_dataset(rng, n=12)
    model = NnModel(8, NnArchitecture(2, 16, 100), seed=1)
    _, grads = model.loss_and_grads(ds.X, ds.cont_targets, ds.cat_targets)
    params = model.parameters()
    h = 1e-5
    probe = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        pi = int(probe.integers(len(params)))
        k = int(probe.integers(params[pi].size))
        orig = params[pi].flat[k]
        params[pi].flat[k] = orig + h
        up = model.loss(ds.X, ds.cont_targets, ds.cat_targets)
        params[pi].flat[k] = orig - h
        down = model.loss(ds.X, ds.cont_targets, ds.cat_targets)
        params[pi].flat[k] = orig
        fd = (up - down) / (2 * h)
        an = grads[pi].flat[k]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-10))
    assert worst < 1e-4


def test_linear_teacher_reaches_low_mse():
    rng = np.random.default_rng(6)
    F = 9
    W_true = rng.uniform(-1, 1, (F, 7))
    X = rng.uniform(0, 1, (200, F))
    T = np.clip(X @ W_true * 0.2 + 0.4, 0, 1)
    ds = LabeledDataset(X=X, cont_targets=T, cat_targets=None,
                        feature_names=tuple(f"f{i}" for i in range(F)))
    model = train(ds, NnArchitecture(1, 128, 200), seed=3)
    reg, _, _ = model.forward(X)
    assert float(np.mean((reg - T) ** 2)) < 0.01


def test_zero_epoch_override_keeps_initialization():
    rng = np.random.default_rng(7)
    ds = _toy_dataset(rng)
    m1 = train(ds, NnArchitecture(1, 16, 100), seed=9, epochs_override=0)
    m2 = NnModel(8, NnArchitecture(1, 16, 100), seed=9)
    r1, _, _ = m1.forward(ds.X)
    r2, _, _ = m2.forward(ds.X)
    assert np.array_equal(r1, r2)


def test_training_is_deterministic():
    rng = np.random.default_rng(8)
    ds = _toy_dataset(rng)
    m1 = train(ds, NnArchitecture(2, 16, 100), seed=11)
    m2 = train(ds, NnArchitecture(2, 16, 100), seed=11)
    for p1, p2 in zip(m1.parameters(), m2.parameters()):
        assert np.array_equal(p1, p2)


def test_softmax_heads_are_distributions():
    rng = np.random.default_rng(9)
    ds = _toy_dataset(rng)
    model = train(ds, NnArchitecture(1, 16, 100), seed=2)
    _, logits, _ = model.forward(ds.X)
    assert len(logits) == 4
    for lg in logits:
        p = _softmax(lg)
        assert np.all(p > 0) and np.all(p < 1)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_loss_nonnegative_and_ce_vanishes_when_memorized():
    rng = np.random.default_rng(10)
    ds = _toy_dataset(rng, n=1)
    mid = train(ds, NnArchitecture(1, 32, 200), seed=4, epochs_override=2000)
    model = train(ds, NnArchitecture(1, 32, 200), seed=4, epochs_override=10000)
    loss_mid = mid.loss(ds.X, ds.cont_targets, ds.cat_targets)
    loss = model.loss(ds.X, ds.cont_targets, ds.cat_targets)
    assert 0.0 <= loss < loss_mid  # cross-entropy keeps shrinking toward 0
    assert loss < 1e-3


# -- grid search --------------------------------------------------------------------

def test_grid_has_36_cells():
    assert len(full_grid()) == 36


def test_single_cell_grid_override():
    rng = np.random.default_rng(11)
    ds = _toy_dataset(rng, n=30)
    only = NnArchitecture(1, 16, 100)
    assert grid_search(ds, seed=1, grid=(only,)) == only


def test_returned_cell_is_table_minimum():
    rng = np.random.default_rng(12)
    ds = _toy_dataset(rng, n=30)
    grid = (NnArchitecture(1, 16, 100), NnArchitecture(2, 16, 100),
            NnArchitecture(1, 32, 150))
    best, table = grid_search(ds, seed=2, grid=grid, return_table=True)
    assert len(table) == len(grid)
    assert table[best] == min(table.values())


def test_grid_search_selection_is_stable_on_linear_data():
    rng = np.random.default_rng(13)
    F = 6
    X = rng.uniform(0, 1, (60, F))
    W_true = rng.uniform(-0.5, 0.5, (F, 7))
    T = np.clip(X @ W_true + 0.5, 0, 1)
    ds = LabeledDataset(X=X, cont_targets=T, cat_targets=None,
                        feature_names=tuple(f"f{i}" for i in range(F)))
    grid = (NnArchitecture(1, 16, 200), NnArchitecture(1, 64, 200))
    _, t1 = grid_search(ds, seed=3, grid=grid, return_table=True)
    _, t2 = grid_search(ds, seed=4, grid=grid, return_table=True)
    for cell in grid:
        assert t2[cell] <= 1.1 * t1[cell] + 0.05


def test_grid_search_requires_25_rows():
    rng = np.random.default_rng(14)
    ds = _toy_dataset(rng, n=24)
    with pytest.raises(ParameterError):
        grid_search(ds, seed=1)


def test_architecture_grid_validation():
    with pytest.raises(ParameterError):
        NnArchitecture(4, 16, 100)
    with pytest.raises(ParameterError):
        NnArchitecture(1, 20, 100)
    with pytest.raises(ParameterError):
        NnArchitecture(1, 16, 50)


# -- prediction and persistence -------------------------------------------------------

def _fitted_model(rng, ds):
    names = ds.feature_names
    scaler = FeatureScaler(
        names=names, mins=np.zeros(len(names)), maxs=np.ones(len(names))
    )
    return train(ds, NnArchitecture(1, 16, 100), seed=5, scaler=scaler)


def test_predict_always_returns_valid_configuration():
    rng = np.random.default_rng(15)
    ds = _toy_dataset(rng)
    model = _fitted_model(rng, ds)
    for _ in range(20):
        ela = ElaVector(names=ds.feature_names, values=rng.uniform(-2, 3, 8))
        cfg = predict(model, ela)
        cfg.validate()


def test_predict_deterministic():
    rng = np.random.default_rng(16)
    ds = _toy_dataset(rng)
    model = _fitted_model(rng, ds)
    ela = ElaVector(names=ds.feature_names, values=rng.uniform(0, 1, 8))
    assert predict(model, ela) == predict(model, ela)


def test_predict_memorizes_single_row():
    rng = np.random.default_rng(17)
    target = _random_config(rng)
    enc = encode(target)
    X = rng.uniform(0.2, 0.8, (1, 8))
    ds = LabeledDataset(
        X=X,
        cont_targets=enc.continuous[None, :],
        cat_targets=np.array([[int(np.argmax(b)) for b in enc.onehot]]),
        feature_names=tuple(f"f{i}" for i in range(8)),
    )
    scaler = FeatureScaler(names=ds.feature_names, mins=np.zeros(8), maxs=np.ones(8))
    model = train(ds, NnArchitecture(1, 32, 200), seed=6, scaler=scaler,
                  epochs_override=5000)
    got = predict(model, ElaVector(names=ds.feature_names, values=X[0]))
    assert abs(got.lambda_ - target.lambda_) <= 1
    for name, _, _ in CONTINUOUS_FIELDS[1:]:
        assert getattr(got, name) == pytest.approx(getattr(target, name), abs=0.02)
    for name, _ in CATEGORICAL_FIELDS:
        assert getattr(got, name) == getattr(target, name)


def test_predict_schema_errors():
    rng = np.random.default_rng(18)
    ds = _toy_dataset(rng)
    model = _fitted_model(rng, ds)
    with pytest.raises(SchemaError):
        predict(model, ElaVector(names=("nope",), values=np.array([1.0])))


def test_model_json_round_trip(tmp_path):
    rng = np.random.default_rng(19)
    ds = _toy_dataset(rng)
    model = _fitted_model(rng, ds)
    path = tmp_path / "model.json"
    save_model(model, path)
    back = load_model(path)
    r1, l1, _ = model.forward(ds.X)
    r2, l2, _ = back.forward(ds.X)
    assert np.array_equal(r1, r2)
    for a, b in zip(l1, l2):
        assert np.array_equal(a, b)
    ela = ElaVector(names=ds.feature_names, values=rng.uniform(0, 1, 8))
    assert predict(model, ela) == predict(back, ela)


def test_load_model_rejects_unknown_version(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"version": "other"}')
    with pytest.raises(SchemaError):
        load_model(path)


def test_encode_decode_identity_on_valid_encodings():
    rng = np.random.default_rng(20)
    for _ in range(200):
        cfg = _random_config(rng)
        enc = encode(cfg)
        again = encode(decode(enc))
        # integer rounding of the population size is the only non-identity
        assert again.continuous[0] == pytest.approx(enc.continuous[0], abs=1e-12)
        np.testing.assert_allclose(again.continuous[1:], enc.continuous[1:], atol=1e-12)
        for a, b in zip(again.onehot, enc.onehot):
            np.testing.assert_array_equal(a, b)
