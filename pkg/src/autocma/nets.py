"""Dense network mapping landscape features to encoded configurations.

Continuous hyperparameters are linearly rescaled to [0, 1] over their
domains; categoricals are one-hot encoded and each gets its own softmax
output head next to the single linear regression head. Training minimizes
the unweighted sum of regression MSE and the per-head categorical
cross-entropies with plain momentum SGD; forward/backward passes are
hand-rolled numpy so gradients can be verified against finite differences.
Decoding inverts the rescaling, clamps out-of-domain values to the nearer
boundary, rounds the population size to an integer, and resolves each
categorical by argmax, so any finite network output decodes to a valid
configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cmaes import (
    LAMBDA_DOMAIN,
    LR_RANK_DOMAIN,
    LR_UNIT_DOMAIN,
    MIRRORED_CHOICES,
    PARENT_RATIO_DOMAIN,
    SIGMA0_DOMAIN,
    WEIGHTS_CHOICES,
    Configuration,
)
from .ela.features import ElaVector
from .ela.preprocess import FeatureScaler, apply_scaler
from .errors import ParameterError, SchemaError, TrainingDivergedError
from .seeding import derive_seed

CONTINUOUS_FIELDS = (
    ("lambda_", float(LAMBDA_DOMAIN[0]), float(LAMBDA_DOMAIN[1])),
    ("parent_ratio", *PARENT_RATIO_DOMAIN),
    ("sigma0", *SIGMA0_DOMAIN),
    ("lr_sigma", *LR_UNIT_DOMAIN),
    ("lr_cma", *LR_UNIT_DOMAIN),
    ("lr_rank_mu", *LR_RANK_DOMAIN),
    ("lr_rank_one", *LR_RANK_DOMAIN),
)

CATEGORICAL_FIELDS = (
    ("active", (False, True)),
    ("mirrored", MIRRORED_CHOICES),
    ("threshold_convergence", (False, True)),
    ("weights_scheme", WEIGHTS_CHOICES),
)

N_CONTINUOUS = len(CONTINUOUS_FIELDS)

HIDDEN_COUNT_GRID = (1, 2, 3)
HIDDEN_SIZE_GRID = (16, 32, 64, 128)
EPOCHS_GRID = (100, 150, 200)

LEARNING_RATE = 1e-3
MOMENTUM = 0.9
BATCH_SIZE = 32


# -- configuration encoding ----------------------------------------------------

@dataclass(frozen=True)
class EncodedConfig:
    continuous: np.ndarray  # 7 values in [0, 1]
    onehot: tuple  # four blocks of sizes 2, 3, 2, 3


def encode(cfg: Configuration) -> EncodedConfig:
    cfg.validate()
    cont = np.empty(N_CONTINUOUS)
    for i, (name, lo, hi) in enumerate(CONTINUOUS_FIELDS):
        v = getattr(cfg, name)
        if v is None:
            raise ParameterError(f"cannot encode auto sentinel for {name}")
        cont[i] = (float(v) - lo) / (hi - lo)
    blocks = []
    for name, choices in CATEGORICAL_FIELDS:
        block = np.zeros(len(choices))
        block[choices.index(getattr(cfg, name))] = 1.0
        blocks.append(block)
    return EncodedConfig(continuous=cont, onehot=tuple(blocks))


def decode(enc: EncodedConfig) -> Configuration:
    cont = np.asarray(enc.continuous, dtype=float)
    if cont.shape != (N_CONTINUOUS,) or not np.all(np.isfinite(cont)):
        raise ParameterError("continuous output must be 7 finite values")
    fields = {}
    for i, (name, lo, hi) in enumerate(CONTINUOUS_FIELDS):
        v = lo + cont[i] * (hi - lo)
        fields[name] = min(max(v, lo), hi)
    fields["lambda_"] = int(
        min(max(math.floor(fields["lambda_"] + 0.5), LAMBDA_DOMAIN[0]), LAMBDA_DOMAIN[1])
    )
    for (name, choices), block in zip(CATEGORICAL_FIELDS, enc.onehot):
        fields[name] = choices[int(np.argmax(block))]
    return Configuration(**fields).validate()


_CATEGORICAL_DEFAULTS = {
    "active": False,
    "mirrored": "none",
    "threshold_convergence": False,
    "weights_scheme": "default",
}


def decode_continuous_only(cont: np.ndarray) -> Configuration:
    """Decode when the categorical heads are omitted: defaults for categoricals."""
    defaults = []
    for name, choices in CATEGORICAL_FIELDS:
        block = np.zeros(len(choices))
        block[choices.index(_CATEGORICAL_DEFAULTS[name])] = 1.0
        defaults.append(block)
    return decode(EncodedConfig(continuous=cont, onehot=tuple(defaults)))


# -- architecture and dataset ---------------------------------------------------

@dataclass(frozen=True)
class NnArchitecture:
    n_hidden: int
    hidden_size: int
    epochs: int

    def __post_init__(self):
        if self.n_hidden not in HIDDEN_COUNT_GRID:
            raise ParameterError(f"n_hidden must be in {HIDDEN_COUNT_GRID}")
        if self.hidden_size not in HIDDEN_SIZE_GRID:
            raise ParameterError(f"hidden_size must be in {HIDDEN_SIZE_GRID}")
        if self.epochs not in EPOCHS_GRID:
            raise ParameterError(f"epochs must be in {EPOCHS_GRID}")


def full_grid():
    return [
        NnArchitecture(n, s, e)
        for n in HIDDEN_COUNT_GRID
        for s in HIDDEN_SIZE_GRID
        for e in EPOCHS_GRID
    ]


@dataclass
class LabeledDataset:
    """Scaler-normalized feature rows and encoded configuration targets."""

    X: np.ndarray  # (n, n_features)
    cont_targets: np.ndarray  # (n, 7) in [0, 1]
    cat_targets: np.ndarray | None  # (n, 4) category indices, None if restricted
    feature_names: tuple

    @property
    def n(self) -> int:
        return self.X.shape[0]


# -- the network -----------------------------------------------------------------

def _relu(z):
    return np.maximum(z, 0.0)


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class NnModel:
    """Hidden ReLU stack with one linear regression head and softmax heads."""

    def __init__(self, input_width: int, arch: NnArchitecture, seed: int,
                 continuous_only: bool = False):
        self.arch = arch
        self.input_width = input_width
        self.continuous_only = continuous_only
        self.scaler: FeatureScaler | None = None
        self.feature_manifest: tuple = ()
        rng = np.random.default_rng(derive_seed(seed, "init"))
        sizes = [input_width] + [arch.hidden_size] * arch.n_hidden
        self.hidden = [
            (self._he_uniform(rng, sizes[i], sizes[i + 1]), np.zeros(sizes[i + 1]))
            for i in range(arch.n_hidden)
        ]
        top = sizes[-1]
        self.reg_head = (self._he_uniform(rng, top, N_CONTINUOUS), np.zeros(N_CONTINUOUS))
        if continuous_only:
            self.class_heads = []
        else:
            self.class_heads = [
                (name, self._he_uniform(rng, top, len(choices)), np.zeros(len(choices)))
                for name, choices in CATEGORICAL_FIELDS
            ]

    @staticmethod
    def _he_uniform(rng, fan_in: int, fan_out: int) -> np.ndarray:
        limit = math.sqrt(6.0 / fan_in)
        return rng.uniform(-limit, limit, (fan_in, fan_out))

    # parameters in a fixed flat order, used by SGD and the gradient checker
    def parameters(self):
        params = []
        for W, b in self.hidden:
            params += [W, b]
        params += [self.reg_head[0], self.reg_head[1]]
        for _, W, b in self.class_heads:
            params += [W, b]
        return params

    def set_parameters(self, params) -> None:
        it = iter(params)
        self.hidden = [(next(it), next(it)) for _ in self.hidden]
        self.reg_head = (next(it), next(it))
        self.class_heads = [
            (name, next(it), next(it)) for name, _, _ in self.class_heads
        ]

    def forward(self, X: np.ndarray):
        a = X
        pre, post = [], [X]
        for W, b in self.hidden:
            z = a @ W + b
            a = _relu(z)
            pre.append(z)
            post.append(a)
        reg = a @ self.reg_head[0] + self.reg_head[1]
        logits = [a @ W + b for _, W, b in self.class_heads]
        return reg, logits, (pre, post)

    def loss_and_grads(self, X, cont_t, cat_t):
        """Total loss (MSE + sum of cross-entropies) and grads per parameter."""
        n = X.shape[0]
        reg, logits, (pre, post) = self.forward(X)

        diff = reg - cont_t
        loss = float(np.mean(diff**2))
        d_reg = 2.0 * diff / diff.size

        d_heads = []
        for k, lg in enumerate(logits):
            p = _softmax(lg)
            onehot = np.zeros_like(p)
            onehot[np.arange(n), cat_t[:, k]] = 1.0
            loss += float(-np.mean(np.log(np.maximum(p[np.arange(n), cat_t[:, k]], 1e-300))))
            d_heads.append((p - onehot) / n)

        top = post[-1]
        dWr = top.T @ d_reg
        dbr = d_reg.sum(axis=0)
        da = d_reg @ self.reg_head[0].T
        head_grads = []
        for (name, W, b), dlg in zip(self.class_heads, d_heads):
            head_grads += [top.T @ dlg, dlg.sum(axis=0)]
            da = da + dlg @ W.T

        hidden_grads = []
        for i in range(len(self.hidden) - 1, -1, -1):
            W, b = self.hidden[i]
            dz = da * (pre[i] > 0.0)
            hidden_grads[:0] = [post[i].T @ dz, dz.sum(axis=0)]
            da = dz @ W.T

        grads = hidden_grads + [dWr, dbr] + head_grads
        return loss, grads

    def loss(self, X, cont_t, cat_t) -> float:
        value, _ = self.loss_and_grads(X, cont_t, cat_t)
        return value


def train(
    dataset: LabeledDataset,
    arch: NnArchitecture,
    seed: int,
    scaler: FeatureScaler | None = None,
    learning_rate: float = LEARNING_RATE,
    momentum: float = MOMENTUM,
    batch_size: int = BATCH_SIZE,
    epochs_override: int | None = None,
) -> NnModel:
    """Momentum-SGD training; deterministic given the seed."""
    if dataset.n == 0:
        raise ParameterError("dataset must be non-empty")
    continuous_only = dataset.cat_targets is None
    model = NnModel(dataset.X.shape[1], arch, seed, continuous_only=continuous_only)
    model.scaler = scaler
    model.feature_manifest = tuple(dataset.feature_names)

    epochs = arch.epochs if epochs_override is None else epochs_override
    rng = np.random.default_rng(derive_seed(seed, "shuffle"))
    params = model.parameters()
    velocity = [np.zeros_like(p) for p in params]
    cat_t = dataset.cat_targets

    for epoch in range(epochs):
        perm = rng.permutation(dataset.n)
        for bi, start in enumerate(range(0, dataset.n, batch_size)):
            idx = perm[start : start + batch_size]
            loss, grads = model.loss_and_grads(
                dataset.X[idx],
                dataset.cont_targets[idx],
                cat_t[idx] if cat_t is not None else None,
            )
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, bi)
            for p, v, g in zip(params, velocity, grads):
                v *= momentum
                v += g
                p -= learning_rate * v
    return model


def validation_loss(model: NnModel, dataset: LabeledDataset, idx) -> float:
    cat = dataset.cat_targets[idx] if dataset.cat_targets is not None else None
    return model.loss(dataset.X[idx], dataset.cont_targets[idx], cat)


def grid_search(
    dataset: LabeledDataset,
    seed: int,
    grid=None,
    n_repeats: int = 5,
    return_table: bool = False,
):
    """Pick the cell with the smallest mean validation loss over seeded 80:20 splits.

    Ties resolve toward fewer layers, then smaller width, then fewer epochs
    (the iteration order below).
    """
    if dataset.n < 25:
        raise ParameterError(f"need at least 25 rows for grid search, got {dataset.n}")
    cells = sorted(
        grid if grid is not None else full_grid(),
        key=lambda a: (a.n_hidden, a.hidden_size, a.epochs),
    )
    n_val = max(1, int(round(dataset.n * 0.2)))
    splits = []
    for rep in range(n_repeats):
        rng = np.random.default_rng(derive_seed(seed, "split", rep))
        perm = rng.permutation(dataset.n)
        splits.append((perm[n_val:], perm[:n_val]))

    table = {}
    best_cell, best_loss = None, math.inf
    for cell in cells:
        losses = []
        for rep, (train_idx, val_idx) in enumerate(splits):
            sub = LabeledDataset(
                X=dataset.X[train_idx],
                cont_targets=dataset.cont_targets[train_idx],
                cat_targets=(
                    dataset.cat_targets[train_idx]
                    if dataset.cat_targets is not None
                    else None
                ),
                feature_names=dataset.feature_names,
            )
            m = train(
                sub,
                cell,
                derive_seed(seed, "cell", cell.n_hidden, cell.hidden_size, cell.epochs, rep),
            )
            losses.append(validation_loss(m, dataset, val_idx))
        mean_loss = float(np.mean(losses))
        table[cell] = mean_loss
        if mean_loss < best_loss:
            best_cell, best_loss = cell, mean_loss

    if return_table:
        return best_cell, table
    return best_cell


def predict(model: NnModel, ela: ElaVector) -> Configuration:
    """Scale the feature vector, run the forward pass, decode the outputs."""
    if model.scaler is None:
        raise SchemaError("model carries no feature scaler")
    if model.feature_manifest:
        extra = [n for n in ela.names if n not in model.feature_manifest]
        if extra:
            raise SchemaError(f"unknown features not in the training manifest: {extra}")
    scaled = apply_scaler(model.scaler, ela)
    reg, logits, _ = model.forward(scaled.values[None, :])
    cont = reg[0]
    if model.continuous_only:
        return decode_continuous_only(cont)
    blocks = tuple(_softmax(lg)[0] for lg in logits)
    return decode(EncodedConfig(continuous=cont, onehot=blocks))


# -- persistence -------------------------------------------------------------------

MODEL_VERSION = "nncfg-v1"


def save_model(model: NnModel, path) -> None:
    doc = {
        "version": MODEL_VERSION,
        "architecture": {
            "n_hidden": model.arch.n_hidden,
            "hidden_size": model.arch.hidden_size,
            "epochs": model.arch.epochs,
        },
        "continuous_only": model.continuous_only,
        "feature_manifest": list(model.feature_manifest),
        "scaler": model.scaler.to_doc() if model.scaler is not None else None,
        "hidden": [
            {"W": W.tolist(), "b": b.tolist()} for W, b in model.hidden
        ],
        "regression_head": {
            "W": model.reg_head[0].tolist(),
            "b": model.reg_head[1].tolist(),
        },
        "class_heads": [
            {"field": name, "W": W.tolist(), "b": b.tolist()}
            for name, W, b in model.class_heads
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> NnModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_VERSION:
        raise SchemaError(f"unsupported model version {doc.get('version')!r}")
    arch = NnArchitecture(**doc["architecture"])
    hidden = [
        (np.asarray(h["W"], dtype=float), np.asarray(h["b"], dtype=float))
        for h in doc["hidden"]
    ]
    model = NnModel(
        input_width=hidden[0][0].shape[0] if hidden else N_CONTINUOUS,
        arch=arch,
        seed=0,
        continuous_only=doc["continuous_only"],
    )
    model.hidden = hidden
    model.reg_head = (
        np.asarray(doc["regression_head"]["W"], dtype=float),
        np.asarray(doc["regression_head"]["b"], dtype=float),
    )
    model.class_heads = [
        (h["field"], np.asarray(h["W"], dtype=float), np.asarray(h["b"], dtype=float))
        for h in doc["class_heads"]
    ]
    model.feature_manifest = tuple(doc["feature_manifest"])
    model.scaler = (
        FeatureScaler.from_doc(doc["scaler"]) if doc["scaler"] is not None else None
    )
    return model
