"""Design-of-experiments sampling for landscape feature extraction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..problems.base import ObjectiveFunction
from ..seeding import derive_seed


@dataclass
class Doe:
    """Paired sample matrix and min-max normalized objective vector.

    `y` is normalized to [0, 1]; the raw extremes are kept so downstream
    consumers (AUC normalization, degeneracy screens) can recover raw scale.
    A constant-objective sample is flagged degenerate with y left all-zero.
    """

    X: np.ndarray
    y: np.ndarray
    y_raw_min: float
    y_raw_max: float
    degenerate: bool = field(default=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]


def latin_hypercube(n: int, dimension: int, lower: float, upper: float, seed: int) -> np.ndarray:
    """Seeded Latin hypercube: one point per stratum per coordinate."""
    rng = np.random.default_rng(derive_seed(seed, "lhs"))
    X = np.empty((n, dimension))
    width = (upper - lower) / n
    for j in range(dimension):
        strata = rng.permutation(n)
        X[:, j] = lower + (strata + rng.uniform(size=n)) * width
    return X


def sample_doe(f: ObjectiveFunction, samples_per_dim: int, seed: int) -> Doe:
    """Draw samples_per_dim * d points, evaluate, and min-max normalize y."""
    if samples_per_dim < 10:
        raise ParameterError(f"samples_per_dim must be >= 10, got {samples_per_dim}")
    n = samples_per_dim * f.dimension
    X = latin_hypercube(n, f.dimension, f.lower_bound, f.upper_bound, seed)
    y_raw = f.evaluate_batch(X)
    y_min = float(np.min(y_raw))
    y_max = float(np.max(y_raw))
    if y_max == y_min:
        return Doe(X=X, y=np.zeros(n), y_raw_min=y_min, y_raw_max=y_max, degenerate=True)
    y = (y_raw - y_min) / (y_max - y_min)
    return Doe(X=X, y=y, y_raw_min=y_min, y_raw_max=y_max)
