"""Affine log-space combinations of many BBOB functions.

A combination places every component's optimum at a shared location x_new,
normalizes each component by a seed-derived scale so components are
commensurate in log space, and mixes with nonnegative weights summing to 1.
By construction the combined optimum value is 0 at x_new.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, SchemaError
from ..seeding import derive_seed
from .base import ObjectiveFunction
from .bbob import N_FUNCTIONS, make_bbob

EPSILON = 1e-8
_SCALE_SAMPLE = 1000


@dataclass(frozen=True)
class MaBbobSpec:
    """Weights over the 24 components, shared optimum location, and seed."""

    weights: tuple
    optimum_location: tuple
    seed: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        x = np.asarray(self.optimum_location, dtype=float)
        if w.shape != (N_FUNCTIONS,):
            raise ParameterError(f"weights must have length {N_FUNCTIONS}, got {w.shape}")
        if np.any(w < 0.0):
            raise ParameterError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise ParameterError(f"weights must sum to 1, got {w.sum()!r}")
        if not np.any(w > 0.0):
            raise ParameterError("at least one weight must be positive")
        if np.any(np.abs(x) >= 4.0):
            raise ParameterError("optimum_location must lie strictly inside [-4, 4]^d")

    @property
    def dimension(self) -> int:
        return len(self.optimum_location)

    def to_json(self) -> str:
        doc = {
            "weights": list(map(float, self.weights)),
            "x_new": list(map(float, self.optimum_location)),
            "seed": int(self.seed),
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MaBbobSpec":
        try:
            doc = json.loads(text)
            return cls(
                weights=tuple(float(v) for v in doc["weights"]),
                optimum_location=tuple(float(v) for v in doc["x_new"]),
                seed=int(doc["seed"]),
            )
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise SchemaError(f"invalid many-affine spec document: {exc}") from exc


class MaBbobFunction(ObjectiveFunction):
    """f(x) = exp(sum_i w_i ln(s_i (f_i(x - x_new + o_i) - f_i*) + eps)) - eps."""

    def __init__(self, spec: MaBbobSpec, dimension: int):
        if dimension != spec.dimension:
            raise ParameterError(
                f"spec dimension {spec.dimension} != requested dimension {dimension}"
            )
        if dimension < 2:
            raise ParameterError(f"dimension must be >= 2, got {dimension}")
        x_new = np.asarray(spec.optimum_location, dtype=float)
        super().__init__(
            id=f"mabbob-d{dimension}-s{spec.seed}",
            dimension=dimension,
            known_optimum=0.0,
            optimum_location=x_new,
        )
        self.spec = spec
        weights = np.asarray(spec.weights, dtype=float)
        active = np.nonzero(weights > 0.0)[0]
        self._weights = weights[active]
        self._components = [
            make_bbob(int(fid0) + 1, dimension, derive_seed(spec.seed, "component", int(fid0) + 1))
            for fid0 in active
        ]
        rng = np.random.default_rng(derive_seed(spec.seed, "scale-sample"))
        sample = rng.uniform(self.lower_bound, self.upper_bound, (_SCALE_SAMPLE, dimension))
        self._scales = np.array(
            [
                1.0 / float(np.median(c._eval_rows(sample) - c.known_optimum))
                for c in self._components
            ]
        )

    def _eval_rows(self, X: np.ndarray) -> np.ndarray:
        acc = np.zeros(X.shape[0])
        for w, s, comp in zip(self._weights, self._scales, self._components):
            shifted = X - self.optimum_location + comp.optimum_location
            vals = comp._eval_rows(shifted) - comp.known_optimum
            # floor guards tiny negative excursions of components outside the box
            acc += w * np.log(np.maximum(s * vals, 0.0) + EPSILON)
        return np.exp(acc) - EPSILON


def make_mabbob(spec: MaBbobSpec, dimension: int) -> MaBbobFunction:
    """Build the combined function for a validated spec."""
    return MaBbobFunction(spec, dimension)


def sample_mabbob_spec(dimension: int, seed: int) -> MaBbobSpec:
    """Draw a random spec: sparse Dirichlet weights and a uniform optimum.

    Weights come from a flat Dirichlet over the 24 components with small
    entries truncated to zero (then renormalized), which keeps most draws
    sparse enough to produce distinct landscapes.
    """
    rng = np.random.default_rng(derive_seed(seed, "mabbob-spec"))
    w = rng.dirichlet(np.ones(N_FUNCTIONS))
    w[w < 1.0 / N_FUNCTIONS] = 0.0
    if not np.any(w > 0.0):
        w[int(np.argmax(rng.dirichlet(np.ones(N_FUNCTIONS))))] = 1.0
    w = w / w.sum()
    x_new = rng.uniform(-4.0, 4.0, dimension)
    # the optimum must sit strictly inside the open box
    x_new = np.clip(x_new, -4.0 + 1e-9, 4.0 - 1e-9)
    return MaBbobSpec(
        weights=tuple(map(float, w)),
        optimum_location=tuple(map(float, x_new)),
        seed=int(seed),
    )
