"""Common abstraction for all evaluation-side problem functions."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError


class ObjectiveFunction:
    """A bounded, deterministic, d-dimensional scalar function.

    Subclasses implement ``_eval_rows`` on an (n, d) matrix and must be pure:
    identical inputs yield bit-identical outputs, and every in-bounds input
    maps to a finite value. Out-of-bounds evaluation requests are clamped
    coordinate-wise to the box before evaluation.
    """

    def __init__(
        self,
        id: str,
        dimension: int,
        lower_bound: float = -5.0,
        upper_bound: float = 5.0,
        known_optimum: float | None = None,
        optimum_location: np.ndarray | None = None,
    ):
        if dimension < 1:
            raise ParameterError(f"dimension must be positive, got {dimension}")
        self.id = id
        self.dimension = int(dimension)
        self.lower_bound = float(lower_bound)
        self.upper_bound = float(upper_bound)
        self.known_optimum = known_optimum
        self.optimum_location = (
            None if optimum_location is None else np.asarray(optimum_location, dtype=float)
        )

    def _eval_rows(self, X: np.ndarray) -> np.ndarray:
        """Raw evaluation of an (n, d) matrix, no boundary clamping."""
        raise NotImplementedError

    def clip(self, X: np.ndarray) -> np.ndarray:
        return np.clip(X, self.lower_bound, self.upper_bound)

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dimension:
            raise ParameterError(
                f"expected point of dimension {self.dimension}, got {x.shape[0]}"
            )
        return float(self._eval_rows(self.clip(x)[None, :])[0])

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise ParameterError(
                f"expected (n, {self.dimension}) matrix, got shape {X.shape}"
            )
        return self._eval_rows(self.clip(X))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.id!r}, d={self.dimension})"
