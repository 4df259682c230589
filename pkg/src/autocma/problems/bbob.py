"""Single-instance implementations of the 24 noiseless BBOB functions.

Each function id gets exactly one deterministic instance per (dimension,
seed): the rotation matrices, optimum shift and optimum value are derived
from the seed instead of the benchmark's instance-transformation machinery.
Evaluation is vectorized over rows and total on all of R^d, so functions can
be composed and shifted (see the many-affine combinator) without domain
errors.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..seeding import derive_seed
from .base import ObjectiveFunction

N_FUNCTIONS = 24

FUNCTION_NAMES = {
    1: "sphere",
    2: "ellipsoidal",
    3: "rastrigin",
    4: "bueche_rastrigin",
    5: "linear_slope",
    6: "attractive_sector",
    7: "step_ellipsoidal",
    8: "rosenbrock",
    9: "rosenbrock_rotated",
    10: "ellipsoidal_rotated",
    11: "discus",
    12: "bent_cigar",
    13: "sharp_ridge",
    14: "different_powers",
    15: "rastrigin_rotated",
    16: "weierstrass",
    17: "schaffers_f7",
    18: "schaffers_f7_ill",
    19: "griewank_rosenbrock",
    20: "schwefel",
    21: "gallagher_101",
    22: "gallagher_21",
    23: "katsuura",
    24: "lunacek_bi_rastrigin",
}


# -- shared transformations ------------------------------------------------

def oscillate(x: np.ndarray) -> np.ndarray:
    """Elementwise oscillation transform T_osz."""
    xhat = np.where(x == 0.0, 0.0, np.log(np.abs(np.where(x == 0.0, 1.0, x))))
    c1 = np.where(x > 0.0, 10.0, 5.5)
    c2 = np.where(x > 0.0, 7.9, 3.1)
    out = np.sign(x) * np.exp(xhat + 0.049 * (np.sin(c1 * xhat) + np.sin(c2 * xhat)))
    return np.where(x == 0.0, 0.0, out)


def asymmetrize(Z: np.ndarray, beta: float) -> np.ndarray:
    """Rowwise asymmetry transform T_asy^beta on an (n, d) matrix."""
    d = Z.shape[1]
    expo = 1.0 + beta * (np.arange(d) / (d - 1.0)) * np.sqrt(np.maximum(Z, 0.0))
    return np.where(Z > 0.0, np.power(np.maximum(Z, 0.0), expo), Z)


def conditioning(alpha: float, d: int) -> np.ndarray:
    """Diagonal of the conditioning matrix Lambda^alpha."""
    return np.power(alpha, 0.5 * np.arange(d) / (d - 1.0))


def boundary_penalty(X: np.ndarray) -> np.ndarray:
    """Rowwise quadratic penalty outside [-5, 5]^d."""
    return np.sum(np.square(np.maximum(0.0, np.abs(X) - 5.0)), axis=1)


def random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    """Seeded orthogonal matrix via QR with a deterministic sign convention."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


# -- per-id construction and evaluation -------------------------------------

class BbobFunction(ObjectiveFunction):
    """One seed-derived instance of a BBOB function id."""

    def __init__(self, fid: int, dimension: int, seed: int):
        if not 1 <= fid <= N_FUNCTIONS:
            raise ParameterError(f"fid must be in 1..{N_FUNCTIONS}, got {fid}")
        if dimension < 2:
            raise ParameterError(f"dimension must be >= 2, got {dimension}")
        self.fid = int(fid)
        self.seed = int(seed)
        rng = np.random.default_rng(derive_seed(seed, "bbob", fid, dimension))
        p = _build_params(fid, dimension, rng)
        super().__init__(
            id=f"bbob-f{fid:02d}-d{dimension}-s{seed}",
            dimension=dimension,
            known_optimum=p["f_opt"],
            optimum_location=p["x_loc"],
        )
        self._p = p
        self._core = _CORES[fid]

    def _eval_rows(self, X: np.ndarray) -> np.ndarray:
        return self._core(np.asarray(X, dtype=float), self._p) + self._p["f_opt"]


def make_bbob(fid: int, dimension: int, seed: int) -> BbobFunction:
    """Instantiate BBOB function `fid` with seed-derived transformations."""
    return BbobFunction(fid, dimension, seed)


def _build_params(fid: int, d: int, rng: np.random.Generator) -> dict:
    """Draw all per-instance data. The draw order is fixed per fid."""
    p: dict = {}
    # f_opt mimics the benchmark's bounded two-decimal optimum values.
    p["f_opt"] = float(np.round(rng.uniform(-100.0, 100.0), 2))
    x_opt = rng.uniform(-4.0, 4.0, d)
    R = random_rotation(rng, d)
    Q = random_rotation(rng, d)
    p["R"], p["Q"] = R, Q

    if fid == 5:
        signs = np.where(rng.uniform(-1.0, 1.0, d) >= 0.0, 1.0, -1.0)
        p["x_opt"] = 5.0 * signs
        p["slope"] = signs * np.power(10.0, np.arange(d) / (d - 1.0))
        p["x_loc"] = p["x_opt"]
    elif fid == 8:
        p["x_opt"] = rng.uniform(-3.0, 3.0, d)
        p["x_loc"] = p["x_opt"]
    elif fid in (9, 19):
        c = max(1.0, np.sqrt(d) / 8.0)
        p["scale"] = c
        p["x_loc"] = R.T @ np.full(d, 0.5 / c)
        p["x_opt"] = p["x_loc"]
    elif fid == 20:
        signs = np.where(rng.uniform(-1.0, 1.0, d) >= 0.0, 1.0, -1.0)
        p["x_opt"] = 0.5 * 4.2096874633 * signs
        p["x_loc"] = p["x_opt"]
    elif fid in (21, 22):
        n_peaks = 101 if fid == 21 else 21
        w = np.empty(n_peaks)
        w[0] = 10.0
        w[1:] = 1.1 + 8.0 * np.arange(n_peaks - 1) / (n_peaks - 2.0)
        alphas = np.empty(n_peaks)
        alphas[0] = 1000.0 if fid == 21 else 1000.0**2
        pool = np.power(1000.0, 2.0 * np.arange(n_peaks - 1) / (n_peaks - 2.0))
        alphas[1:] = rng.permutation(pool)
        diags = np.empty((n_peaks, d))
        for i in range(n_peaks):
            diags[i] = rng.permutation(conditioning(alphas[i], d)) / alphas[i] ** 0.25
        span = 5.0 if fid == 21 else 4.9
        Y = rng.uniform(-span, span, (n_peaks, d))
        Y[0] = x_opt if fid == 21 else x_opt * (3.92 / 4.0)
        p["peak_w"], p["peak_diag"], p["peak_loc"] = w, diags, Y
        p["x_opt"] = Y[0].copy()
        p["x_loc"] = Y[0].copy()
    elif fid == 24:
        mu0 = 2.5
        signs = np.where(rng.uniform(-1.0, 1.0, d) >= 0.0, 1.0, -1.0)
        p["x_opt"] = 0.5 * mu0 * signs
        p["x_loc"] = p["x_opt"]
        p["signs"] = signs
    else:
        p["x_opt"] = x_opt
        p["x_loc"] = x_opt

    return p


def _f1_sphere(X, p):
    Z = X - p["x_opt"]
    return np.sum(Z * Z, axis=1)


def _f2_ellipsoidal(X, p):
    Z = oscillate(X - p["x_opt"])
    d = X.shape[1]
    w = np.power(10.0, 6.0 * np.arange(d) / (d - 1.0))
    return Z * Z @ w


def _f3_rastrigin(X, p):
    d = X.shape[1]
    Z = asymmetrize(oscillate(X - p["x_opt"]), 0.2) * conditioning(10.0, d)
    return 10.0 * (d - np.sum(np.cos(2.0 * np.pi * Z), axis=1)) + np.sum(Z * Z, axis=1)


def _f4_bueche_rastrigin(X, p):
    d = X.shape[1]
    Z = oscillate(X - p["x_opt"])
    s = np.power(10.0, 0.5 * np.arange(d) / (d - 1.0))
    odd = (np.arange(d) % 2) == 0  # 1-based odd coordinates
    S = np.where((Z > 0.0) & odd, 10.0 * s, s)
    Z = S * Z
    core = 10.0 * (d - np.sum(np.cos(2.0 * np.pi * Z), axis=1)) + np.sum(Z * Z, axis=1)
    return core + 100.0 * boundary_penalty(X)


def _f5_linear_slope(X, p):
    x_opt, s = p["x_opt"], p["slope"]
    Z = np.where(X * x_opt < 25.0, X, x_opt)
    return np.sum(5.0 * np.abs(s) - s * Z, axis=1)


def _f6_attractive_sector(X, p):
    d = X.shape[1]
    Z = (X - p["x_opt"]) @ p["R"].T * conditioning(10.0, d) @ p["Q"].T
    s = np.where(Z * p["x_opt"] > 0.0, 100.0, 1.0)
    val = np.sum(np.square(s * Z), axis=1)
    return np.power(oscillate(val), 0.9)


def _f7_step_ellipsoidal(X, p):
    d = X.shape[1]
    Zhat = (X - p["x_opt"]) @ p["R"].T * conditioning(10.0, d)
    Ztil = np.where(
        np.abs(Zhat) > 0.5,
        np.floor(0.5 + Zhat),
        np.floor(0.5 + 10.0 * Zhat) / 10.0,
    )
    Z = Ztil @ p["Q"].T
    w = np.power(10.0, 2.0 * np.arange(d) / (d - 1.0))
    val = Z * Z @ w
    core = 0.1 * np.maximum(np.abs(Zhat[:, 0]) / 1e4, val)
    return core + boundary_penalty(X)


def _rosenbrock_sum(Z):
    A = Z[:, :-1]
    B = Z[:, 1:]
    return np.sum(100.0 * np.square(A * A - B) + np.square(A - 1.0), axis=1)


def _f8_rosenbrock(X, p):
    c = max(1.0, np.sqrt(X.shape[1]) / 8.0)
    Z = c * (X - p["x_opt"]) + 1.0
    return _rosenbrock_sum(Z)


def _f9_rosenbrock_rotated(X, p):
    Z = p["scale"] * (X @ p["R"].T) + 0.5
    return _rosenbrock_sum(Z)


def _f10_ellipsoidal_rotated(X, p):
    d = X.shape[1]
    Z = oscillate((X - p["x_opt"]) @ p["R"].T)
    w = np.power(10.0, 6.0 * np.arange(d) / (d - 1.0))
    return Z * Z @ w


def _f11_discus(X, p):
    Z = oscillate((X - p["x_opt"]) @ p["R"].T)
    sq = Z * Z
    return 1e6 * sq[:, 0] + np.sum(sq[:, 1:], axis=1)


def _f12_bent_cigar(X, p):
    R = p["R"]
    Z = asymmetrize((X - p["x_opt"]) @ R.T, 0.5) @ R.T
    sq = Z * Z
    return sq[:, 0] + 1e6 * np.sum(sq[:, 1:], axis=1)


def _f13_sharp_ridge(X, p):
    d = X.shape[1]
    Z = (X - p["x_opt"]) @ p["R"].T * conditioning(10.0, d) @ p["Q"].T
    sq = Z * Z
    return sq[:, 0] + 100.0 * np.sqrt(np.sum(sq[:, 1:], axis=1))


def _f14_different_powers(X, p):
    d = X.shape[1]
    Z = (X - p["x_opt"]) @ p["R"].T
    expo = 2.0 + 4.0 * np.arange(d) / (d - 1.0)
    return np.sqrt(np.sum(np.power(np.abs(Z), expo), axis=1))


def _f15_rastrigin_rotated(X, p):
    d = X.shape[1]
    Z = asymmetrize(oscillate((X - p["x_opt"]) @ p["R"].T), 0.2) @ p["Q"].T
    Z = Z * conditioning(10.0, d) @ p["R"].T
    return 10.0 * (d - np.sum(np.cos(2.0 * np.pi * Z), axis=1)) + np.sum(Z * Z, axis=1)


_W_K = np.arange(12)
_W_HALF = np.power(0.5, _W_K)
_W_THREE = np.power(3.0, _W_K)
_W_F0 = float(np.sum(_W_HALF * np.cos(np.pi * _W_THREE)))


def _f16_weierstrass(X, p):
    d = X.shape[1]
    Z = oscillate((X - p["x_opt"]) @ p["R"].T) @ p["Q"].T
    Z = Z * conditioning(0.01, d) @ p["R"].T
    inner = np.sum(
        _W_HALF * np.cos(2.0 * np.pi * _W_THREE * (Z[..., None] + 0.5)), axis=(1, 2)
    )
    core = 10.0 * np.power(inner / d - _W_F0, 3)
    return core + (10.0 / d) * boundary_penalty(X)


def _schaffers(X, p, alpha):
    d = X.shape[1]
    Z = asymmetrize((X - p["x_opt"]) @ p["R"].T, 0.5) @ p["Q"].T
    Z = Z * conditioning(alpha, d)
    s = np.sqrt(Z[:, :-1] ** 2 + Z[:, 1:] ** 2)
    rs = np.sqrt(s)
    total = np.sum(rs + rs * np.sin(50.0 * np.power(s, 0.2)) ** 2, axis=1)
    core = np.square(total / (d - 1.0))
    return core + 10.0 * boundary_penalty(X)


def _f17_schaffers(X, p):
    return _schaffers(X, p, 10.0)


def _f18_schaffers_ill(X, p):
    return _schaffers(X, p, 1000.0)


def _f19_griewank_rosenbrock(X, p):
    d = X.shape[1]
    Z = p["scale"] * (X @ p["R"].T) + 0.5
    A = Z[:, :-1]
    B = Z[:, 1:]
    s = 100.0 * np.square(A * A - B) + np.square(A - 1.0)
    return 10.0 * np.sum(s / 4000.0 - np.cos(s), axis=1) / (d - 1.0) + 10.0


def _f20_schwefel(X, p):
    d = X.shape[1]
    x_opt = p["x_opt"]
    Xhat = 2.0 * np.sign(x_opt) * X
    Zhat = Xhat.copy()
    Zhat[:, 1:] += 0.25 * (Xhat[:, :-1] - 2.0 * np.abs(x_opt[:-1]))
    Z = 100.0 * (conditioning(10.0, d) * (Zhat - 2.0 * np.abs(x_opt)) + 2.0 * np.abs(x_opt))
    core = -np.sum(Z * np.sin(np.sqrt(np.abs(Z))), axis=1) / (100.0 * d)
    return core + 4.189828872724339 + 100.0 * boundary_penalty(Z / 100.0)


def _gallagher(X, p):
    d = X.shape[1]
    R = p["R"]
    W, C, Y = p["peak_w"], p["peak_diag"], p["peak_loc"]
    B = X @ R.T
    Bp = Y @ R.T
    # quad[n, i] = sum_k C[i, k] * (B[n, k] - Bp[i, k])^2, expanded to matmuls
    quad = (B * B) @ C.T - 2.0 * (B @ (C * Bp).T) + np.sum(C * Bp * Bp, axis=1)
    vals = W * np.exp(-quad / (2.0 * d))
    core = np.square(oscillate(10.0 - np.max(vals, axis=1)))
    return core + boundary_penalty(X)


_K_J = np.arange(1, 33)
_K_POW = np.power(2.0, _K_J)


def _f23_katsuura(X, p):
    d = X.shape[1]
    Z = (X - p["x_opt"]) @ p["R"].T * conditioning(100.0, d) @ p["Q"].T
    ZJ = Z[..., None] * _K_POW
    terms = np.sum(np.abs(ZJ - np.round(ZJ)) / _K_POW, axis=2)
    prod = np.prod(1.0 + np.arange(1, d + 1) * terms, axis=1)
    core = (10.0 / d**2) * (np.power(prod, 10.0 / d**1.2) - 1.0)
    return core + boundary_penalty(X)


def _f24_lunacek(X, p):
    d = X.shape[1]
    mu0 = 2.5
    s = 1.0 - 1.0 / (2.0 * np.sqrt(d + 20.0) - 8.2)
    mu1 = -np.sqrt((mu0**2 - 1.0) / s)
    Xhat = 2.0 * p["signs"] * X
    Z = (Xhat - mu0) @ p["R"].T * conditioning(100.0, d) @ p["Q"].T
    s1 = np.sum(np.square(Xhat - mu0), axis=1)
    s2 = np.sum(np.square(Xhat - mu1), axis=1)
    s3 = np.sum(np.cos(2.0 * np.pi * Z), axis=1)
    core = np.minimum(s1, d + s * s2) + 10.0 * (d - s3)
    return core + 1e4 * boundary_penalty(X)


_CORES = {
    1: _f1_sphere,
    2: _f2_ellipsoidal,
    3: _f3_rastrigin,
    4: _f4_bueche_rastrigin,
    5: _f5_linear_slope,
    6: _f6_attractive_sector,
    7: _f7_step_ellipsoidal,
    8: _f8_rosenbrock,
    9: _f9_rosenbrock_rotated,
    10: _f10_ellipsoidal_rotated,
    11: _f11_discus,
    12: _f12_bent_cigar,
    13: _f13_sharp_ridge,
    14: _f14_different_powers,
    15: _f15_rastrigin_rotated,
    16: _f16_weierstrass,
    17: _f17_schaffers,
    18: _f18_schaffers_ill,
    19: _f19_griewank_rosenbrock,
    20: _f20_schwefel,
    21: _gallagher,
    22: _gallagher,
    23: _f23_katsuura,
    24: _f24_lunacek,
}
