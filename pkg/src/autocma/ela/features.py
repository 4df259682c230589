"""Landscape features computed from a single design-of-experiments sample.

Fifty features across six classes: objective distribution, linear/quadratic
meta-models, dispersion, nearest-better clustering, principal components, and
information content of a nearest-neighbor tour. Everything is derived from
the sample alone (no extra function evaluations) and is invariant to the
order of sample rows: computation starts by sorting rows canonically, and the
tour seed is a hash of the sorted sample.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ..errors import DegenerateFunctionError, ParameterError
from .doe import Doe

_DISP_QUANTILES = (0.02, 0.05, 0.10, 0.25)

FEATURE_NAMES: tuple = (
    "distr.skewness",
    "distr.kurtosis",
    "distr.n_peaks",
    "meta.lin_r2",
    "meta.lin_adj_r2",
    "meta.lin_intercept",
    "meta.lin_coef_min",
    "meta.lin_coef_max",
    "meta.lin_coef_ratio",
    "meta.lin_inter_r2",
    "meta.lin_inter_adj_r2",
    "meta.quad_r2",
    "meta.quad_adj_r2",
    "meta.quad_cond",
    "meta.quad_inter_r2",
    "meta.quad_inter_adj_r2",
    "disp.ratio_mean_02",
    "disp.ratio_mean_05",
    "disp.ratio_mean_10",
    "disp.ratio_mean_25",
    "disp.ratio_median_02",
    "disp.ratio_median_05",
    "disp.ratio_median_10",
    "disp.ratio_median_25",
    "disp.diff_mean_02",
    "disp.diff_mean_05",
    "disp.diff_mean_10",
    "disp.diff_mean_25",
    "disp.diff_median_02",
    "disp.diff_median_05",
    "disp.diff_median_10",
    "disp.diff_median_25",
    "nbc.nn_nb_sd_ratio",
    "nbc.nn_nb_mean_ratio",
    "nbc.nn_nb_cor",
    "nbc.dist_ratio_cv",
    "nbc.nb_fitness_cor",
    "pca.expl_var_cov_x",
    "pca.expl_var_cor_x",
    "pca.expl_var_cov_xy",
    "pca.expl_var_cor_xy",
    "pca.pc1_cov_x",
    "pca.pc1_cor_x",
    "pca.pc1_cov_xy",
    "pca.pc1_cor_xy",
    "ic.h_max",
    "ic.eps_s",
    "ic.eps_max",
    "ic.eps_ratio",
    "ic.m0",
)


@dataclass(frozen=True)
class ElaVector:
    """Feature values in the fixed global ordering."""

    names: tuple
    values: np.ndarray

    def as_dict(self) -> dict:
        return dict(zip(self.names, map(float, self.values)))

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])


def compute_ela(doe: Doe) -> ElaVector:
    """Compute the fixed feature set from one non-degenerate sample."""
    if doe.degenerate:
        raise DegenerateFunctionError("constant objective sample: reject function")
    if doe.n < 10:
        raise ParameterError(f"need at least 10 samples, got {doe.n}")

    # canonical row order makes every index-based computation below
    # invariant to the order rows were supplied in
    order = np.lexsort((*[doe.X[:, j] for j in range(doe.dimension - 1, -1, -1)], doe.y))
    X = np.ascontiguousarray(doe.X[order])
    y = np.ascontiguousarray(doe.y[order])

    values: dict = {}
    _distribution_features(y, values)
    _meta_model_features(X, y, values)
    D = squareform(pdist(X))
    _dispersion_features(D, y, values)
    _nbc_features(D, y, values)
    _pca_features(X, y, values)
    _information_content_features(D, X, y, values)

    out = np.array([values[name] for name in FEATURE_NAMES], dtype=float)
    if not np.all(np.isfinite(out)):
        bad = [n for n, v in zip(FEATURE_NAMES, out) if not np.isfinite(v)]
        raise DegenerateFunctionError(f"non-finite features {bad}: reject function")
    return ElaVector(names=FEATURE_NAMES, values=out)


# -- objective distribution ---------------------------------------------------

def _distribution_features(y: np.ndarray, out: dict) -> None:
    centered = y - y.mean()
    m2 = np.mean(centered**2)
    out["distr.skewness"] = float(np.mean(centered**3) / m2**1.5) if m2 > 0 else 0.0
    out["distr.kurtosis"] = float(np.mean(centered**4) / m2**2 - 3.0) if m2 > 0 else 0.0
    out["distr.n_peaks"] = float(_count_peaks(y))


def _count_peaks(y: np.ndarray, mass_threshold: float = 0.1) -> int:
    n = len(y)
    std = np.std(y, ddof=1)
    iqr = np.subtract(*np.percentile(y, [75, 25]))
    scale = min(std, iqr / 1.349) if iqr > 0 else std
    if scale <= 0:
        return 1
    h = 1.06 * scale * n ** (-0.2)
    grid = np.linspace(y.min() - 3 * h, y.max() + 3 * h, 512)
    dens = np.exp(-0.5 * ((grid[:, None] - y[None, :]) / h) ** 2).sum(axis=1)
    total = dens.sum()
    maxima = np.nonzero((dens[1:-1] > dens[:-2]) & (dens[1:-1] >= dens[2:]))[0] + 1
    if len(maxima) <= 1:
        return max(1, len(maxima))
    # split mode regions at the density minima between consecutive maxima
    cuts = [0]
    for a, b in zip(maxima[:-1], maxima[1:]):
        cuts.append(a + int(np.argmin(dens[a:b])))
    cuts.append(len(grid))
    masses = [dens[lo:hi].sum() / total for lo, hi in zip(cuts[:-1], cuts[1:])]
    return max(1, int(np.sum(np.asarray(masses) >= mass_threshold)))


# -- linear and quadratic meta-models ----------------------------------------

def _fit(design: np.ndarray, y: np.ndarray):
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return coef, r2


def _adj_r2(r2: float, n: int, n_pred: int) -> float:
    if n - n_pred - 1 <= 0:
        return r2
    return 1.0 - (1.0 - r2) * (n - 1) / (n - n_pred - 1)


def _interactions(X: np.ndarray) -> np.ndarray:
    d = X.shape[1]
    cols = [X[:, i] * X[:, j] for i in range(d) for j in range(i + 1, d)]
    return np.column_stack(cols) if cols else np.empty((X.shape[0], 0))


_COEF_FLOOR = 1e-300
_RATIO_CAP = 1e12


def _ratio(num: float, den: float) -> float:
    # bounded ratio: near-zero denominators must not explode the feature scale
    return float(min(num / max(den, _COEF_FLOOR), _RATIO_CAP))


def _meta_model_features(X: np.ndarray, y: np.ndarray, out: dict) -> None:
    n, d = X.shape
    ones = np.ones((n, 1))

    lin = np.hstack([ones, X])
    coef, r2 = _fit(lin, y)
    betas = np.abs(coef[1:])
    out["meta.lin_r2"] = r2
    out["meta.lin_adj_r2"] = _adj_r2(r2, n, d)
    out["meta.lin_intercept"] = float(coef[0])
    out["meta.lin_coef_min"] = float(betas.min())
    out["meta.lin_coef_max"] = float(betas.max())
    out["meta.lin_coef_ratio"] = _ratio(betas.max(), betas.min())

    inter = _interactions(X)
    lin_i = np.hstack([ones, X, inter])
    _, r2 = _fit(lin_i, y)
    out["meta.lin_inter_r2"] = r2
    out["meta.lin_inter_adj_r2"] = _adj_r2(r2, n, lin_i.shape[1] - 1)

    quad = np.hstack([ones, X, X**2])
    coef, r2 = _fit(quad, y)
    qbetas = np.abs(coef[1 + d :])
    out["meta.quad_r2"] = r2
    out["meta.quad_adj_r2"] = _adj_r2(r2, n, 2 * d)
    out["meta.quad_cond"] = _ratio(qbetas.max(), qbetas.min())

    quad_i = np.hstack([ones, X, X**2, inter])
    _, r2 = _fit(quad_i, y)
    out["meta.quad_inter_r2"] = r2
    out["meta.quad_inter_adj_r2"] = _adj_r2(r2, n, quad_i.shape[1] - 1)


# -- dispersion ----------------------------------------------------------------

def _dispersion_features(D: np.ndarray, y: np.ndarray, out: dict) -> None:
    n = len(y)
    iu = np.triu_indices(n, k=1)
    all_d = D[iu]
    mean_all = float(all_d.mean())
    median_all = float(np.median(all_d))
    best = np.argsort(y, kind="stable")
    for q in _DISP_QUANTILES:
        k = max(2, int(np.ceil(q * n)))
        idx = best[:k]
        sub = D[np.ix_(idx, idx)][np.triu_indices(k, k=1)]
        tag = f"{int(q * 100):02d}"
        out[f"disp.ratio_mean_{tag}"] = float(sub.mean() / mean_all)
        out[f"disp.ratio_median_{tag}"] = float(np.median(sub) / median_all)
        out[f"disp.diff_mean_{tag}"] = float(sub.mean() - mean_all)
        out[f"disp.diff_median_{tag}"] = float(np.median(sub) - median_all)


# -- nearest-better clustering ---------------------------------------------

def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = a.std(), b.std()
    if sa <= 0 or sb <= 0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def _nbc_features(D: np.ndarray, y: np.ndarray, out: dict) -> None:
    n = len(y)
    Dd = D.copy()
    np.fill_diagonal(Dd, np.inf)
    nn = Dd.min(axis=1)

    better = y[None, :] < y[:, None]  # better[i, j]: j strictly better than i
    masked = np.where(better, Dd, np.inf)
    nb = masked.min(axis=1)
    has_better = np.isfinite(nb)
    # points with no strictly better point: farthest-point distance keeps nb finite
    nb[~has_better] = D[~has_better].max(axis=1)

    indegree = np.zeros(n)
    nearest_better_idx = masked.argmin(axis=1)
    np.add.at(indegree, nearest_better_idx[has_better], 1.0)

    out["nbc.nn_nb_sd_ratio"] = _ratio(nn.std(ddof=1), nb.std(ddof=1))
    out["nbc.nn_nb_mean_ratio"] = _ratio(nn.mean(), nb.mean())
    out["nbc.nn_nb_cor"] = _pearson(nn, nb)
    ratio = np.minimum(nb / np.maximum(nn, _COEF_FLOOR), _RATIO_CAP)
    out["nbc.dist_ratio_cv"] = _ratio(ratio.std(ddof=1), ratio.mean())
    out["nbc.nb_fitness_cor"] = _pearson(indegree, y)


# -- principal components ------------------------------------------------------

def _expl_var(mat: np.ndarray, correlation: bool):
    cov = np.corrcoef(mat.T) if correlation else np.cov(mat.T)
    eig = np.sort(np.linalg.eigvalsh(cov))[::-1]
    eig = np.maximum(eig, 0.0)
    total = eig.sum()
    if total <= 0:
        return 1.0, 1.0
    frac = np.cumsum(eig) / total
    k = int(np.searchsorted(frac, 0.9) + 1)
    return k / len(eig), float(eig[0] / total)


def _pca_features(X: np.ndarray, y: np.ndarray, out: dict) -> None:
    XY = np.hstack([X, y[:, None]])
    out["pca.expl_var_cov_x"], out["pca.pc1_cov_x"] = _expl_var(X, correlation=False)
    out["pca.expl_var_cor_x"], out["pca.pc1_cor_x"] = _expl_var(X, correlation=True)
    out["pca.expl_var_cov_xy"], out["pca.pc1_cov_xy"] = _expl_var(XY, correlation=False)
    out["pca.expl_var_cor_xy"], out["pca.pc1_cor_xy"] = _expl_var(XY, correlation=True)


# -- information content of a nearest-neighbor tour --------------------------

_EPS_GRID = np.logspace(-5, 15, 1000)


def _information_content_features(D: np.ndarray, X: np.ndarray, y: np.ndarray, out: dict) -> None:
    n = len(y)
    digest = hashlib.blake2b(X.tobytes() + y.tobytes(), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))

    # greedy nearest-unvisited tour from a hashed-seed start point
    Dd = D.copy()
    np.fill_diagonal(Dd, np.inf)
    current = int(rng.integers(n))
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=int)
    for i in range(n):
        order[i] = current
        visited[current] = True
        if i + 1 < n:
            row = np.where(visited, np.inf, Dd[current])
            current = int(row.argmin())

    steps = np.maximum(D[order[:-1], order[1:]], 1e-30)
    phi = np.diff(y[order]) / steps

    symbols = (phi[None, :] > _EPS_GRID[:, None]).astype(np.int8) - (
        phi[None, :] < -_EPS_GRID[:, None]
    ).astype(np.int8)
    a, b = symbols[:, :-1], symbols[:, 1:]
    codes = (a + 1) * 3 + (b + 1)
    n_pairs = codes.shape[1]
    H = np.zeros(len(_EPS_GRID))
    for code in (1, 2, 3, 5, 6, 7):  # the six pairs with a != b
        p = (codes == code).sum(axis=1) / n_pairs
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(p > 0, p * np.log(p) / np.log(6.0), 0.0)
        H -= term

    out["ic.h_max"] = float(H.max())
    out["ic.eps_max"] = float(np.log10(_EPS_GRID[int(H.argmax())]))
    below = np.nonzero(H < 0.05)[0]
    out["ic.eps_s"] = float(np.log10(_EPS_GRID[below[0]])) if len(below) else 15.0

    def partial_information(sym: np.ndarray) -> float:
        nz = sym[sym != 0]
        if len(nz) == 0:
            return 0.0
        return float(1 + np.sum(nz[1:] != nz[:-1])) / len(phi)

    m0 = partial_information(np.sign(phi).astype(np.int8))
    out["ic.m0"] = m0
    if m0 > 0:
        ms = np.array([partial_information(symbols[i]) for i in range(len(_EPS_GRID))])
        under = np.nonzero(ms < 0.5 * m0)[0]
        out["ic.eps_ratio"] = (
            float(np.log10(_EPS_GRID[under[0]])) if len(under) else 15.0
        )
    else:
        out["ic.eps_ratio"] = -5.0
