"""Modular (mu/mu_w, lambda)-CMA-ES with switchable variant modules.

Eleven tunable hyperparameters instantiate custom variants on top of the
standard algorithm: population sizing, parent ratio, initial step size, the
four strategy learning rates, active covariance update, mirrored sampling
(plain and pairwise-selective), threshold convergence, and the recombination
weight scheme. Learning rates set to 0 literally disable the corresponding
mechanism; only the `None` sentinel produced by `default_config` resolves to
the standard rate formulas at run time.

Runs are budget-driven with no restarts. The full best-so-far trace is
returned for anytime-performance scoring.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError
from .problems.base import ObjectiveFunction

LAMBDA_DOMAIN = (5, 50)
PARENT_RATIO_DOMAIN = (0.3, 0.5)
SIGMA0_DOMAIN = (0.1, 0.5)
LR_UNIT_DOMAIN = (0.0, 1.0)
LR_RANK_DOMAIN = (0.0, 0.35)

MIRRORED_CHOICES = ("none", "mirrored", "mirrored_pairwise")
WEIGHTS_CHOICES = ("default", "equal", "half_power_lambda")

# threshold-convergence decay, per the module's originating convention
_THRESHOLD_T0 = 0.2
_THRESHOLD_ALPHA = 0.5

_EIG_FLOOR = 1e-20


@dataclass(frozen=True)
class Configuration:
    """One point in the 11-hyperparameter search space.

    Learning rates may be None, the "auto" sentinel that `run` resolves via
    `resolve_auto_rates`; numeric values are used literally.
    """

    lambda_: int
    parent_ratio: float
    sigma0: float
    lr_sigma: float | None
    lr_cma: float | None
    lr_rank_mu: float | None
    lr_rank_one: float | None
    active: bool
    mirrored: str
    threshold_convergence: bool
    weights_scheme: str

    def validate(self) -> "Configuration":
        if not LAMBDA_DOMAIN[0] <= self.lambda_ <= LAMBDA_DOMAIN[1]:
            raise ParameterError(f"lambda {self.lambda_} outside {LAMBDA_DOMAIN}")
        _check_range("parent_ratio", self.parent_ratio, PARENT_RATIO_DOMAIN)
        _check_range("sigma0", self.sigma0, SIGMA0_DOMAIN)
        for name, dom in (
            ("lr_sigma", LR_UNIT_DOMAIN),
            ("lr_cma", LR_UNIT_DOMAIN),
            ("lr_rank_mu", LR_RANK_DOMAIN),
            ("lr_rank_one", LR_RANK_DOMAIN),
        ):
            v = getattr(self, name)
            if v is not None:
                _check_range(name, v, dom)
        if self.mirrored not in MIRRORED_CHOICES:
            raise ParameterError(f"mirrored must be one of {MIRRORED_CHOICES}")
        if self.weights_scheme not in WEIGHTS_CHOICES:
            raise ParameterError(f"weights_scheme must be one of {WEIGHTS_CHOICES}")
        if self.mu < 1:
            raise ParameterError("mu = round(parent_ratio * lambda) must be >= 1")
        return self

    @property
    def mu(self) -> int:
        return int(math.floor(self.parent_ratio * self.lambda_ + 0.5))

    def has_auto_rates(self) -> bool:
        return any(
            getattr(self, n) is None
            for n in ("lr_sigma", "lr_cma", "lr_rank_mu", "lr_rank_one")
        )

    def to_json(self) -> str:
        doc = {
            "lambda": self.lambda_,
            "parent_ratio": self.parent_ratio,
            "sigma0": self.sigma0,
            "lr_sigma": self.lr_sigma,
            "lr_cma": self.lr_cma,
            "lr_rank_mu": self.lr_rank_mu,
            "lr_rank_one": self.lr_rank_one,
            "active": self.active,
            "mirrored": self.mirrored,
            "threshold_convergence": self.threshold_convergence,
            "weights_scheme": self.weights_scheme,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_doc(cls, doc: dict) -> "Configuration":
        return cls(
            lambda_=int(doc["lambda"]),
            parent_ratio=float(doc["parent_ratio"]),
            sigma0=float(doc["sigma0"]),
            lr_sigma=None if doc["lr_sigma"] is None else float(doc["lr_sigma"]),
            lr_cma=None if doc["lr_cma"] is None else float(doc["lr_cma"]),
            lr_rank_mu=None if doc["lr_rank_mu"] is None else float(doc["lr_rank_mu"]),
            lr_rank_one=None if doc["lr_rank_one"] is None else float(doc["lr_rank_one"]),
            active=bool(doc["active"]),
            mirrored=str(doc["mirrored"]),
            threshold_convergence=bool(doc["threshold_convergence"]),
            weights_scheme=str(doc["weights_scheme"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "Configuration":
        return cls.from_doc(json.loads(text))


def _check_range(name: str, value: float, domain) -> None:
    lo, hi = domain
    if not (lo <= value <= hi) or not np.isfinite(value):
        raise ParameterError(f"{name} = {value} outside [{lo}, {hi}]")


@dataclass
class ConvergenceTrace:
    """Best-so-far objective value after each evaluation, padded to budget."""

    best_so_far: np.ndarray
    evaluations_used: int
    spd_repairs: int = 0
    stopped_early: bool = False

    def final(self) -> float:
        return float(self.best_so_far[-1])

    def compress(self):
        """Change points (eval_index, value) of the non-increasing trace."""
        vals = self.best_so_far
        change = np.nonzero(np.diff(vals) != 0.0)[0] + 1
        idx = np.concatenate(([0], change))
        return idx, vals[idx]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eval_index", "best_so_far"])
            for i, v in enumerate(self.best_so_far, start=1):
                writer.writerow([i, repr(float(v))])


def default_config(dimension: int) -> Configuration:
    """Standard defaults: lambda = 4 + floor(3 ln d), all modules off, auto rates."""
    if dimension < 2:
        raise ParameterError(f"dimension must be >= 2, got {dimension}")
    return Configuration(
        lambda_=4 + int(math.floor(3.0 * math.log(dimension))),
        parent_ratio=0.5,
        sigma0=0.2,
        lr_sigma=None,
        lr_cma=None,
        lr_rank_mu=None,
        lr_rank_one=None,
        active=False,
        mirrored="none",
        threshold_convergence=False,
        weights_scheme="default",
    )


def recombination_weights(scheme: str, mu: int) -> np.ndarray:
    """Positive weights over the mu selected candidates, normalized to sum 1."""
    i = np.arange(1, mu + 1, dtype=float)
    if scheme == "default":
        w = np.log(mu + 0.5) - np.log(i)
    elif scheme == "equal":
        w = np.ones(mu)
    elif scheme == "half_power_lambda":
        w = np.power(0.5, i)
    else:
        raise ParameterError(f"unknown weights scheme {scheme!r}")
    return w / w.sum()


def resolve_auto_rates(cfg: Configuration, dimension: int) -> Configuration:
    """Replace None sentinels with the standard CMA-ES rate formulas."""
    w = recombination_weights(cfg.weights_scheme, cfg.mu)
    mu_eff = 1.0 / float(np.sum(w * w))
    d = float(dimension)
    c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0)
    c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d)
    c_1 = 2.0 / ((d + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0) ** 2 + mu_eff))
    return replace(
        cfg,
        lr_sigma=c_sigma if cfg.lr_sigma is None else cfg.lr_sigma,
        lr_cma=c_c if cfg.lr_cma is None else cfg.lr_cma,
        lr_rank_mu=c_mu if cfg.lr_rank_mu is None else cfg.lr_rank_mu,
        lr_rank_one=c_1 if cfg.lr_rank_one is None else cfg.lr_rank_one,
    )


def run(
    f: ObjectiveFunction,
    cfg: Configuration,
    budget: int,
    seed: int,
) -> ConvergenceTrace:
    """Execute one seeded run and return the full best-so-far trace."""
    cfg.validate()
    lam = cfg.lambda_
    if budget < lam:
        raise ParameterError(f"budget {budget} < lambda {lam}")
    if cfg.has_auto_rates():
        cfg = resolve_auto_rates(cfg, f.dimension)

    d = f.dimension
    lb, ub = f.lower_bound, f.upper_bound
    width = ub - lb
    rng = np.random.default_rng(seed)

    mu = cfg.mu
    weights = recombination_weights(cfg.weights_scheme, mu)
    mu_eff = 1.0 / float(np.sum(weights * weights))

    c_sigma = cfg.lr_sigma
    c_c = cfg.lr_cma
    c_1 = cfg.lr_rank_one
    c_mu = cfg.lr_rank_mu
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0) + c_sigma
    chi_d = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))
    # negative-update rate for the active module (Jastrebski & Arnold style)
    beta_active = (4.0 * mu - 2.0) / ((d + 12.0) ** 2 + 4.0 * mu) if cfg.active else 0.0

    mean = rng.uniform(lb, ub, d)
    sigma = cfg.sigma0 * width
    C = np.eye(d)
    p_sigma = np.zeros(d)
    p_c = np.zeros(d)

    trace = np.empty(budget)
    evals = 0
    best = math.inf
    repairs = 0
    stopped = False
    gen = 0

    while evals < budget:
        eigvals, B = np.linalg.eigh((C + C.T) / 2.0)
        if eigvals[0] <= 0.0:
            repairs += 1
            eigvals = np.maximum(eigvals, _EIG_FLOOR)
        D = np.sqrt(eigvals)

        if cfg.mirrored != "none":
            half = (lam + 1) // 2
            Zh = rng.standard_normal((half, d))
            Z = np.empty((2 * half, d))
            Z[0::2] = Zh
            Z[1::2] = -Zh
            Z = Z[:lam]
        else:
            Z = rng.standard_normal((lam, d))

        Y = (Z * D) @ B.T
        if cfg.threshold_convergence:
            t = _THRESHOLD_T0 * width * ((budget - evals) / budget) ** _THRESHOLD_ALPHA
            lengths = sigma * np.linalg.norm(Y, axis=1)
            small = lengths < t
            if np.any(small):
                factor = np.ones(lam)
                nz = small & (lengths > 0)
                factor[nz] = (2.0 * t - lengths[nz]) / lengths[nz]
                Y = Y * factor[:, None]

        X = mean + sigma * Y

        n_eval = min(lam, budget - evals)
        fvals = f.evaluate_batch(X[:n_eval])
        # non-finite objective values rank (and track) as +inf so they can
        # neither poison the best-so-far trace nor win selection
        fvals = np.where(np.isfinite(fvals), fvals, math.inf)
        running = np.minimum.accumulate(np.minimum(fvals, best))
        trace[evals : evals + n_eval] = running
        best = float(running[-1])
        evals += n_eval
        if n_eval < lam:
            break

        # selection ranks by a boundary-penalized value so the mean cannot
        # wander off into the flat clamped region outside the box; traces
        # above keep the true (clamped) evaluations
        dist2 = np.sum(np.square(np.minimum(np.abs(X - f.clip(X)), 1e120)), axis=1)
        finite = fvals[np.isfinite(fvals)]
        if np.any(dist2 > 0.0) and len(finite):
            q75, q25 = np.percentile(finite, [75, 25])
            scale = (q75 - q25 + 1e-12) / width**2
            rank_vals = fvals + scale * dist2
        else:
            rank_vals = fvals

        if cfg.mirrored == "mirrored_pairwise":
            # pairwise selection: only the better of each mirrored pair competes
            n_pairs = lam // 2
            pair_vals = rank_vals[: 2 * n_pairs].reshape(n_pairs, 2)
            pool = 2 * np.arange(n_pairs) + np.argmin(pair_vals, axis=1)
            if lam % 2:
                pool = np.append(pool, lam - 1)
        else:
            pool = np.arange(lam)

        order = pool[np.argsort(rank_vals[pool], kind="stable")]
        sel = order[:mu]
        y_w = weights @ Y[sel]
        mean = mean + sigma * y_w

        inv_sqrt_diag = 1.0 / np.maximum(D, math.sqrt(_EIG_FLOOR))
        C_inv_sqrt_y = B @ (inv_sqrt_diag * (B.T @ y_w))
        p_sigma = (1.0 - c_sigma) * p_sigma + math.sqrt(
            c_sigma * (2.0 - c_sigma) * mu_eff
        ) * C_inv_sqrt_y

        gen += 1
        denom = 1.0 - (1.0 - c_sigma) ** (2.0 * gen)
        if denom > 0.0:
            h_sigma = float(
                np.linalg.norm(p_sigma) / math.sqrt(denom)
                < (1.4 + 2.0 / (d + 1.0)) * chi_d
            )
        else:
            h_sigma = 1.0
        p_c = (1.0 - c_c) * p_c + h_sigma * math.sqrt(c_c * (2.0 - c_c) * mu_eff) * y_w

        Ysel = Y[sel]
        rank_mu = (weights[:, None] * Ysel).T @ Ysel
        rank_one = np.outer(p_c, p_c) + (1.0 - h_sigma) * c_c * (2.0 - c_c) * C
        C = (1.0 - c_1 - c_mu) * C + c_1 * rank_one + c_mu * rank_mu
        if beta_active > 0.0:
            worst = np.argsort(rank_vals, kind="stable")[::-1][:mu]
            Yw = Y[worst]
            C = C - beta_active * (weights[:, None] * Yw).T @ Yw

        # exponent clamp keeps extreme sampled rates from overflowing sigma
        exponent = (c_sigma / d_sigma) * (np.linalg.norm(p_sigma) / chi_d - 1.0)
        sigma = sigma * math.exp(min(20.0, exponent))

        if not (np.all(np.isfinite(C)) and np.isfinite(sigma) and np.all(np.isfinite(mean))):
            stopped = True
            break

    if evals < budget:
        trace[evals:] = best
    return ConvergenceTrace(
        best_so_far=trace,
        evaluations_used=evals,
        spd_repairs=repairs,
        stopped_early=stopped,
    )
