"""Tree-structured Parzen estimator over the mixed configuration space.

Proposals maximize the density ratio between a "good" and a "bad" Parzen
model fitted to the trial history split at a score quantile. Continuous and
integer dimensions use truncated Gaussian kernels with a nearest-neighbor
bandwidth; categoricals use pseudo-count-smoothed empirical probabilities.
The single integer dimension (population size) is modeled continuously and
rounded at proposal time.

`label_function` applies the optimizer to one objective function: each trial
scores a configuration by the median anytime-performance AUC over seeded
CMA-ES repetitions. For functions without a known optimum the normalization
uses a provisional running best during the search and is recomputed from the
stored traces once the final best value is known, so persisted histories are
internally consistent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .cmaes import (
    LAMBDA_DOMAIN,
    LR_RANK_DOMAIN,
    LR_UNIT_DOMAIN,
    MIRRORED_CHOICES,
    PARENT_RATIO_DOMAIN,
    SIGMA0_DOMAIN,
    WEIGHTS_CHOICES,
    Configuration,
    run,
)
from .ela.doe import Doe, sample_doe
from .errors import DegenerateFunctionError, ParameterError
from .problems.base import ObjectiveFunction
from .seeding import derive_seed
from .selection import estimate_yopt
from .stats import auc_from_steps

GAMMA = 0.25
N_STARTUP = 20
N_CANDIDATES = 24
_BANDWIDTH_FLOOR_FRACTION = 0.01
_CATEGORY_PSEUDO_COUNT = 1.0


@dataclass(frozen=True)
class ContinuousDim:
    name: str
    low: float
    high: float
    integer: bool = False

    @property
    def width(self) -> float:
        return self.high - self.low


@dataclass(frozen=True)
class CategoricalDim:
    name: str
    choices: tuple


def config_space(restrict_to_continuous: bool = False):
    """The tunable hyperparameter domains as a list of dimension descriptors."""
    dims = [
        ContinuousDim("lambda", *map(float, LAMBDA_DOMAIN), integer=True),
        ContinuousDim("parent_ratio", *PARENT_RATIO_DOMAIN),
        ContinuousDim("sigma0", *SIGMA0_DOMAIN),
        ContinuousDim("lr_sigma", *LR_UNIT_DOMAIN),
        ContinuousDim("lr_cma", *LR_UNIT_DOMAIN),
        ContinuousDim("lr_rank_mu", *LR_RANK_DOMAIN),
        ContinuousDim("lr_rank_one", *LR_RANK_DOMAIN),
    ]
    if not restrict_to_continuous:
        dims += [
            CategoricalDim("active", (False, True)),
            CategoricalDim("mirrored", MIRRORED_CHOICES),
            CategoricalDim("threshold_convergence", (False, True)),
            CategoricalDim("weights_scheme", WEIGHTS_CHOICES),
        ]
    return dims


def values_to_config(values: dict) -> Configuration:
    """Assemble a Configuration, filling frozen categoricals with defaults."""
    return Configuration(
        lambda_=int(values["lambda"]),
        parent_ratio=float(values["parent_ratio"]),
        sigma0=float(values["sigma0"]),
        lr_sigma=float(values["lr_sigma"]),
        lr_cma=float(values["lr_cma"]),
        lr_rank_mu=float(values["lr_rank_mu"]),
        lr_rank_one=float(values["lr_rank_one"]),
        active=bool(values.get("active", False)),
        mirrored=str(values.get("mirrored", "none")),
        threshold_convergence=bool(values.get("threshold_convergence", False)),
        weights_scheme=str(values.get("weights_scheme", "default")),
    ).validate()


@dataclass
class HpoResult:
    """Everything the tuner learned about one function."""

    function_id: str
    history: list  # (Configuration, score) per trial, lower is better
    final_values: list  # per-trial median final best objective value
    best_config: Configuration
    best_score: float
    y_hpo: float

    def to_json(self) -> str:
        doc = {
            "function_id": self.function_id,
            "y_hpo": self.y_hpo,
            "best": json.loads(self.best_config.to_json()),
            "history": [
                {"config": json.loads(c.to_json()), "score": s, "final": f}
                for (c, s), f in zip(self.history, self.final_values)
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "HpoResult":
        doc = json.loads(text)
        history = [
            (Configuration.from_doc(h["config"]), float(h["score"]))
            for h in doc["history"]
        ]
        finals = [float(h["final"]) for h in doc["history"]]
        best_idx = min(range(len(history)), key=lambda i: history[i][1])
        return cls(
            function_id=doc["function_id"],
            history=history,
            final_values=finals,
            best_config=Configuration.from_doc(doc["best"]),
            best_score=history[best_idx][1],
            y_hpo=float(doc["y_hpo"]),
        )


# -- Parzen machinery ----------------------------------------------------------

def _bandwidths(points: np.ndarray, width: float) -> np.ndarray:
    floor = _BANDWIDTH_FLOOR_FRACTION * width
    if len(points) == 1:
        return np.array([width])
    diff = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(diff, np.inf)
    return np.minimum(np.maximum(diff.min(axis=1), floor), width)


def _truncnorm_logpdf(x: np.ndarray, mus: np.ndarray, sigmas: np.ndarray, low, high):
    """log of the mixture density of truncated normal kernels at each x."""
    z = (x[:, None] - mus[None, :]) / sigmas[None, :]
    log_kernel = -0.5 * z**2 - np.log(sigmas[None, :] * math.sqrt(2.0 * math.pi))
    mass = ndtr((high - mus) / sigmas) - ndtr((low - mus) / sigmas)
    log_comp = log_kernel - np.log(np.maximum(mass, 1e-300))[None, :]
    m = log_comp.max(axis=1, keepdims=True)
    return (m + np.log(np.mean(np.exp(log_comp - m), axis=1, keepdims=True)))[:, 0]


def _truncnorm_sample(rng, mu: float, sigma: float, low: float, high: float) -> float:
    a = ndtr((low - mu) / sigma)
    b = ndtr((high - mu) / sigma)
    u = rng.uniform(a, b)
    return float(np.clip(mu + sigma * ndtri(np.clip(u, 1e-15, 1 - 1e-15)), low, high))


def _category_probs(values, choices) -> np.ndarray:
    counts = np.full(len(choices), _CATEGORY_PSEUDO_COUNT)
    index = {c: i for i, c in enumerate(choices)}
    for v in values:
        counts[index[v]] += 1.0
    return counts / counts.sum()


def tpe_optimize(
    objective,
    space,
    budget: int,
    seed: int,
    n_startup: int = N_STARTUP,
    gamma: float = GAMMA,
    n_candidates: int = N_CANDIDATES,
) -> HpoResult:
    """Minimize `objective(cfg: Configuration) -> score` over the space."""
    if budget < n_startup:
        raise ParameterError(f"budget {budget} < n_startup {n_startup}")
    rng = np.random.default_rng(derive_seed(seed, "tpe"))
    value_rows: list = []
    history: list = []

    def sample_uniform() -> dict:
        values = {}
        for dim in space:
            if isinstance(dim, ContinuousDim):
                v = rng.uniform(dim.low, dim.high)
                values[dim.name] = float(round(v)) if dim.integer else float(v)
            else:
                values[dim.name] = dim.choices[rng.integers(len(dim.choices))]
        return values

    def propose() -> dict:
        scores = np.array([s for _, s in history])
        n_good = max(1, int(math.ceil(gamma * len(scores))))
        order = np.argsort(scores, kind="stable")
        good_idx, bad_idx = order[:n_good], order[n_good:]
        if len(bad_idx) == 0:
            return sample_uniform()

        columns = []
        log_ratio = np.zeros(n_candidates)
        for dim in space:
            if isinstance(dim, ContinuousDim):
                good = np.array([value_rows[i][dim.name] for i in good_idx])
                bad = np.array([value_rows[i][dim.name] for i in bad_idx])
                bw_good = _bandwidths(good, dim.width)
                bw_bad = _bandwidths(bad, dim.width)
                draws = np.empty(n_candidates)
                for c in range(n_candidates):
                    k = int(rng.integers(len(good)))
                    v = _truncnorm_sample(rng, good[k], bw_good[k], dim.low, dim.high)
                    draws[c] = round(v) if dim.integer else v
                log_ratio += _truncnorm_logpdf(draws, good, bw_good, dim.low, dim.high)
                log_ratio -= _truncnorm_logpdf(draws, bad, bw_bad, dim.low, dim.high)
                columns.append((dim, draws))
            else:
                p_good = _category_probs(
                    [value_rows[i][dim.name] for i in good_idx], dim.choices
                )
                p_bad = _category_probs(
                    [value_rows[i][dim.name] for i in bad_idx], dim.choices
                )
                picks = rng.choice(len(dim.choices), size=n_candidates, p=p_good)
                log_ratio += np.log(p_good[picks]) - np.log(p_bad[picks])
                columns.append((dim, picks))

        winner = int(np.argmax(log_ratio))
        values = {}
        for dim, draws in columns:
            if isinstance(dim, CategoricalDim):
                values[dim.name] = dim.choices[int(draws[winner])]
            else:
                values[dim.name] = float(draws[winner])
        return values

    for trial in range(budget):
        values = sample_uniform() if trial < n_startup else propose()
        cfg = values_to_config(values)
        score = float(objective(cfg))
        value_rows.append(values)
        history.append((cfg, score))

    best_idx = min(range(len(history)), key=lambda i: history[i][1])
    return HpoResult(
        function_id="",
        history=history,
        final_values=[s for _, s in history],
        best_config=history[best_idx][0],
        best_score=history[best_idx][1],
        y_hpo=history[best_idx][1],
    )


def label_function(
    f: ObjectiveFunction,
    budget_tpe: int,
    budget_run: int,
    repetitions: int,
    seed: int,
    doe: Doe | None = None,
    restrict_to_continuous: bool = False,
    n_startup: int = N_STARTUP,
) -> HpoResult:
    """Tune one function and return its best-found configuration and history."""
    if budget_tpe <= 0 or budget_run <= 0 or repetitions <= 0:
        raise ParameterError("budgets and repetitions must be positive")
    if doe is None:
        doe = sample_doe(f, 50, derive_seed(seed, "label-doe"))
    if doe.degenerate:
        raise DegenerateFunctionError(f"{f.id}: constant objective sample")
    y_worst = doe.y_raw_max

    known = f.known_optimum
    space = config_space(restrict_to_continuous)
    traces: list = []  # per trial: list of (step_idx, step_vals, final) per repetition
    running_best = math.inf

    def objective(cfg: Configuration) -> float:
        nonlocal running_best
        trial = len(traces)
        rep_scores = np.empty(repetitions)
        rep_steps = []
        for rep in range(repetitions):
            tr = run(f, cfg, budget_run, derive_seed(seed, "run", trial, rep))
            idx, vals = tr.compress()
            rep_steps.append((idx, vals, tr.final()))
            running_best = min(running_best, tr.final())
            # provisional normalization: the final one is recomputed below
            y_opt = known if known is not None else min(running_best, y_worst - 1.0)
            rep_scores[rep] = auc_from_steps(idx, vals, budget_run, y_opt, y_worst)
        traces.append(rep_steps)
        return float(np.median(rep_scores))

    raw = tpe_optimize(
        objective, space, budget_tpe, derive_seed(seed, "tpe"), n_startup=n_startup
    )

    y_hpo = float(min(min(final for _, _, final in reps) for reps in traces))
    y_opt = float(known) if known is not None else estimate_yopt(y_hpo)
    if not y_worst > y_opt:
        raise DegenerateFunctionError(
            f"{f.id}: worst sample {y_worst} does not exceed optimum estimate {y_opt}"
        )

    # recompute every score under the final normalization so the stored
    # history is internally consistent
    history = []
    finals = []
    for (cfg, _), reps in zip(raw.history, traces):
        scores = [
            auc_from_steps(idx, vals, budget_run, y_opt, y_worst)
            for idx, vals, _ in reps
        ]
        history.append((cfg, float(np.median(scores))))
        finals.append(float(np.median([final for _, _, final in reps])))

    best_idx = min(range(len(history)), key=lambda i: history[i][1])
    return HpoResult(
        function_id=f.id,
        history=history,
        final_values=finals,
        best_config=history[best_idx][0],
        best_score=history[best_idx][1],
        y_hpo=y_hpo,
    )
