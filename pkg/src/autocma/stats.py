"""Anytime performance metric, baseline solvers, and paired significance test.

The AUC metric is the budget-normalized mean of clamped min-max-normalized
best-so-far values; lower is better. Baselines are the single best solver
(best mean score across functions) and the virtual best solver (best score
per function). One-sided Wilcoxon signed-rank p-values are exact for small
samples via the signed-rank-sum distribution and use a tie-corrected normal
approximation beyond that.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .cmaes import Configuration, ConvergenceTrace
from .errors import ParameterError

# history entries are (Configuration, score) pairs, lower score is better
TrialHistory = list


@dataclass(frozen=True)
class AucScore:
    value: float
    y_opt: float
    y_worst: float
    budget: int


def auc_values(best_so_far: np.ndarray, y_opt: float, y_worst: float) -> float:
    """Budget-normalized area under the clamped, normalized convergence curve."""
    if not y_worst > y_opt:
        raise ParameterError(f"y_worst ({y_worst}) must exceed y_opt ({y_opt})")
    vals = np.asarray(best_so_far, dtype=float)
    if vals.size == 0:
        raise ParameterError("trace must be non-empty")
    normed = np.clip((vals - y_opt) / (y_worst - y_opt), 0.0, 1.0)
    return float(normed.mean())


def auc(trace: ConvergenceTrace, y_opt: float, y_worst: float) -> AucScore:
    value = auc_values(trace.best_so_far, y_opt, y_worst)
    return AucScore(
        value=value, y_opt=y_opt, y_worst=y_worst, budget=len(trace.best_so_far)
    )


def auc_from_steps(
    step_idx: np.ndarray,
    step_vals: np.ndarray,
    budget: int,
    y_opt: float,
    y_worst: float,
) -> float:
    """AUC of a change-point-compressed non-increasing trace (exact)."""
    if not y_worst > y_opt:
        raise ParameterError(f"y_worst ({y_worst}) must exceed y_opt ({y_opt})")
    idx = np.asarray(step_idx)
    lengths = np.diff(np.append(idx, budget))
    normed = np.clip((np.asarray(step_vals) - y_opt) / (y_worst - y_opt), 0.0, 1.0)
    return float(np.sum(normed * lengths) / budget)


# -- baseline solvers ---------------------------------------------------------

@dataclass(frozen=True)
class BaselineSet:
    default_cfg: Configuration
    sbs_cfg: Configuration
    vbs_cfg: dict  # function_id -> Configuration


def select_vbs(history: TrialHistory) -> Configuration:
    """Best-found configuration of one function's history (first on ties)."""
    if not history:
        raise ParameterError("history must be non-empty")
    best_idx = min(range(len(history)), key=lambda i: history[i][1])
    return history[best_idx][0]


def select_sbs(per_function: dict) -> Configuration:
    """Configuration with the best mean score across all functions.

    A configuration not evaluated on some function receives that function's
    history-median score there (imputation), so partial coverage does not
    disqualify a configuration.
    """
    if not per_function:
        raise ParameterError("need at least one function history")
    for fid, history in per_function.items():
        if not history:
            raise ParameterError(f"history for {fid!r} is empty")

    union: list = []
    seen = set()
    for fid in sorted(per_function):
        for cfg, _ in per_function[fid]:
            if cfg not in seen:
                seen.add(cfg)
                union.append(cfg)

    fids = sorted(per_function)
    medians = {
        fid: float(np.median([s for _, s in per_function[fid]])) for fid in fids
    }
    scores_by_cfg: dict = {}
    for fid in fids:
        by_cfg: dict = {}
        for cfg, s in per_function[fid]:
            by_cfg.setdefault(cfg, []).append(s)
        scores_by_cfg[fid] = {cfg: float(np.median(v)) for cfg, v in by_cfg.items()}

    best_cfg, best_mean = None, np.inf
    for cfg in union:
        mean = float(
            np.mean([scores_by_cfg[fid].get(cfg, medians[fid]) for fid in fids])
        )
        if mean < best_mean:
            best_cfg, best_mean = cfg, mean
    return best_cfg


# -- one-sided Wilcoxon signed-rank test --------------------------------------

def _signed_ranks(diff: np.ndarray):
    """Average ranks of |d| after dropping zero differences."""
    nz = diff[diff != 0.0]
    absd = np.abs(nz)
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(len(nz))
    sorted_abs = absd[order]
    i = 0
    pos = 1
    while i < len(nz):
        j = i
        while j + 1 < len(nz) and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        avg = (pos + pos + (j - i)) / 2.0
        ranks[order[i : j + 1]] = avg
        pos += j - i + 1
        i = j + 1
    return nz, ranks


def _exact_cdf_at(w_plus_scaled: int, scaled_ranks: np.ndarray) -> float:
    """P(W+ <= w) over all sign assignments, by convolution over ranks."""
    total = int(scaled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in scaled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return float(counts[: w_plus_scaled + 1].sum() / 2.0 ** len(scaled_ranks))


_EXACT_LIMIT = 25


def wilcoxon_one_sided(a, b) -> float:
    """p-value for H1: a < b (paired, lower is better for a).

    Zero differences are dropped; ties in |d| take average ranks. Exact
    signed-rank-sum distribution when at most 25 nonzero differences remain,
    else a tie-corrected normal approximation with continuity correction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ParameterError("need two equal-length 1-d samples")
    if len(a) < 5:
        raise ParameterError(f"need at least 5 pairs, got {len(a)}")
    diff = a - b
    nz, ranks = _signed_ranks(diff)
    n = len(nz)
    if n == 0:
        return 1.0
    w_plus = float(ranks[nz > 0].sum())

    if n <= _EXACT_LIMIT:
        # average ranks are multiples of 1/2: double them to integers
        scaled = np.round(ranks * 2.0).astype(int)
        return _exact_cdf_at(int(round(w_plus * 2.0)), scaled)

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(nz), return_counts=True)
    var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    z = (w_plus + 0.5 - mean) / np.sqrt(var)
    return float(norm.cdf(z))


# -- comparison report ---------------------------------------------------------

REPORT_COLUMNS = (
    "function_id",
    "baseline",
    "median_auc_ours",
    "median_auc_baseline",
    "p_value",
    "significant_at_0.05",
)


def write_report_csv(path, rows) -> None:
    """rows: iterables matching REPORT_COLUMNS."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow(list(row))


def read_report_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != REPORT_COLUMNS:
            raise ParameterError(f"unexpected report header {header}")
        return [tuple(row) for row in reader]
