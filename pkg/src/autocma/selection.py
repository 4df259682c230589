"""Screen deciding which generated functions make good training problems.

Three tests run on the tuning history of one function: the optimum estimate
rounds the best value found down to a scale-aware grid, a tie-tolerant
Kendall rank correlation against a strict ranking detects ambiguous
configuration rankings, and a z-score flags optima that only outlier runs
reach. A function is accepted only if it is neither ambiguous nor an outlier.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

AMBIGUITY_THRESHOLD = 0.9
OUTLIER_Z = 3.0
DEFAULT_TIE_TOLERANCE = 1e-6


def estimate_yopt(y_hpo: float) -> float:
    """Round the best value found down to the nearest lower integer or power-of-ten grid."""
    if not math.isfinite(y_hpo):
        raise ParameterError(f"y_hpo must be finite, got {y_hpo}")
    mag = abs(y_hpo)
    if mag < 10.0:
        return float(math.floor(y_hpo))
    if mag < 100.0:
        return float(math.floor(y_hpo / 10.0) * 10.0)
    p = math.floor(math.log10(mag)) - 1
    scale = 10.0**p
    return float(math.floor(y_hpo / scale) * scale)


def _tied_group_ids(scores: np.ndarray, tie_tolerance: float) -> np.ndarray:
    """Group id per element: adjacent sorted scores within tolerance chain into one tie group."""
    order = np.argsort(scores, kind="stable")
    svals = scores[order]
    group = np.empty(len(scores), dtype=int)
    gid = 0
    group[order[0]] = 0
    for k in range(1, len(scores)):
        if svals[k] - svals[k - 1] > tie_tolerance:
            gid += 1
        group[order[k]] = gid
    return group


def kendall_tau_b(x: np.ndarray, y: np.ndarray) -> float:
    """Tie-corrected Kendall rank correlation of two rank vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(n, k=1)
    prod = dx[iu] * dy[iu]
    concordant = float(np.sum(prod > 0))
    discordant = float(np.sum(prod < 0))
    n0 = n * (n - 1) / 2.0
    n1 = float(np.sum(dx[iu] == 0))
    n2 = float(np.sum(dy[iu] == 0))
    denom = math.sqrt((n0 - n1) * (n0 - n2))
    if denom == 0.0:
        return 0.0
    return (concordant - discordant) / denom


def ranking_ambiguity(scores, tie_tolerance: float = DEFAULT_TIE_TOLERANCE) -> float:
    """Kendall tau-b between the tie-tolerant ranking and a strict input-order ranking."""
    scores = np.asarray(scores, dtype=float)
    if len(scores) < 2:
        raise ParameterError("need at least 2 scores")
    tied = _tied_group_ids(scores, tie_tolerance)
    # strict ranking: sort by score, breaking ties by input order
    strict = np.empty(len(scores), dtype=int)
    strict[np.argsort(scores, kind="stable")] = np.arange(len(scores))
    return kendall_tau_b(tied, strict)


def optimum_outlier(y_opt_found: float, final_values) -> float:
    """Standard score of the found optimum within the per-configuration finals."""
    finals = np.asarray(final_values, dtype=float)
    if len(finals) < 3:
        raise ParameterError("need at least 3 final values")
    std = float(finals.std(ddof=1))
    if std <= 0.0:
        raise ParameterError("zero standard deviation: outlier test undefined")
    return float((y_opt_found - finals.mean()) / std)


@dataclass(frozen=True)
class SelectionVerdict:
    y_opt: float
    kendall_tau: float
    z_score: float
    ambiguous: bool
    outlier: bool
    accepted: bool
    reasons: tuple = field(default_factory=tuple)


def screen(hpo, tie_tolerance: float = DEFAULT_TIE_TOLERANCE) -> SelectionVerdict:
    """Compose the three tests on one completed tuning result."""
    scores = np.asarray([s for _, s in hpo.history], dtype=float)
    finals = np.asarray(hpo.final_values, dtype=float)
    y_opt = estimate_yopt(hpo.y_hpo)

    tau = ranking_ambiguity(scores, tie_tolerance)
    ambiguous = tau < AMBIGUITY_THRESHOLD

    reasons = []
    std = float(finals.std(ddof=1)) if len(finals) >= 2 else 0.0
    if len(finals) >= 3 and std > 0.0:
        z = optimum_outlier(hpo.y_hpo, finals)
        outlier = abs(z) > OUTLIER_Z
    else:
        # degenerate finals: the ambiguity test is what rejects such functions
        z = 0.0
        outlier = False
        reasons.append("outlier test skipped: zero spread in final values")

    if ambiguous:
        reasons.append(f"ambiguous ranking: tau {tau:.4f} < {AMBIGUITY_THRESHOLD}")
    if outlier:
        reasons.append(f"optimum is an outlier: |z| {abs(z):.2f} > {OUTLIER_Z}")

    return SelectionVerdict(
        y_opt=y_opt,
        kendall_tau=float(tau),
        z_score=float(z),
        ambiguous=ambiguous,
        outlier=outlier,
        accepted=not ambiguous and not outlier,
        reasons=tuple(reasons),
    )


VERDICT_COLUMNS = ("function_id", "y_opt", "tau", "z", "accepted", "reasons")


def write_verdict_csv(path, entries) -> None:
    """entries: iterable of (function_id, SelectionVerdict)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(VERDICT_COLUMNS)
        for fid, v in entries:
            writer.writerow(
                [
                    fid,
                    repr(v.y_opt),
                    repr(v.kendall_tau),
                    repr(v.z_score),
                    int(v.accepted),
                    "; ".join(v.reasons),
                ]
            )
