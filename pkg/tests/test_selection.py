"""Tests for the training-function screen."""

import numpy as np
import pytest

from autocma.errors import ParameterError
from autocma.selection import (
    estimate_yopt,
    kendall_tau_b,
    optimum_outlier,
    ranking_ambiguity,
    screen,
)
from autocma.tpe import HpoResult
from autocma.cmaes import default_config, resolve_auto_rates


@pytest.mark.parametrize(
    "y,expected",
    [
        (7.3, 7.0),
        (-3.2, -4.0),
        (57.2, 50.0),
        (-1234.5, -1300.0),
        (0.0, 0.0),
        (9.999, 9.0),
        (10.0, 10.0),
        (99.9, 90.0),
        (100.0, 100.0),
        (123456.7, 120000.0),
        (-0.5, -1.0),
    ],
)
def test_estimate_yopt_hand_cases(y, expected):
    assert estimate_yopt(y) == expected


def test_estimate_yopt_never_exceeds_input():
    rng = np.random.default_rng(0)
    values = np.concatenate(
        [rng.uniform(-10, 10, 300), rng.uniform(-1e6, 1e6, 300), [0.0, -10.0, 10.0]]
    )
    for y in values:
        assert estimate_yopt(float(y)) <= y


def test_estimate_yopt_idempotent_below_hundred():
    rng = np.random.default_rng(1)
    for y in rng.uniform(-99.9, 99.9, 500):
        est = estimate_yopt(float(y))
        assert estimate_yopt(est) == est


def test_estimate_yopt_rejects_non_finite():
    with pytest.raises(ParameterError):
        estimate_yopt(float("nan"))
    with pytest.raises(ParameterError):
        estimate_yopt(float("inf"))


def test_tau_strictly_increasing_scores():
    assert ranking_ambiguity([0.1, 0.2, 0.3, 0.4]) == 1.0


def test_tau_single_tie_pair():
    assert ranking_ambiguity([1.0, 1.0, 2.0]) == pytest.approx(2 / np.sqrt(6))


def test_tau_all_tied_is_zero():
    assert ranking_ambiguity([5.0, 5.0, 5.0, 5.0]) == 0.0


def _brute_force_tau_b(x, y):
    """O(n^2) concordant/discordant pair counting with tie correction."""
    n = len(x)
    conc = disc = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            a = int(x[i] > x[j]) - int(x[i] < x[j])
            b = int(y[i] > y[j]) - int(y[i] < y[j])
            if a == 0:
                ties_x += 1
            if b == 0:
                ties_y += 1
            if a * b > 0:
                conc += 1
            elif a * b < 0:
                disc += 1
    n0 = n * (n - 1) / 2
    denom = np.sqrt((n0 - ties_x) * (n0 - ties_y))
    return 0.0 if denom == 0 else (conc - disc) / denom


def test_tau_matches_brute_force_on_random_tied_rankings():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 60))
        x = rng.integers(0, max(2, n // 2), n).astype(float)
        y = rng.integers(0, max(2, n // 2), n).astype(float)
        got = kendall_tau_b(x, y)
        want = _brute_force_tau_b(x, y)
        assert got == pytest.approx(want, abs=1e-12)


def test_outlier_z_examples():
    assert optimum_outlier(10.0, [9, 10, 11, 10, 10]) == 0.0
    # sample std exactly 1: deviations (-1, -1, 0, 1, 1), n-1 = 4
    vals = [9.0, 9.0, 10.0, 11.0, 11.0]
    assert np.std(vals, ddof=1) == 1.0
    assert optimum_outlier(6.0, vals) == pytest.approx(-4.0)
    assert abs(optimum_outlier(12.0, vals)) <= 3.0  # mean + 2 std: not an outlier


def test_outlier_preconditions():
    with pytest.raises(ParameterError):
        optimum_outlier(1.0, [1.0, 2.0])
    with pytest.raises(ParameterError):
        optimum_outlier(1.0, [2.0, 2.0, 2.0])


def _make_hpo(scores, finals, y_hpo):
    cfg = resolve_auto_rates(default_config(5), 5)
    history = [(cfg, float(s)) for s in scores]
    best = int(np.argmin(scores))
    return HpoResult(
        function_id="synthetic",
        history=history,
        final_values=[float(v) for v in finals],
        best_config=cfg,
        best_score=float(scores[best]),
        y_hpo=float(y_hpo),
    )


def test_screen_accepts_clear_ranking():
    rng = np.random.default_rng(3)
    scores = np.sort(rng.uniform(0.1, 0.9, 40))
    finals = rng.normal(10.0, 1.0, 40)
    hpo = _make_hpo(scores, finals, y_hpo=float(np.mean(finals)))
    verdict = screen(hpo)
    assert verdict.accepted and not verdict.ambiguous and not verdict.outlier


def test_screen_rejects_mostly_tied_scores():
    rng = np.random.default_rng(4)
    scores = np.concatenate([np.full(36, 0.5), rng.uniform(0.4, 0.6, 4)])
    finals = rng.normal(10.0, 1.0, 40)
    hpo = _make_hpo(scores, finals, y_hpo=float(np.mean(finals)))
    verdict = screen(hpo)
    assert verdict.ambiguous and not verdict.accepted
    assert any("ambiguous" in r for r in verdict.reasons)


def test_screen_rejects_outlier_optimum():
    rng = np.random.default_rng(5)
    scores = np.sort(rng.uniform(0.1, 0.9, 40))
    finals = rng.normal(10.0, 1.0, 40)
    y_hpo = float(np.mean(finals) - 5.0 * np.std(finals, ddof=1))
    hpo = _make_hpo(scores, finals, y_hpo=y_hpo)
    verdict = screen(hpo)
    assert verdict.outlier and not verdict.accepted
    assert any("outlier" in r for r in verdict.reasons)


def test_screen_verdict_invariants():
    rng = np.random.default_rng(6)
    for trial in range(20):
        scores = rng.uniform(0, 1, 30)
        finals = rng.normal(0, 1, 30)
        hpo = _make_hpo(scores, finals, y_hpo=float(finals.min()))
        v = screen(hpo)
        assert v.accepted == (not v.ambiguous and not v.outlier)
        assert v.ambiguous == (v.kendall_tau < 0.9)
        assert -1.0 <= v.kendall_tau <= 1.0


def test_screen_is_deterministic():
    rng = np.random.default_rng(8)
    scores = rng.uniform(0, 1, 25)
    finals = rng.normal(5, 2, 25)
    hpo = _make_hpo(scores, finals, y_hpo=float(finals.min()))
    assert screen(hpo) == screen(hpo)
