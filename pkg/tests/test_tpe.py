"""Tests for the Parzen-estimator tuner and the labeling protocol."""

import numpy as np
import pytest

from autocma.cmaes import (
    LAMBDA_DOMAIN,
    LR_RANK_DOMAIN,
    LR_UNIT_DOMAIN,
    PARENT_RATIO_DOMAIN,
    SIGMA0_DOMAIN,
    default_config,
    run,
)
from autocma.ela import sample_doe
from autocma.errors import DegenerateFunctionError, ParameterError
from autocma.problems import make_bbob
from autocma.problems.base import ObjectiveFunction
from autocma.seeding import derive_seed
from autocma.stats import auc_values
from autocma.tpe import HpoResult, config_space, label_function, tpe_optimize


def test_unimodal_continuous_dimension_concentrates():
    space = config_space()
    hits = 0
    for seed in range(10):
        res = tpe_optimize(lambda cfg: (cfg.sigma0 - 0.3) ** 2, space, 100, seed)
        if abs(res.best_config.sigma0 - 0.3) <= 0.05:
            hits += 1
    assert hits >= 9


def test_startup_only_equals_random_search_and_reproduces():
    space = config_space()
    r1 = tpe_optimize(lambda cfg: cfg.sigma0, space, 20, seed=5, n_startup=20)
    r2 = tpe_optimize(lambda cfg: cfg.sigma0, space, 20, seed=5, n_startup=20)
    assert [c for c, _ in r1.history] == [c for c, _ in r2.history]
    assert r1.best_score == min(s for _, s in r1.history)


def test_categorical_objective_concentrates():
    space = config_space()
    res = tpe_optimize(
        lambda cfg: 0.0 if cfg.mirrored == "mirrored" else 1.0, space, 100, seed=3
    )
    last = [cfg.mirrored for cfg, _ in res.history[-20:]]
    assert sum(1 for m in last if m == "mirrored") / len(last) >= 0.7


def test_all_proposals_stay_in_domain():
    space = config_space()
    res = tpe_optimize(lambda cfg: cfg.parent_ratio, space, 60, seed=11)
    for cfg, _ in res.history:
        assert LAMBDA_DOMAIN[0] <= cfg.lambda_ <= LAMBDA_DOMAIN[1]
        assert isinstance(cfg.lambda_, int)
        assert PARENT_RATIO_DOMAIN[0] <= cfg.parent_ratio <= PARENT_RATIO_DOMAIN[1]
        assert SIGMA0_DOMAIN[0] <= cfg.sigma0 <= SIGMA0_DOMAIN[1]
        assert LR_UNIT_DOMAIN[0] <= cfg.lr_sigma <= LR_UNIT_DOMAIN[1]
        assert LR_RANK_DOMAIN[0] <= cfg.lr_rank_one <= LR_RANK_DOMAIN[1]
        cfg.validate()


def test_restricted_space_freezes_categoricals():
    space = config_space(restrict_to_continuous=True)
    res = tpe_optimize(lambda cfg: cfg.sigma0, space, 25, seed=2)
    for cfg, _ in res.history:
        assert cfg.active is False
        assert cfg.mirrored == "none"
        assert cfg.threshold_convergence is False
        assert cfg.weights_scheme == "default"


def test_budget_below_startup_rejected():
    with pytest.raises(ParameterError):
        tpe_optimize(lambda cfg: 0.0, config_space(), 10, seed=1, n_startup=20)


def test_best_score_is_history_minimum():
    res = tpe_optimize(lambda cfg: cfg.lr_sigma, config_space(), 40, seed=9)
    assert res.best_score == min(s for _, s in res.history)


# -- label_function ----------------------------------------------------------------

def test_single_repetition_is_median_of_one():
    f = make_bbob(1, 3, seed=4)
    doe = sample_doe(f, 20, seed=1)
    hpo = label_function(f, budget_tpe=20, budget_run=90, repetitions=1, seed=8, doe=doe)
    cfg0, score0 = hpo.history[0]
    trace = run(f, cfg0, 90, derive_seed(8, "run", 0, 0))
    expected = auc_values(trace.best_so_far, f.known_optimum, doe.y_raw_max)
    assert score0 == pytest.approx(expected, rel=1e-12)


def test_y_hpo_bounds_all_finals():
    f = make_bbob(2, 3, seed=6)
    hpo = label_function(f, budget_tpe=20, budget_run=120, repetitions=2, seed=3)
    assert hpo.y_hpo <= min(hpo.final_values) + 1e-12
    assert hpo.best_score == min(s for _, s in hpo.history)


def test_label_reproducibility():
    f = make_bbob(3, 3, seed=6)
    h1 = label_function(f, budget_tpe=20, budget_run=120, repetitions=2, seed=9)
    h2 = label_function(f, budget_tpe=20, budget_run=120, repetitions=2, seed=9)
    assert h1.to_json() == h2.to_json()


def test_label_degenerate_function_rejected():
    class Flat(ObjectiveFunction):
        def _eval_rows(self, X):
            return np.zeros(X.shape[0])

    f = Flat(id="flat", dimension=3)
    with pytest.raises(DegenerateFunctionError):
        label_function(f, budget_tpe=20, budget_run=100, repetitions=1, seed=0)


def test_hpo_json_round_trip():
    f = make_bbob(1, 3, seed=2)
    hpo = label_function(f, budget_tpe=20, budget_run=100, repetitions=2, seed=4)
    back = HpoResult.from_json(hpo.to_json())
    assert back.to_json() == hpo.to_json()
    assert back.best_config == hpo.best_config
    assert back.y_hpo == hpo.y_hpo


@pytest.mark.slow
def test_tuned_beats_default_on_sphere():
    f = make_bbob(1, 5, seed=42)
    doe = sample_doe(f, 50, seed=7)
    reps = 5
    hpo = label_function(
        f, budget_tpe=50, budget_run=2500, repetitions=reps, seed=13, doe=doe
    )
    default = default_config(5)
    default_scores = []
    for rep in range(reps):
        tr = run(f, default, 2500, derive_seed(13, "default-run", rep))
        default_scores.append(
            auc_values(tr.best_so_far, f.known_optimum, doe.y_raw_max)
        )
    assert hpo.best_score < float(np.median(default_scores))
