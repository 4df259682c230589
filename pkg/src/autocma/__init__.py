"""Landscape-aware automated configuration of modular CMA-ES.

Trains a multi-output mixed regression/classification network on
(landscape features -> best CMA-ES configuration) pairs harvested from
screened randomly generated functions, and predicts near-optimal
configurations for unseen black-box problems.
"""

from .cmaes import Configuration, ConvergenceTrace, default_config, resolve_auto_rates, run
from .ela import FEATURE_NAMES, Doe, ElaVector, compute_ela, sample_doe
from .nets import NnArchitecture, NnModel, decode, encode, grid_search, predict, train
from .pipeline import PipelineConfig, run_all
from .problems import MaBbobSpec, ObjectiveFunction, make_bbob, make_mabbob
from .rgf import ExprTree, RgfGenParams, deserialize_tree, generate_rgf, serialize_tree
from .selection import SelectionVerdict, estimate_yopt, ranking_ambiguity, screen
from .stats import auc, select_sbs, select_vbs, wilcoxon_one_sided
from .tpe import HpoResult, label_function, tpe_optimize

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "ConvergenceTrace",
    "Doe",
    "ElaVector",
    "ExprTree",
    "FEATURE_NAMES",
    "HpoResult",
    "MaBbobSpec",
    "NnArchitecture",
    "NnModel",
    "ObjectiveFunction",
    "PipelineConfig",
    "RgfGenParams",
    "SelectionVerdict",
    "auc",
    "compute_ela",
    "decode",
    "default_config",
    "deserialize_tree",
    "encode",
    "estimate_yopt",
    "generate_rgf",
    "grid_search",
    "label_function",
    "make_bbob",
    "make_mabbob",
    "predict",
    "ranking_ambiguity",
    "resolve_auto_rates",
    "run",
    "run_all",
    "sample_doe",
    "screen",
    "select_sbs",
    "select_vbs",
    "serialize_tree",
    "tpe_optimize",
    "train",
    "wilcoxon_one_sided",
]
