from .doe import Doe, latin_hypercube, sample_doe
from .features import FEATURE_NAMES, ElaVector, compute_ela
from .preprocess import (
    FeatureScaler,
    apply_scaler,
    fit_scaler,
    prune_correlated,
    read_feature_csv,
    read_manifest,
    scale_rows,
    write_feature_csv,
    write_manifest,
)

__all__ = [
    "Doe",
    "ElaVector",
    "FeatureScaler",
    "FEATURE_NAMES",
    "apply_scaler",
    "compute_ela",
    "fit_scaler",
    "latin_hypercube",
    "prune_correlated",
    "read_feature_csv",
    "read_manifest",
    "sample_doe",
    "scale_rows",
    "write_feature_csv",
    "write_manifest",
]
