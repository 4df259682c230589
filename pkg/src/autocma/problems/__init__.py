from .base import ObjectiveFunction
from .bbob import FUNCTION_NAMES, N_FUNCTIONS, BbobFunction, make_bbob
from .mabbob import MaBbobFunction, MaBbobSpec, make_mabbob, sample_mabbob_spec

__all__ = [
    "ObjectiveFunction",
    "BbobFunction",
    "MaBbobFunction",
    "MaBbobSpec",
    "FUNCTION_NAMES",
    "N_FUNCTIONS",
    "make_bbob",
    "make_mabbob",
    "sample_mabbob_spec",
]
