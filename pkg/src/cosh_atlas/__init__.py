"""Escape-speed atlas for ``f(z) = lam * cosh(z)**q``."""

from .classifier import (
    ClassificationVerdict,
    ClassifyParams,
    Mode,
    Status,
    classify,
    classify_many,
    find_fixed_points_real,
)
from .dynamics import PRESETS, FunctionSpec, evaluate, max_modulus_schedule, step
from .tower import TowerReal

__all__ = [
    "ClassificationVerdict",
    "ClassifyParams",
    "FunctionSpec",
    "Mode",
    "PRESETS",
    "Status",
    "TowerReal",
    "classify",
    "classify_many",
    "evaluate",
    "find_fixed_points_real",
    "max_modulus_schedule",
    "step",
]
__version__ = "0.1.0"
