"""Relative-error quantile sketch with elastic compactors and online space allocation."""
from .allocator import Allocator
from .compactor import CapacityExhausted, ElasticCompactor, RelativeCompactor
from .hierarchy import Hierarchy, new_fixed_topq
from .params import ConfigError
from .sketch import RelativeSketch
from .subsketch import SubSketch

__all__ = [
    "Allocator",
    "CapacityExhausted",
    "ConfigError",
    "ElasticCompactor",
    "Hierarchy",
    "RelativeCompactor",
    "RelativeSketch",
    "SubSketch",
    "new_fixed_topq",
]
