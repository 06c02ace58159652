"""Trace-driven simulator for the access-to-miss correlation (AMC) prefetcher."""

from .core import Access, Region, RegionDescriptor, RegionMap, Translator, classify, translate
from .experiment import ExperimentSpec, ReportRow, compare, run_experiment, spec_from_dict, sweep_miss_size

__version__ = "0.1.0"

__all__ = [
    "Access",
    "ExperimentSpec",
    "Region",
    "RegionDescriptor",
    "RegionMap",
    "ReportRow",
    "Translator",
    "classify",
    "compare",
    "run_experiment",
    "spec_from_dict",
    "sweep_miss_size",
    "translate",
]
