"""Compile edge-to-edge NCL instances into orthogonal searchlight instances."""
from .checks import BIT_CONSTANT, BIT_OFFSET, CheckReport, CheckResult, bit_bound, structural_checks
from .fixtures import smallest_instance, two_vertex_instance
from .layout import LayoutParams, ReductionOutput, reduce, staircase_heights
from .metadata import GadgetMetadata
from .rects import LayoutError
from .witness import witness_schedule

__all__ = [
    "BIT_CONSTANT", "BIT_OFFSET", "CheckReport", "CheckResult", "GadgetMetadata", "LayoutError", "LayoutParams", "ReductionOutput",
    "bit_bound", "reduce", "smallest_instance", "staircase_heights", "structural_checks",
    "two_vertex_instance", "witness_schedule",
]
