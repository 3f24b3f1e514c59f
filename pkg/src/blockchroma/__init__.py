"""Chromatic constant of dense stochastic block models and near-optimal colorings."""

__version__ = "0.1.0"

from .coloring import (
    Coloring,
    ColoringPlan,
    ColoringReport,
    PlanError,
    average_type,
    build_plan,
    dsatur,
    exact_chromatic,
    execute_plan,
    predicted_chi,
    predicted_chi_range,
    validate,
)
from .estimators import BlockColoring, ChromaticConstant, DSaturColoring, check_block_graph
from .indsets import (
    SearchBudget,
    enumerate_max_types,
    exponent_gap,
    find_typed_set,
    is_independent,
    log_expected_count,
    type_of,
)
from .model import (
    BlockModel,
    ModelError,
    PairShape,
    classify_pair,
    g_value,
    load_model,
    natural_class_size,
    region_contains,
    region_contains_many,
    safe_radius,
)
from .region import (
    BoundarySample,
    CStarResult,
    boundary_cloud,
    boundary_export,
    c_star,
    homogeneous_cstar,
    ray_exit,
    union_case_cstar,
)
from .sampler import BlockGraph, part_subgraph, sample

__all__ = [
    "BlockColoring", "BlockGraph", "BlockModel", "BoundarySample", "CStarResult",
    "ChromaticConstant", "Coloring", "ColoringPlan", "ColoringReport", "DSaturColoring",
    "ModelError", "PairShape", "PlanError", "SearchBudget", "average_type", "boundary_cloud",
    "boundary_export", "build_plan", "c_star", "check_block_graph", "classify_pair", "dsatur",
    "enumerate_max_types", "exact_chromatic", "execute_plan", "exponent_gap", "find_typed_set",
    "g_value", "homogeneous_cstar", "is_independent", "load_model", "log_expected_count",
    "natural_class_size", "part_subgraph", "predicted_chi", "predicted_chi_range", "ray_exit",
    "region_contains", "region_contains_many", "safe_radius", "sample", "type_of", "union_case_cstar", "validate",
]
