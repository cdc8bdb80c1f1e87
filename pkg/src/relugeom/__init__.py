"""Computable geometry of fully connected ReLU layers.

Dual bases and cone apexes from layer parameters, the induced sector
partition, cone projections and exact preimages, exact enumeration and
affine canonicalization of shallow-network decision boundaries, and a
sampled boundary recursion for deeper networks.  Every closed-form
result ships with a brute-force oracle (see :mod:`relugeom.verify`).
"""

__version__ = "0.1.0"

from .boundary import (
    BoundaryPiece,
    CanonicalReduction,
    DecisionBoundary,
    IntersectionValues,
    OutputLayer,
    PulledBackHyperplane,
    canonical_boundary,
    canonical_reduction,
    enumerate_pieces,
    equivalence_check,
    intersection_values,
    normalize_output_layer,
    piece_count_oracle,
    pull_back_hyperplane,
    sample_piece,
)
from .core import (
    AffineMap,
    DualFrame,
    build_dual_frame,
    evaluate_affine,
    project_to_row_span,
)
from .errors import (
    AllNegative,
    DegenerateBias,
    DegenerateDirection,
    DimensionMismatch,
    EmptyIntersection,
    EmptyPiece,
    EnumerationLimit,
    GeometryError,
    InvalidM,
    NotContracting,
    RankDeficient,
    SchemaError,
)
from .layer import (
    PreimageSet,
    ReluLayer,
    decompose_check,
    image_of_sector,
    membership_mask,
    membership_oracle,
    preimage_of_point,
    preimage_of_sector,
    project_to_cone,
    project_with_frame,
)
from .network import (
    BoundarySampleSet,
    ComposedAffine,
    FiberRecord,
    MixingReport,
    ReluNetwork,
    canonical_structure,
    evaluate_canonical,
    evaluate_network,
    evaluate_tail,
    mixing_check,
    pull_back_boundary,
    trace_boundary,
)
from .partition import (
    DualCoordinates,
    SectorIndex,
    boundary_members,
    classify,
    closure_members,
    enumerate_sectors,
    expand,
    leq,
    near_zero_coefficients,
    sample_sector,
    sector_counts,
)

__all__ = [
    "AffineMap",
    "AllNegative",
    "BoundaryPiece",
    "BoundarySampleSet",
    "CanonicalReduction",
    "ComposedAffine",
    "DecisionBoundary",
    "DegenerateBias",
    "DegenerateDirection",
    "DimensionMismatch",
    "DualCoordinates",
    "DualFrame",
    "EmptyIntersection",
    "EmptyPiece",
    "EnumerationLimit",
    "FiberRecord",
    "GeometryError",
    "IntersectionValues",
    "InvalidM",
    "MixingReport",
    "NotContracting",
    "OutputLayer",
    "PreimageSet",
    "PulledBackHyperplane",
    "RankDeficient",
    "ReluLayer",
    "ReluNetwork",
    "SchemaError",
    "SectorIndex",
    "boundary_members",
    "build_dual_frame",
    "canonical_boundary",
    "canonical_reduction",
    "canonical_structure",
    "classify",
    "closure_members",
    "decompose_check",
    "enumerate_pieces",
    "enumerate_sectors",
    "equivalence_check",
    "evaluate_affine",
    "evaluate_canonical",
    "evaluate_network",
    "evaluate_tail",
    "expand",
    "image_of_sector",
    "intersection_values",
    "leq",
    "membership_mask",
    "membership_oracle",
    "mixing_check",
    "near_zero_coefficients",
    "normalize_output_layer",
    "piece_count_oracle",
    "preimage_of_point",
    "preimage_of_sector",
    "project_to_cone",
    "project_to_row_span",
    "project_with_frame",
    "pull_back_boundary",
    "pull_back_hyperplane",
    "sample_piece",
    "sample_sector",
    "sector_counts",
    "trace_boundary",
]
