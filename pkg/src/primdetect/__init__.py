"""Detect the primitive algebraic curves and surfaces behind parametric CAD patches."""
from .calibration import CalibrationProfile, calibrate, calibrate_eta, calibrate_xi
from .clustering import (
    ClusterPartition,
    DegreePartition,
    DissimilarityMatrix,
    MergeTrace,
    agglomerate,
    assemble_dissimilarity_matrix,
    complete_linkage,
    detect_primitives,
    dissimilarity,
    estimate_degree,
    lambda_star,
    misclassification_rate,
    partition_by_degree,
    representation_error,
)
from .errors import (
    DegreeOverflowError,
    DomainError,
    InsufficientSamplesError,
    InvalidInputError,
    InvalidTransformError,
    NumericalError,
    PreconditionError,
    PrimDetectError,
    UnsupportedDegreeError,
)
from .geometry import (
    AffineMap,
    CloudDataset,
    CompositeCurve,
    LabeledDataset,
    Patch,
    PointCloud,
    add_noise,
    evaluate_patch,
    generate_conic_family,
    generate_gear,
    generate_quadric_surfaces,
    rescale_to_unit_box,
    sample_patch,
    transform_patch,
)
from .implicitization import (
    ImplicitResult,
    MonomialBasis,
    approximate_implicitize,
    build_basis,
    build_collocation,
    evaluate_implicit,
    sigma_min,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
