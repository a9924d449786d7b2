"""Asymptotics, robustness indices, and fitting for linearly structured
covariance matrices."""

from .errors import (
    ConditionViolatedError,
    DegenerateScaleError,
    IllConditionedError,
    InvalidArgumentError,
    NotPositiveDefiniteError,
    QuadratureError,
    StructCovError,
    StructuralRankError,
    UnsupportedSamplerError,
)
from .linalg import (
    PdsMatrix,
    SymMatrix,
    commutation_matrix,
    duplication_matrix,
    is_pds,
    symmetrize,
    unvec,
    unvech,
    vec,
    vech,
)
from .structure import (
    LinearStructure,
    compound_symmetry,
    custom,
    diagonal,
    load_structure,
    make_structure,
    unstructured,
    variance_components,
)
from .weights import (
    RadialCompanions,
    RhoFunction,
    WeightTriple,
    biweight,
    gaussian_ml,
    m_estimator,
    radial_companions,
    s_rho,
)
from .spherical import SphericalLaw, gaussian_law
from .asymptotics import (
    AsymptoticScalars,
    LimitCovariances,
    biweight_scalars,
    breakdown_for_cutoff,
    consistency_constant,
    cutoff_for_breakdown,
    delta_method_variance,
    deltas,
    direction_jacobian,
    gammas,
    gaussian_ml_scalars,
    limit_covariances,
    regression_scalars,
    scale_jacobian,
    scale_scalar,
    shape_jacobian,
    sigma12,
)
from .influence import (
    GesIndices,
    InfluenceWeights,
    ges_indices,
    if_homogeneous,
    if_structured,
    influence_weights,
    ml_influence_weights,
)
from .estimators import (
    Dataset,
    FitOptions,
    FitResult,
    dataset_from_csv,
    dataset_from_json,
    fit,
    load_dataset,
    psi_residual,
)
from .simulate import (
    EstimatorLimitReport,
    RadialProjectionReport,
    estimator_limit_experiment,
    gaussian_designs,
    radial_projection_experiment,
    report_to_dict,
)

__version__ = "0.1.0"
