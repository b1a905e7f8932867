"""spacetime-pspline package.

Tensor-product p-spline smoothing of spatiotemporal well data with Bayesian
and criterion-based selection of the smoothing parameter, plus a simulation
benchmark that compares the selection methods.
"""

from spacetime_pspline.data_model import (
    Dataset,
    HullRegion,
    Observation,
    convex_hull_region,
    load_csv,
)
from spacetime_pspline.decomposition import DecomposedModel, decompose
from spacetime_pspline.enums import (
    BoundaryCondition,
    Criterion,
    CVMode,
    LambdaPrior,
    Method,
    Transform,
)
from spacetime_pspline.exceptions import (
    BenchmarkError,
    ConfigurationError,
    CriterionUndefinedError,
    DataError,
    DegeneracyError,
    DomainError,
    NumericalError,
    PsplineError,
    SchemaError,
    SingularityError,
    StabilityError,
    UnidentifiableNullSpaceError,
    UnsupportedCombinationError,
)
from spacetime_pspline.logging_config import (
    ProgressLogFilter,
    add_progress_filter,
    configure_logging,
    get_log_levels,
    get_logger,
    set_log_level,
)
from spacetime_pspline.predict import (
    PredictionGrid,
    predict_grid,
    predict_points,
    predictive_sd,
)
from spacetime_pspline.selection import (
    FitResult,
    LambdaGrid,
    PriorConfig,
    SelectionResult,
    SpatiotemporalSmoother,
    select,
)
from spacetime_pspline.splines import TensorBasisSpec, difference_penalty, tensor_design

__version__ = "0.1.0"

__all__ = [
    # Data
    "Dataset",
    "Observation",
    "HullRegion",
    "load_csv",
    "convex_hull_region",
    # Basis and decomposition
    "TensorBasisSpec",
    "tensor_design",
    "difference_penalty",
    "DecomposedModel",
    "decompose",
    # Selection and prediction
    "SpatiotemporalSmoother",
    "FitResult",
    "SelectionResult",
    "LambdaGrid",
    "PriorConfig",
    "select",
    "PredictionGrid",
    "predict_grid",
    "predict_points",
    "predictive_sd",
    # Enumerations
    "Transform",
    "LambdaPrior",
    "Criterion",
    "CVMode",
    "Method",
    "BoundaryCondition",
    # Errors
    "PsplineError",
    "DataError",
    "SchemaError",
    "DomainError",
    "DegeneracyError",
    "ConfigurationError",
    "UnsupportedCombinationError",
    "NumericalError",
    "UnidentifiableNullSpaceError",
    "SingularityError",
    "StabilityError",
    "CriterionUndefinedError",
    "BenchmarkError",
    # Logging utilities
    "configure_logging",
    "get_logger",
    "set_log_level",
    "get_log_levels",
    "add_progress_filter",
    "ProgressLogFilter",
]
