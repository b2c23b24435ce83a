"""Regression discontinuity estimation with one and two running variables."""

__version__ = "0.1.0"

from ._backend import available as available_backends, name as backend_name, set_backend
from .boundary import (
    PAPAY_BASIS,
    PapayFit,
    ZajoncConfig,
    build_boundary_grid,
    flexible_boundary_curve,
    papay_curve,
    papay_effect,
    papay_fit,
    window_select,
    zajonc_bandwidth,
    zajonc_curve,
    zajonc_point,
)
from .classic import MultiCutoffResult, centering_rd, centering_score, conditional_rd, multicutoff_rd
from .data import (
    IDENTITY_RULE,
    AssignmentRule,
    BoundaryCurve,
    BoundaryGrid,
    Dataset,
    RdEstimate,
    eligibility,
    validate_and_normalize,
)
from .dgp import DgpConfig, TauProfile, generate, true_tau
from .engine import (
    BandwidthPair,
    KernelKind,
    LocalFit,
    discontinuity,
    fuzzy_discontinuity,
    kernel_weight,
    local_linear_side,
    rule_of_thumb,
    select_bandwidth,
    sharp_discontinuity,
    wls_solve,
)
from .errors import (
    ConfigError,
    DataError,
    EmptyDatasetError,
    EstimationError,
    InsufficientDataError,
    RDError,
    SingularFitError,
    WeakFirstStageError,
)
from .io import load_csv, read_csv, write_csv
