"""Exponential of large sparse matrices by filtered incremental squaring."""

from .engine import ExpmResult, IterationTrace, apply, expm, squaring_phase, taylor_phase
from .error_model import (
    ExpmPlan,
    alpha_bound,
    make_plan,
    propagate_error,
    select_params,
    taylor_remainder_bound,
)
from .estimator import SparseExpm
from .exceptions import (
    InfeasiblePlanError,
    MatrixMarketError,
    NonFiniteError,
    ResourceCapError,
)
from .filtering import FilterReport, filter_matrix
from .sparse_core import (
    BandwidthProfile,
    add,
    bandwidth,
    frobenius_norm,
    is_normal,
    permute_symmetric,
    real_bandwidth_estimate,
    sparsity,
    spgemm,
)

__version__ = "0.1.0"
