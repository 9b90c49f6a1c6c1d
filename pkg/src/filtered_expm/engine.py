"""Filtered Taylor start plus filtered incremental squaring.

The exponential is represented as ``I + T`` with the identity kept
implicit.  ``T`` is first built as a filtered Taylor sum of ``H * 2**-N``
and then advanced ``N`` times by ``T <- 2T + T @ T``, each step followed by
:func:`~filtered_expm.filtering.filter_matrix` with the planned budget.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import canonicalize, check_square_sparse, check_tolerance
from .error_model import ExpmPlan, make_plan
from .exceptions import ResourceCapError
from .filtering import FilterReport, filter_matrix
from .sparse_core import (
    BYTES_PER_ENTRY,
    BandwidthProfile,
    add,
    bandwidth,
    frobenius_norm,
    identity,
    is_normal,
    spgemm,
)

__all__ = [
    "TaylorStep",
    "SquaringStep",
    "IterationTrace",
    "ExpmResult",
    "taylor_phase",
    "squaring_phase",
    "expm",
    "apply",
    "THRESHOLD_MODES",
]

THRESHOLD_MODES = ("absolute", "scaled")
DEFAULT_E_R = 0.1


@dataclass(frozen=True)
class TaylorStep:
    index: int
    nnz: int
    bandwidth: BandwidthProfile
    threshold: float
    report: FilterReport | None
    zero: bool
    skipped: bool = False


@dataclass(frozen=True)
class SquaringStep:
    index: int
    nnz: int
    bandwidth: BandwidthProfile
    threshold: float
    report: FilterReport | None
    norm: float


@dataclass
class IterationTrace:
    """Per-term and per-squaring diagnostics of one run."""

    taylor: list = field(default_factory=list)
    squaring: list = field(default_factory=list)

    @property
    def M_eff(self):
        """Index of the last nonzero Taylor term (0 if all vanish)."""
        last = 0
        for step in self.taylor:
            if not step.zero:
                last = step.index
        return last

    def rows(self):
        """Flat diagnostic rows, one per Taylor term and squaring step."""
        out = []
        for phase, steps in (("taylor", self.taylor), ("squaring", self.squaring)):
            for s in steps:
                rep = s.report
                out.append(
                    {
                        "phase": phase,
                        "step": s.index,
                        "nnz": s.nnz,
                        "bandwidth_l": s.bandwidth.l,
                        "filter_threshold": s.threshold,
                        "dropped_norm": rep.dropped_norm if rep else 0.0,
                        "filter_iterations": rep.iterations if rep else 0,
                    }
                )
        return out


@dataclass
class ExpmResult:
    """Result of :func:`expm`; the exponential is ``I + t_hat``."""

    t_hat: object
    plan: ExpmPlan
    trace: IterationTrace
    norm: float = 0.0
    normal: bool = True

    @property
    def n(self):
        return self.t_hat.shape[0]

    def materialize(self):
        """Explicit sparse ``I + t_hat``."""
        return add(identity(self.n), self.t_hat)

    def apply(self, X):
        return apply(self, X)


def _check_cap(A, mem_cap, what):
    if mem_cap is None:
        return
    need = A.nnz * BYTES_PER_ENTRY
    if need > mem_cap:
        raise ResourceCapError(
            f"{what}: {A.nnz} entries (~{need} bytes) exceed memory cap {mem_cap} bytes",
            predicted_bytes=need,
            cap_bytes=mem_cap,
        )


def _shifted_norm(T):
    # ||I + T||_F without changing T
    return frobenius_norm(add(identity(T.shape[0]), T))


def taylor_phase(H0, plan, *, e_r=DEFAULT_E_R, threshold_mode="absolute", filtering=True,
                 mem_cap=None):
    """Filtered Taylor sum ``T0 = S_1 + ... + S_M`` with ``S_i = S_{i-1} H0 / i``.

    ``S_1 = H0`` is kept exactly; later terms are filtered with the
    plan's Taylor budget.  The loop stops as soon as a filtered term is the
    zero matrix, since every later term would vanish too.

    Returns
    -------
    T0 : scipy.sparse.csr_array
    steps : list of TaylorStep
        Exactly ``plan.M`` entries; terms after an early exit are marked
        ``skipped``.
    """
    M = plan.M
    steps = []
    if M == 0:
        return add(H0, H0, 0.0, 0.0), steps
    eps = plan.eps_g_taylor if filtering else 0.0
    if filtering and threshold_mode == "scaled":
        eps *= _shifted_norm(H0)
    S = H0
    T = H0
    steps.append(TaylorStep(1, S.nnz, bandwidth(S), 0.0, None, S.nnz == 0))
    i = 2
    while i <= M and S.nnz:
        candidate = canonicalize(spgemm(S, H0) / i)
        _check_cap(candidate, mem_cap, f"Taylor term {i}")
        S, report = filter_matrix(candidate, eps, e_r)
        steps.append(TaylorStep(i, S.nnz, bandwidth(S), eps, report, S.nnz == 0))
        if S.nnz:
            T = add(T, S)
        i += 1
    zero_profile = BandwidthProfile(0, 0, 0)
    for j in range(i, M + 1):
        steps.append(TaylorStep(j, 0, zero_profile, eps, None, True, skipped=True))
    return T, steps


def squaring_phase(T0, plan, *, e_r=DEFAULT_E_R, threshold_mode="absolute", filtering=True,
                   mem_cap=None):
    """Advance ``T <- 2T + T @ T`` for ``plan.N`` steps with filtering.

    With all budgets zero this is exactly the unfiltered incremental
    squaring.

    Returns
    -------
    TN : scipy.sparse.csr_array
    steps : list of SquaringStep
    """
    T = T0
    steps = []
    for i in range(1, plan.N + 1):
        candidate = add(T, spgemm(T, T), 2.0, 1.0)
        _check_cap(candidate, mem_cap, f"squaring step {i}")
        eps = plan.eps_g_squaring[i - 1] if filtering else 0.0
        if filtering and threshold_mode == "scaled":
            eps *= _shifted_norm(candidate)
        T, report = filter_matrix(candidate, eps, e_r)
        steps.append(
            SquaringStep(i, T.nnz, bandwidth(T), eps, report, frobenius_norm(T))
        )
    return T, steps


def expm(
    H,
    eps_tol=1e-16,
    *,
    e_r=DEFAULT_E_R,
    normal="auto",
    threshold_mode="absolute",
    filtering=True,
    normal_tol=1e-12,
    mem_cap=None,
):
    """Exponential of a sparse matrix as ``I + T`` with certified filtering.

    Parameters
    ----------
    H : sparse matrix or array_like
        Real square input with finite entries.
    eps_tol : float
        Target relative error (Frobenius), at least the unit roundoff.
    e_r : float
        Slack passed to every filter call.
    normal : {"auto", True, False}
        Normality used to pick the filter budget fraction; ``"auto"``
        tests it with :func:`~filtered_expm.sparse_core.is_normal`.
    threshold_mode : {"absolute", "scaled"}
        ``"absolute"`` uses the planned budgets as absolute Frobenius
        bounds.  ``"scaled"`` multiplies each by ``||I + T||_F`` of the
        matrix being filtered.
    filtering : bool
        ``False`` forces every budget to zero (plain incremental squaring).
    normal_tol : float
        Relative tolerance of the normality test.
    mem_cap : int, optional
        Byte cap on any intermediate matrix, checked before each filter
        call.

    Returns
    -------
    ExpmResult

    Raises
    ------
    InfeasiblePlanError
        If no (M, N) meets ``eps_tol``.
    NonFiniteError
        If ``H`` has NaN or infinite entries.
    ResourceCapError
        If an intermediate exceeds ``mem_cap``.
    """
    if threshold_mode not in THRESHOLD_MODES:
        raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")
    if e_r <= 0:
        raise ValueError("e_r must be positive")
    eps_tol = check_tolerance(eps_tol)
    H = check_square_sparse(H, name="H")
    norm = frobenius_norm(H)
    if normal == "auto":
        normal = is_normal(H, normal_tol)
    normal = bool(normal)
    plan = make_plan(norm, eps_tol, normal)
    H0 = canonicalize(H * math.ldexp(1.0, -plan.N))
    opts = dict(e_r=e_r, threshold_mode=threshold_mode, filtering=filtering, mem_cap=mem_cap)
    T0, taylor_steps = taylor_phase(H0, plan, **opts)
    TN, squaring_steps = squaring_phase(T0, plan, **opts)
    trace = IterationTrace(taylor_steps, squaring_steps)
    return ExpmResult(TN, plan, trace, norm=norm, normal=normal)


def apply(result, X):
    """Compute ``(I + t_hat) @ X`` for a dense vector or column block."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != result.n:
        raise ValueError(f"dimension mismatch: expected {result.n} rows, got {X.shape[0]}")
    return X + result.t_hat @ X
