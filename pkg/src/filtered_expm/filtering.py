"""Adaptive drop-tolerance filtering with a certified Frobenius budget."""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._validation import canonicalize
from .sparse_core import _fro_values

__all__ = ["FilterReport", "filter_matrix", "MAX_PASSES"]

logger = logging.getLogger(__name__)

MAX_PASSES = 64


@dataclass(frozen=True)
class FilterReport:
    """Outcome of one :func:`filter_matrix` call.

    ``thresholds`` holds the drop threshold of every pass in order.
    ``capped`` is set only if the pass limit fired and the sorted fallback
    was used (never expected in practice).
    """

    iterations: int
    thresholds: tuple
    dropped_norm: float
    dropped_count: int
    kept_count: int
    capped: bool = False


def filter_matrix(A, eps_g, e_r=0.1, max_passes=MAX_PASSES):
    """Drop near-zero entries while keeping ``||A - A_f||_F <= eps_g * (1 + e_r)``.

    Each pass moves entries with magnitude strictly above the current
    threshold out of the residual.  The first threshold is ``eps_g``; after
    each pass it is rescaled by ``eps_g / ||residual||``, so it shrinks
    geometrically until the residual fits the budget.  Kept entries are
    bit-identical copies of the input.

    Parameters
    ----------
    A : scipy.sparse.csr_array
        Canonical input.
    eps_g : float
        Frobenius budget for the dropped mass; ``0`` disables filtering.
    e_r : float
        Relative slack on the budget, ``e_r > 0``.
    max_passes : int
        Safety limit.  If it is reached, the remaining residual is
        trimmed by sorted magnitude so the certificate still holds.

    Returns
    -------
    filtered : scipy.sparse.csr_array
    report : FilterReport
    """
    if e_r <= 0:
        raise ValueError(f"e_r must be positive, got {e_r!r}")
    if eps_g < 0:
        raise ValueError(f"eps_g must be nonnegative, got {eps_g!r}")
    nnz = A.nnz
    if eps_g == 0 or nnz == 0:
        return A, FilterReport(0, (), 0.0, 0, nnz)

    values = A.data
    mag = np.abs(values)
    residual = np.ones(nnz, dtype=bool)
    budget = eps_g * (1.0 + e_r)
    b = _fro_values(values)
    m = 1.0
    thresholds = []
    capped = False
    while b > budget:
        if len(thresholds) >= max_passes:
            residual = _sorted_trim(mag, residual, budget)
            b = _fro_values(values[residual])
            capped = True
            logger.warning("filter pass limit %d reached; used sorted trim", max_passes)
            break
        eps_f = eps_g / m
        thresholds.append(eps_f)
        residual &= ~(mag > eps_f)
        b = _fro_values(values[residual])
        m = b / eps_f

    dropped = int(np.count_nonzero(residual))
    report = FilterReport(
        iterations=len(thresholds),
        thresholds=tuple(thresholds),
        dropped_norm=b,
        dropped_count=dropped,
        kept_count=nnz - dropped,
        capped=capped,
    )
    if dropped == 0:
        return A, report
    keep = ~residual
    kept_before = np.concatenate(([0], np.cumsum(keep)))
    indptr = kept_before[A.indptr].astype(A.indptr.dtype)
    out = sp.csr_array(
        (values[keep].copy(), A.indices[keep].copy(), indptr), shape=A.shape
    )
    out.has_sorted_indices = True
    return canonicalize(out), report


def _sorted_trim(mag, residual, budget):
    idx = np.flatnonzero(residual)
    order = idx[np.argsort(mag[idx], kind="stable")]
    cut = int(np.searchsorted(np.cumsum(mag[order] ** 2), budget * budget, side="right"))
    while cut > 0 and _fro_values(mag[order[:cut]]) > budget:
        cut -= 1
    out = np.zeros_like(residual)
    out[order[:cut]] = True
    return out
