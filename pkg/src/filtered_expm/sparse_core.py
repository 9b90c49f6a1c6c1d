"""Sparse arithmetic, norms and bandwidth metrology.

Matrices are ``scipy.sparse.csr_array`` objects in canonical form (sorted
column indices, no duplicates, no explicit zeros).  Every function here
returns a fresh canonical array and never mutates its inputs.

Permutations are 0-based integer vectors ``p`` mapping old index ``i`` to
new index ``p[i]``.
"""

import math
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from ._validation import canonicalize, check_permutation, check_same_shape, check_square_sparse

__all__ = [
    "BandwidthProfile",
    "add",
    "spgemm",
    "frobenius_norm",
    "bandwidth",
    "permute_symmetric",
    "inverse_permutation",
    "real_bandwidth_estimate",
    "is_normal",
    "sparsity",
    "identity",
    "BYTES_PER_ENTRY",
]

BYTES_PER_ENTRY = 12  # float64 value + int32 column index


class BandwidthProfile(NamedTuple):
    """Upper, lower and total bandwidth of a sparse matrix."""

    l1: int
    l2: int
    l: int


def identity(n):
    return sp.csr_array(sp.identity(n, dtype=np.float64, format="csr"))


def add(A, B, alpha=1.0, beta=1.0):
    """Return ``alpha*A + beta*B`` with cancelled entries purged."""
    check_same_shape(A, B)
    out = sp.csr_array(alpha * A + beta * B)
    return canonicalize(out)


def spgemm(A, B):
    """Sparse-sparse product ``A @ B``.

    Delegates to SciPy's row-wise (Gustavson/SMMP) CSR kernel, which
    accumulates each output row in a dense scatter workspace and skips
    entries that sum to exactly zero.
    """
    check_same_shape(A, B)
    out = sp.csr_array(A @ B)
    return canonicalize(out)


def _fro_values(values):
    # Power-of-two scaling keeps squares in range; fsum makes the result
    # independent of entry order.
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return 0.0
    biggest = float(np.max(np.abs(values)))
    if biggest == 0.0:
        return 0.0
    _, e = math.frexp(biggest)
    scaled = np.ldexp(values, -e)
    return math.ldexp(math.sqrt(math.fsum(scaled * scaled)), e)


def frobenius_norm(A):
    """Frobenius norm of a sparse matrix.

    The sum of squares is correctly rounded (``math.fsum``), so the value
    does not depend on storage order; in particular it is invariant, bit
    for bit, under symmetric permutation.
    """
    return _fro_values(A.data)


def _row_indices(A):
    return np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))


def bandwidth(A):
    """Upper/lower bandwidth of ``A``; the zero matrix has profile (0, 0, 0)."""
    if A.nnz == 0:
        return BandwidthProfile(0, 0, 0)
    offsets = A.indices.astype(np.int64) - _row_indices(A)
    l1 = max(int(offsets.max()), 0)
    l2 = max(int(-offsets.min()), 0)
    return BandwidthProfile(l1, l2, l1 + l2)


def permute_symmetric(A, perm):
    """Return ``P A P^T`` where entry ``(i, j)`` moves to ``(perm[i], perm[j])``."""
    n = A.shape[0]
    perm = check_permutation(perm, n)
    coo = A.tocoo()
    out = sp.csr_array(
        (coo.data.copy(), (perm[coo.row], perm[coo.col])), shape=A.shape
    )
    return canonicalize(out)


def inverse_permutation(perm):
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.shape[0], dtype=perm.dtype)
    return inv


def real_bandwidth_estimate(A):
    """Upper bound on the real bandwidth (minimum over symmetric permutations).

    Runs reverse Cuthill-McKee on the symmetrized nonzero pattern and keeps
    whichever of the RCM order and the native order has smaller total
    bandwidth.  The result is an upper bound, not the exact minimum.

    Returns
    -------
    profile : BandwidthProfile
        Profile of ``permute_symmetric(A, perm)``.
    perm : ndarray of intp
        Permutation achieving ``profile``.
    """
    n = A.shape[0]
    native = bandwidth(A)
    identity_perm = np.arange(n, dtype=np.intp)
    if A.nnz == 0 or native.l == 0:
        return native, identity_perm
    pattern = sp.csr_array(
        (np.ones(A.nnz), A.indices.copy(), A.indptr.copy()), shape=A.shape
    )
    pattern = sp.csr_array(pattern + pattern.T)
    order = reverse_cuthill_mckee(sp.csr_matrix(pattern), symmetric_mode=True)
    perm = inverse_permutation(np.asarray(order, dtype=np.intp))
    reordered = bandwidth(permute_symmetric(A, perm))
    if reordered.l < native.l:
        return reordered, perm
    return native, identity_perm


def is_normal(A, tol=1e-12):
    """Test ``||A A^T - A^T A||_F <= tol * ||A||_F**2``."""
    norm = frobenius_norm(A)
    if norm == 0.0:
        return True
    At = sp.csr_array(A.T)
    comm = add(spgemm(A, At), spgemm(At, A), 1.0, -1.0)
    return frobenius_norm(comm) <= tol * norm * norm


def sparsity(A):
    """Ratio of stored nonzeros to ``n**2``."""
    n = A.shape[0]
    return A.nnz / float(n * n)


def as_sparse(A):
    """Public alias of the canonicalizing validator."""
    return check_square_sparse(A)
