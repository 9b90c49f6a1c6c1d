"""Input validation helpers shared by the functional API and the estimator."""

import numpy as np
import scipy.sparse as sp

from .exceptions import NonFiniteError

UNIT_ROUNDOFF = 2.0 ** -53
# Smallest accepted tolerance.  Half the unit roundoff so that the
# customary 1e-16 (just below 2**-53) is accepted.
TOLERANCE_FLOOR = UNIT_ROUNDOFF / 2


def check_square_sparse(A, *, name="matrix", allow_nonfinite=False):
    """Coerce ``A`` to a canonical real CSR array.

    Canonical means float64 values, duplicates summed, explicit zeros
    purged and column indices sorted within each row.

    Parameters
    ----------
    A : sparse matrix/array or array_like
        Square real input.
    name : str
        Used in error messages.
    allow_nonfinite : bool
        Skip the NaN/Inf check.

    Returns
    -------
    scipy.sparse.csr_array
    """
    if sp.issparse(A):
        if np.iscomplexobj(A.data if hasattr(A, "data") else A):
            raise TypeError(f"{name}: complex matrices are not supported")
        out = sp.csr_array(A, dtype=np.float64, copy=True)
    else:
        arr = np.asarray(A)
        if np.iscomplexobj(arr):
            raise TypeError(f"{name}: complex matrices are not supported")
        if arr.ndim != 2:
            raise ValueError(f"{name}: expected a 2-D array, got ndim={arr.ndim}")
        out = sp.csr_array(arr.astype(np.float64, copy=False))
    if out.shape[0] != out.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {out.shape}")
    if out.shape[0] == 0:
        raise ValueError(f"{name}: empty matrix")
    out.sum_duplicates()
    if not allow_nonfinite and not np.all(np.isfinite(out.data)):
        raise NonFiniteError(f"{name}: contains NaN or infinite entries")
    return canonicalize(out)


def canonicalize(A):
    """Purge exact zeros and sort indices in place; returns ``A``."""
    A.eliminate_zeros()
    if not A.has_sorted_indices:
        A.sort_indices()
    return A


def check_same_shape(A, B):
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")


def check_tolerance(eps_tol, name="eps_tol"):
    eps_tol = float(eps_tol)
    if not np.isfinite(eps_tol) or eps_tol < TOLERANCE_FLOOR:
        raise ValueError(
            f"{name} must be a finite value >= {TOLERANCE_FLOOR:.3g} (half the unit roundoff), "
            f"got {eps_tol!r}"
        )
    return eps_tol


def check_permutation(perm, n):
    perm = np.asarray(perm)
    if perm.ndim != 1 or perm.shape[0] != n or not np.issubdtype(perm.dtype, np.integer):
        raise ValueError(f"permutation must be an integer vector of length {n}")
    seen = np.zeros(n, dtype=bool)
    if perm.size and (perm.min() < 0 or perm.max() >= n):
        raise ValueError("permutation indices out of range")
    seen[perm] = True
    if not seen.all():
        raise ValueError("permutation has repeated indices")
    return perm.astype(np.intp, copy=False)
