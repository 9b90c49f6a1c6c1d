"""Built-in test matrix generators addressed by short spec strings.

=========================  ============================================
spec                       matrix
=========================  ============================================
``tridiag:n:a:b:c``        ``a`` on the superdiagonal, ``b`` on the
                           diagonal, ``c`` on the subdiagonal
``scaled-laplacian:n``     ``tridiag(-1, 2, -1) / (n + 1)``
``randsym:n:density``      symmetric, standard normal values
``randn:n:density``        nonsymmetric, standard normal values
``small:H1`` .. ``H5``     the five small ill-conditioned matrices
``zero:n``                 the ``n x n`` zero matrix
=========================  ============================================

Random kinds are deterministic for a given ``seed``.
"""

import numpy as np
import scipy.sparse as sp

from ._validation import canonicalize
from .baselines import SMALL_MATRICES, closed_form_small

__all__ = ["generate", "tridiag", "scaled_laplacian", "random_sparse", "KINDS"]

KINDS = ("tridiag", "scaled-laplacian", "randsym", "randn", "small", "zero")


def tridiag(n, a, b, c):
    """``n x n`` tridiagonal matrix; superdiagonal ``a``, diagonal ``b``, subdiagonal ``c``."""
    A = sp.diags(
        [np.full(n - 1, float(c)), np.full(n, float(b)), np.full(n - 1, float(a))],
        [-1, 0, 1],
        shape=(n, n),
        format="csr",
    )
    return canonicalize(sp.csr_array(A))


def scaled_laplacian(n):
    return canonicalize(sp.csr_array(tridiag(n, -1.0, 2.0, -1.0) / (n + 1)))


def random_sparse(n, density, *, symmetric, seed=None):
    """Random sparse matrix with standard normal nonzeros.

    For ``symmetric=True`` the upper triangle (diagonal included) is drawn
    with the given density and mirrored.
    """
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    A = sp.random_array((n, n), density=density, format="coo", rng=rng,
                        data_sampler=rng.standard_normal)
    if symmetric:
        U = sp.triu(A, format="coo")
        A = U + sp.triu(U, k=1, format="coo").T
    return canonicalize(sp.csr_array(A))


def _int(token, what):
    try:
        value = int(token)
    except ValueError:
        raise ValueError(f"{what} must be an integer, got {token!r}") from None
    if value <= 0:
        raise ValueError(f"{what} must be positive, got {value}")
    return value


def generate(spec, seed=None):
    """Build a matrix from a spec string such as ``"tridiag:100:1:-2:1"``."""
    kind, *args = spec.split(":")
    if kind == "tridiag":
        if len(args) != 4:
            raise ValueError("tridiag spec is tridiag:n:a:b:c")
        return tridiag(_int(args[0], "n"), *(float(x) for x in args[1:]))
    if kind == "scaled-laplacian":
        if len(args) != 1:
            raise ValueError("scaled-laplacian spec is scaled-laplacian:n")
        return scaled_laplacian(_int(args[0], "n"))
    if kind in ("randsym", "randn"):
        if len(args) != 2:
            raise ValueError(f"{kind} spec is {kind}:n:density")
        return random_sparse(_int(args[0], "n"), float(args[1]),
                             symmetric=kind == "randsym", seed=seed)
    if kind == "small":
        if len(args) != 1 or args[0] not in SMALL_MATRICES:
            raise ValueError(f"small spec is small:<name> with name in {SMALL_MATRICES}")
        H, _ = closed_form_small(args[0])
        return canonicalize(sp.csr_array(H))
    if kind == "zero":
        if len(args) != 1:
            raise ValueError("zero spec is zero:n")
        n = _int(args[0], "n")
        return sp.csr_array((n, n), dtype=np.float64)
    raise ValueError(f"unknown generator kind {kind!r}; expected one of {KINDS}")
