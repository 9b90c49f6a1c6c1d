"""Reference methods and exact solutions used to validate the engine.

Dense baselines (:func:`tse_expm`, :func:`ssat_expm`) are capped at
``n <= 512``.  :func:`pim_expm` accepts dense or sparse input; for sparse
input it predicts the structural fill of each step and refuses to run
past a memory cap.

Closed forms and the Toeplitz reference are evaluated with ``mpmath`` at
50+ significant digits and only rounded to double at the end.
"""

from dataclasses import dataclass
from pathlib import Path

import mpmath
import numpy as np
import scipy.sparse as sp

from ._validation import canonicalize, check_square_sparse
from .exceptions import ResourceCapError
from .sparse_core import BYTES_PER_ENTRY, BandwidthProfile, add, bandwidth, spgemm

__all__ = [
    "DENSE_CAP",
    "DEFAULT_MEM_CAP",
    "tse_expm",
    "ssat_expm",
    "tse_converged_order",
    "pim_expm",
    "PimStep",
    "closed_form_small",
    "closed_form_small_mp",
    "SMALL_MATRICES",
    "toeplitz_coefficients",
    "toeplitz_reference_column",
    "middle_column_index",
    "write_fixture",
    "read_fixture",
]

DENSE_CAP = 512
DEFAULT_MEM_CAP = 8 * 2 ** 30
SMALL_MATRICES = ("H1", "H2", "H3", "H4", "H5")


def _dense(H):
    H = np.array(H.toarray() if sp.issparse(H) else H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if H.shape[0] > DENSE_CAP:
        raise ValueError(f"dense baselines are capped at n <= {DENSE_CAP}")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix has non-finite entries")
    return H


def tse_expm(H, M):
    """Order-``M`` truncated Taylor series by Horner's rule (dense)."""
    H = _dense(H)
    n = H.shape[0]
    eye = np.eye(n)
    F = eye.copy()
    for k in range(int(M), 0, -1):
        F = eye + (H @ F) / k
    return F


def tse_converged_order(H, max_order=1000):
    """Smallest Taylor order whose next term is below roundoff of the sum.

    Runs the term recurrence ``S_k = S_{k-1} H / k`` on the dense matrix;
    gives up at ``max_order``.
    """
    H = _dense(H)
    S = np.eye(H.shape[0])
    total = S.copy()
    for k in range(1, max_order + 1):
        S = (S @ H) / k
        total = total + S
        if not np.all(np.isfinite(total)):
            return max_order
        if np.linalg.norm(S) <= 2.0 ** -53 * np.linalg.norm(total):
            return k
    return max_order


def ssat_expm(H, M, N):
    """Scaling and squaring with a Taylor start, squaring the full matrix.

    ``F0 = sum_{s<=M} (H 2^-N)^s / s!`` is formed explicitly (identity
    included) and squared ``N`` times, so the small increment is rounded
    against the identity at every step.
    """
    H = _dense(H) * 2.0 ** -int(N)
    F = tse_expm(H, M)
    for _ in range(int(N)):
        F = F @ F
    return F


@dataclass(frozen=True)
class PimStep:
    """One unfiltered squaring step.

    ``bandwidth`` is measured on the computed values (entries that
    underflow to zero are gone); ``pattern_bandwidth`` and
    ``predicted_nnz`` come from the structural envelope.
    """

    index: int
    nnz: int
    bandwidth: BandwidthProfile
    pattern_bandwidth: BandwidthProfile
    predicted_nnz: int


class _Envelope:
    """Per-row column extents ``[lo, hi]`` of a structural pattern."""

    def __init__(self, lo, hi):
        self.lo = lo
        self.hi = hi

    @classmethod
    def of(cls, A):
        n = A.shape[0]
        counts = np.diff(A.indptr)
        lo = np.full(n, n, dtype=np.int64)
        hi = np.full(n, -1, dtype=np.int64)
        rows = counts > 0
        lo[rows] = A.indices[A.indptr[:-1][rows]]
        hi[rows] = A.indices[A.indptr[1:][rows] - 1]
        return cls(lo, hi)

    def union(self, other):
        return _Envelope(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def times(self, other):
        """Envelope of the product, treating each row range as full."""
        n = self.lo.shape[0]
        empty = self.hi < self.lo
        a = np.clip(self.lo, 0, n - 1)
        b = np.clip(self.hi, 0, n - 1)
        lo = _range_reduce(other.lo, a, b, np.minimum)
        hi = _range_reduce(other.hi, a, b, np.maximum)
        lo[empty] = n
        hi[empty] = -1
        return _Envelope(lo, hi)

    def nnz(self):
        return int(np.sum(np.maximum(self.hi - self.lo + 1, 0)))

    def profile(self):
        rows = np.arange(self.lo.shape[0])
        full = self.hi >= self.lo
        if not full.any():
            return BandwidthProfile(0, 0, 0)
        l1 = max(int(np.max(self.hi[full] - rows[full])), 0)
        l2 = max(int(np.max(rows[full] - self.lo[full])), 0)
        return BandwidthProfile(l1, l2, l1 + l2)


def _range_reduce(values, a, b, op):
    # Sparse-table range query of op over values[a[i]:b[i]+1].
    table = [values]
    span = 1
    while 2 * span <= values.shape[0]:
        prev = table[-1]
        table.append(op(prev[:-span], prev[span:]))
        span *= 2
    length = b - a + 1
    k = np.floor(np.log2(np.maximum(length, 1))).astype(np.int64)
    out = np.empty_like(a)
    for level in np.unique(k):
        sel = k == level
        t = table[level]
        out[sel] = op(t[a[sel]], t[b[sel] - (1 << level) + 1])
    return out


def _check_fill(predicted, mem_cap, what):
    need = predicted * BYTES_PER_ENTRY
    if mem_cap is not None and need > mem_cap:
        raise ResourceCapError(
            f"{what}: predicted fill {predicted} entries (~{need} bytes) "
            f"exceeds memory cap {mem_cap} bytes",
            predicted_bytes=need,
            cap_bytes=mem_cap,
        )


def _pim_sparse(H, M, N, mem_cap):
    H0 = canonicalize(H * 2.0 ** -N)
    env_h = _Envelope.of(H0)
    env_s = env_h
    env_t = env_h
    for _ in range(2, M + 1):
        env_s = env_s.times(env_h)
        env_t = env_t.union(env_s)
    _check_fill(env_t.nnz(), mem_cap, "Taylor start")

    if M == 0:
        T = add(H0, H0, 0.0, 0.0)
    else:
        S = H0
        T = H0
        for i in range(2, M + 1):
            S = canonicalize(spgemm(S, H0) / i)
            if S.nnz == 0:
                break
            T = add(T, S)
    steps = []
    for i in range(1, N + 1):
        env_t = env_t.union(env_t.times(env_t))
        predicted = env_t.nnz()
        _check_fill(predicted, mem_cap, f"squaring step {i}")
        T = add(T, spgemm(T, T), 2.0, 1.0)
        steps.append(PimStep(i, T.nnz, bandwidth(T), env_t.profile(), predicted))
    return T, steps


def pim_expm(H, M, N, *, mem_cap=DEFAULT_MEM_CAP, return_trace=False):
    """Unfiltered incremental squaring; ``exp(H) ~ I + T``.

    The Taylor start is accumulated term by term exactly as the engine
    does, so the sparse path matches the engine with filtering disabled
    bit for bit.

    Parameters
    ----------
    H : ndarray or sparse matrix
        Dense input returns a dense ``T``; sparse input a CSR ``T``.
    M, N : int
        Taylor order and number of squarings.
    mem_cap : int or None
        Byte cap on the predicted fill (sparse input only).
    return_trace : bool
        Also return a list of :class:`PimStep` (sparse input only).

    Raises
    ------
    ResourceCapError
        If the structural fill of some step would exceed ``mem_cap``.
    """
    M = int(M)
    N = int(N)
    if sp.issparse(H):
        T, steps = _pim_sparse(check_square_sparse(H), M, N, mem_cap)
        return (T, steps) if return_trace else T
    H0 = _dense(H) * 2.0 ** -N
    T = np.zeros_like(H0)
    S = H0
    if M >= 1:
        T = H0.copy()
        for i in range(2, M + 1):
            S = (S @ H0) / i
            T = T + S
    for _ in range(N):
        T = 2.0 * T + T @ T
    return (T, []) if return_trace else T


# -- closed forms -------------------------------------------------------------

def closed_form_small_mp(which, dps=60):
    """Input and exact exponential of one of the five small test matrices.

    Returns mpmath matrices evaluated at ``dps`` digits from analytic
    closed forms.  Parameters that are not representable in binary (6.1,
    sqrt(3)*1e6, 1 +- 1e-5) are rounded to double first, so the result is
    the exact exponential of the matrix the float methods actually see.
    """
    with mpmath.workdps(dps):
        def mpf(x):
            return mpmath.mpf(float(mpmath.mpf(x)))

        e = mpmath.e
        if which == "H1":
            lam, b = mpf("6.1"), mpf(10) ** 6
            H = mpmath.matrix([[lam, b], [0, lam]])
            E = mpmath.exp(lam) * mpmath.matrix([[1, b], [0, 1]])
        elif which == "H2":
            b = mpf(10) ** 6
            c = mpf("0.5") * mpf(10) ** 12
            H = mpmath.matrix([[1, b, c], [0, 1, b], [0, 0, 1]])
            # H = I + N, N nilpotent: exp(H) = e (I + N + N^2/2)
            E = e * mpmath.matrix([[1, b, c + b * b / 2], [0, 1, b], [0, 0, 1]])
        elif which in ("H3", "H5"):
            if which == "H3":
                l1, l2, b = mpf(1), mpf("0.9"), mpf(mpmath.sqrt(3) * 10 ** 6)
            else:
                l1, l2, b = mpf("1.00001"), mpf("0.99999"), mpf(1)
            H = mpmath.matrix([[l1, b], [0, l2]])
            off = b * (mpmath.exp(l1) - mpmath.exp(l2)) / (l1 - l2)
            E = mpmath.matrix([[mpmath.exp(l1), off], [0, mpmath.exp(l2)]])
        elif which == "H4":
            H = mpmath.matrix([[-49, 24], [-64, 31]])
            eye = mpmath.eye(2)
            # eigenvalues -1 and -17; Lagrange interpolation
            E = (mpmath.exp(-1) * (H + 17 * eye) - mpmath.exp(-17) * (H + eye)) / 16
        else:
            raise ValueError(f"unknown small matrix {which!r}; expected one of {SMALL_MATRICES}")
        return H, E


def _to_float(Mmp):
    return np.array([[float(Mmp[i, j]) for j in range(Mmp.cols)] for i in range(Mmp.rows)])


def closed_form_small(which):
    """``(H, exp(H))`` as float arrays for ``which`` in ``H1``..``H5``."""
    H, E = closed_form_small_mp(which)
    return _to_float(H), _to_float(E)


# -- Toeplitz reference --------------------------------------------------------

def _iter_toeplitz_coefficients(n, dps):
    with mpmath.workdps(dps):
        h = mpmath.mpf(1) / (n + 1)
        cutoff = mpmath.mpf(10) ** -40
        s = 0
        while True:
            i = s
            total = mpmath.binomial(2 * i, i + s) * h ** i / mpmath.factorial(i)
            while True:
                i += 1
                term = mpmath.binomial(2 * i, i + s) * h ** i / mpmath.factorial(i)
                total += term
                if term < cutoff * total:
                    break
            yield total if s % 2 == 0 else -total
            s += 1


def toeplitz_coefficients(n, count, dps=50):
    """First ``count`` Toeplitz coefficients of ``exp(tridiag(-1, 2, -1)/(n+1))``.

    ``G_s = (-1)^s sum_{i>=s} C(2i, i+s) / (i! (n+1)^i)``, summed until a
    term drops below ``1e-40`` of the partial sum.  This is the symbol
    expansion of ``exp(h (2 - z - 1/z))`` with ``h = 1/(n+1)``; it equals
    the infinite-matrix exponential, and matches the finite matrix away
    from its corners.

    Returns
    -------
    list of mpmath.mpf
    """
    gen = _iter_toeplitz_coefficients(n, dps)
    return [next(gen) for _ in range(int(count))]


def middle_column_index(n):
    """0-based index of column ``n/2`` (1-based)."""
    return n // 2 - 1


def _toeplitz_column(coeffs, n, col, incremental):
    out = np.zeros(n)
    with mpmath.workdps(50):
        for s, g in enumerate(coeffs):
            value = g - 1 if (s == 0 and incremental) else g
            for row in {col - s, col + s}:
                if 0 <= row < n:
                    out[row] = float(value)
    return out


def toeplitz_reference_column(n, count=None, *, incremental=False):
    """Middle column of the Toeplitz part of ``exp(tridiag(-1, 2, -1)/(n+1))``.

    Parameters
    ----------
    n : int
        Dimension, ``n >= 100`` so corner corrections are negligible.
    count : int, optional
        Number of coefficients ``G_0 .. G_{count-1}``; the rest are taken
        as zero.  By default coefficients are generated until they fall
        below the smallest subnormal double.
    incremental : bool
        Subtract the identity column in high precision first, giving the
        reference for ``T`` in ``exp(H) = I + T``.

    Returns
    -------
    ndarray of shape (n,)
        Column ``middle_column_index(n)``.
    """
    if n < 100:
        raise ValueError("toeplitz_reference_column requires n >= 100")
    if count is None:
        coeffs = []
        tiny = mpmath.mpf("1e-330")
        for g in _iter_toeplitz_coefficients(n, 50):
            if abs(g) < tiny or len(coeffs) == n:
                break
            coeffs.append(g)
    else:
        coeffs = toeplitz_coefficients(n, min(int(count), n))
    return _toeplitz_column(coeffs, n, middle_column_index(n), incremental)


# -- fixture files -------------------------------------------------------------

def write_fixture(path, values, comment=None, digits=25):
    """Write a matrix as plain-text decimals.

    Layout: ``#`` comment lines, then a ``rows cols`` line, then
    ``rows * cols`` values in row-major order, one per line.
    """
    rows, cols = values.rows, values.cols
    lines = []
    if comment:
        lines += [f"# {line}" for line in comment.splitlines()]
    lines.append(f"{rows} {cols}")
    for i in range(rows):
        for j in range(cols):
            lines.append(mpmath.nstr(values[i, j], digits, min_fixed=1, max_fixed=0))
    Path(path).write_text("\n".join(lines) + "\n")


def read_fixture(path, dps=50):
    """Read a file written by :func:`write_fixture` into an mpmath matrix."""
    body = [
        ln.strip() for ln in Path(path).read_text().splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    rows, cols = (int(t) for t in body[0].split())
    with mpmath.workdps(dps):
        vals = [mpmath.mpf(t) for t in body[1:]]
        if len(vals) != rows * cols:
            raise ValueError(f"{path}: expected {rows * cols} values, found {len(vals)}")
        out = mpmath.matrix(rows, cols)
        for k, v in enumerate(vals):
            out[k // cols, k % cols] = v
    return out
