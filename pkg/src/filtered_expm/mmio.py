"""Matrix Market coordinate I/O for real sparse matrices.

Reads ``real`` or ``integer`` coordinate files with ``general``,
``symmetric`` or ``skew-symmetric`` storage.  Written files use 17
significant digits so every double round-trips exactly.

An exponential written in incremental form carries a ``%%incremental``
line right after the banner; :func:`load_exponential` adds the identity
back when it sees it.
"""

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ._validation import canonicalize
from .exceptions import MatrixMarketError
from .sparse_core import add, identity

__all__ = ["read_matrix_market", "write_matrix_market", "load_exponential", "is_incremental"]

BANNER = "%%MatrixMarket"
INCREMENTAL_FLAG = "%%incremental"
_FIELDS = ("real", "integer")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric")


def _parse_banner(line, lineno):
    tokens = line.split()
    if len(tokens) != 5 or tokens[0] != BANNER:
        raise MatrixMarketError(f"expected '{BANNER} matrix coordinate <field> <symmetry>'", lineno)
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", lineno)
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {fmt!r}; only 'coordinate' is read", lineno)
    if field not in _FIELDS:
        raise MatrixMarketError(
            f"unsupported field type {field!r}; only real or integer entries are accepted",
            lineno,
        )
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", lineno)
    return symmetry


def read_matrix_market(path):
    """Read a square coordinate Matrix Market file into a canonical CSR array.

    Symmetric and skew-symmetric storage is expanded to the full pattern.
    Duplicate coordinates are summed.

    Raises
    ------
    MatrixMarketError
        On any malformed or unsupported content; the message names the
        offending line.
    """
    path = Path(path)
    rows, cols, vals = [], [], []
    symmetry = None
    size = None
    declared = 0
    last = 0
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            last = lineno
            line = raw.strip()
            if lineno == 1:
                symmetry = _parse_banner(line, lineno)
                continue
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            if size is None:
                if len(parts) != 3:
                    raise MatrixMarketError("size line must hold 'rows cols nnz'", lineno)
                try:
                    m, n, declared = (int(p) for p in parts)
                except ValueError:
                    raise MatrixMarketError(f"non-integer size line {line!r}", lineno) from None
                if m != n or n <= 0:
                    raise MatrixMarketError(f"matrix must be square and nonempty, got {m}x{n}", lineno)
                if declared < 0:
                    raise MatrixMarketError("negative entry count", lineno)
                size = n
                continue
            if len(parts) != 3:
                raise MatrixMarketError(f"expected 'row col value', got {line!r}", lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
                v = float(parts[2])
            except ValueError:
                raise MatrixMarketError(f"cannot parse entry {line!r}", lineno) from None
            if not (1 <= i <= size and 1 <= j <= size):
                raise MatrixMarketError(f"index ({i}, {j}) outside 1..{size}", lineno)
            if len(vals) == declared:
                raise MatrixMarketError(f"more entries than the declared {declared}", lineno)
            if symmetry == "skew-symmetric" and i == j:
                raise MatrixMarketError("skew-symmetric file stores a diagonal entry", lineno)
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)
    if symmetry is None:
        raise MatrixMarketError("empty file", 1)
    if size is None:
        raise MatrixMarketError("missing size line", last)
    if len(vals) != declared:
        raise MatrixMarketError(
            f"size line declares {declared} entries but file contains {len(vals)}", last
        )
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    v = np.asarray(vals, dtype=np.float64)
    if symmetry != "general":
        off = r != c
        sign = -1.0 if symmetry == "skew-symmetric" else 1.0
        r, c, v = (np.concatenate((r, c[off])), np.concatenate((c, r[off])),
                   np.concatenate((v, sign * v[off])))
    A = sp.csr_array(sp.coo_array((v, (r, c)), shape=(size, size)))
    A.sum_duplicates()
    return canonicalize(A)


def is_incremental(path):
    """True if the file carries the ``%%incremental`` flag."""
    with Path(path).open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if lineno > 1 and not line.startswith("%"):
                return False
            if line.lower() == INCREMENTAL_FLAG:
                return True
    return False


def load_exponential(path):
    """Read an exponential written by ``expm``; adds ``I`` to incremental files."""
    A = read_matrix_market(path)
    if is_incremental(path):
        A = add(identity(A.shape[0]), A)
    return A


def write_matrix_market(path, A, *, incremental=False, comment=None):
    """Write ``A`` as ``coordinate real general`` with 17 significant digits."""
    coo = A.tocoo()
    order = np.lexsort((coo.col, coo.row))
    n = A.shape[0]
    with Path(path).open("w") as fh:
        fh.write(f"{BANNER} matrix coordinate real general\n")
        if incremental:
            fh.write(f"{INCREMENTAL_FLAG}\n")
        for line in (comment or "").splitlines():
            fh.write(f"% {line}\n")
        fh.write(f"{n} {n} {coo.nnz}\n")
        for k in order:
            fh.write(f"{coo.row[k] + 1} {coo.col[k] + 1} {coo.data[k]:.17g}\n")
