import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from filtered_expm import MatrixMarketError
from filtered_expm.generators import tridiag
from filtered_expm.mmio import (
    is_incremental,
    load_exponential,
    read_matrix_market,
    write_matrix_market,
)

from conftest import random_csr


def write(tmp_path, text, name="m.mtx"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_read_general(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n"
                           "% comment\n2 2 2\n1 1 1.0\n2 2 2.0\n")
    np.testing.assert_array_equal(read_matrix_market(path).toarray(), np.diag([1.0, 2.0]))


def test_read_symmetric_expands(tmp_path):
    body = "%%MatrixMarket matrix coordinate real symmetric\n4 4 7\n"
    body += "".join(f"{i} {i} -2\n" for i in range(1, 5))
    body += "".join(f"{i + 1} {i} 1\n" for i in range(1, 4))
    A = read_matrix_market(write(tmp_path, body))
    np.testing.assert_array_equal(A.toarray(), tridiag(4, 1, -2, 1).toarray())


def test_read_skew_symmetric(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real skew-symmetric\n"
                           "2 2 1\n2 1 3.5\n")
    np.testing.assert_array_equal(read_matrix_market(path).toarray(), [[0, -3.5], [3.5, 0]])


def test_read_integer_and_duplicates(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate integer general\n"
                           "2 2 3\n1 2 4\n1 2 -1\n2 1 7\n")
    np.testing.assert_array_equal(read_matrix_market(path).toarray(), [[0, 3], [7, 0]])


def test_nonfinite_values_are_parsed(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 nan\n")
    assert np.isnan(read_matrix_market(path).data[0])


@pytest.mark.parametrize(
    "text,fragment,line",
    [
        ("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n2 2 2\n",
         "declares 3 entries but file contains 2", 4),
        ("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
         "field type 'complex'", 1),
        ("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n",
         "field type 'pattern'", 1),
        ("%%MatrixMarket matrix array real general\n1 1\n1\n", "format 'array'", 1),
        ("%%MatrixMarket matrix coordinate real general\n2 3 0\n", "square", 2),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n", "outside", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n", "cannot parse", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 2\n", "more entries", 4),
        ("not a banner\n", "expected", 1),
    ],
)
def test_parse_errors_name_the_line(tmp_path, text, fragment, line):
    with pytest.raises(MatrixMarketError, match=fragment) as info:
        read_matrix_market(write(tmp_path, text))
    assert info.value.lineno == line
    assert str(info.value).startswith(f"line {line}:")


def test_roundtrip_bit_exact(tmp_path, rng):
    A = random_csr(rng, 30, 0.2, spread=200)
    path = tmp_path / "a.mtx"
    write_matrix_market(path, A, comment="random\ntest")
    B = read_matrix_market(path)
    assert (A != B).nnz == 0
    np.testing.assert_array_equal(A.data, B.data)
    # scipy reads our output
    np.testing.assert_array_equal(scipy.io.mmread(path).toarray(), A.toarray())


def test_incremental_flag(tmp_path):
    T = sp.csr_array(np.array([[0.5, 0.0], [0.0, 0.0]]))
    inc = tmp_path / "inc.mtx"
    full = tmp_path / "full.mtx"
    write_matrix_market(inc, T, incremental=True)
    write_matrix_market(full, T)
    assert is_incremental(inc) and not is_incremental(full)
    np.testing.assert_array_equal(load_exponential(inc).toarray(), [[1.5, 0], [0, 1]])
    np.testing.assert_array_equal(load_exponential(full).toarray(), T.toarray())
    # the flag line is a comment to other readers
    np.testing.assert_array_equal(scipy.io.mmread(inc).toarray(), T.toarray())
