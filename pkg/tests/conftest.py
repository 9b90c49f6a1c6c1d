import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import strategies as st

from filtered_expm._validation import canonicalize


def random_csr(rng, n, density, *, spread=0.0):
    """Random canonical CSR with normal values.

    ``spread`` > 0 multiplies each value by ``10**U(-spread, 0)`` so the
    magnitudes span many decades.
    """
    A = sp.random_array((n, n), density=density, format="csr", rng=rng,
                        data_sampler=rng.standard_normal)
    if spread:
        A.data *= 10.0 ** rng.uniform(-spread, 0.0, size=A.nnz)
    return canonicalize(sp.csr_array(A))


@st.composite
def sparse_matrices(draw, max_n=25, spread=12.0):
    n = draw(st.integers(1, max_n))
    density = draw(st.floats(0.02, 0.6))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return random_csr(np.random.default_rng(seed), n, density, spread=spread)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance report -----------------------------------------------------------

ACCEPTANCE = {}


def report_criterion(number, ok, detail):
    """Record and print one acceptance line; the summary hook repeats it."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
