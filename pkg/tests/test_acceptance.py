"""Desk-scale acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line, printed again in the terminal
summary under "acceptance criteria".
"""

import time

import numpy as np
import pytest
import scipy.sparse as sp

from filtered_expm import expm, filter_matrix, select_params
from filtered_expm.baselines import (
    SMALL_MATRICES,
    closed_form_small,
    middle_column_index,
    pim_expm,
    ssat_expm,
    toeplitz_reference_column,
)
from filtered_expm.filtering import MAX_PASSES
from filtered_expm.generators import random_sparse, scaled_laplacian, tridiag
from filtered_expm.sparse_core import add, bandwidth, frobenius_norm, sparsity, spgemm

from conftest import random_csr, report_criterion


def rel_err(X, ref):
    return float(np.linalg.norm(X - ref) / np.linalg.norm(ref))


@pytest.fixture(scope="module")
def toeplitz_run():
    H = tridiag(10000, 1.0, -2.0, 1.0)
    start = time.perf_counter()
    res = expm(H, 1e-16)
    return res, time.perf_counter() - start


def test_criterion_1_small_matrices():
    start = time.perf_counter()
    proposed, ssat = {}, {}
    for name in SMALL_MATRICES:
        H, E = closed_form_small(name)
        res = expm(sp.csr_array(H), 1e-16)
        proposed[name] = rel_err(res.materialize().toarray(), E)
        ssat[name] = rel_err(ssat_expm(H, res.plan.M, res.plan.N), E)
    elapsed = time.perf_counter() - start
    worst = max(proposed.values())
    ssat_bad = sum(ssat[k] >= 1e-12 for k in ("H1", "H2", "H3"))
    ok = worst <= 1e-13 and ssat_bad >= 2 and elapsed < 1.0
    detail = (f"proposed max {worst:.2e} (<= 1e-13); SSAT >= 1e-12 on {ssat_bad}/3 of H1-H3; "
              f"{elapsed:.2f}s (< 1s); "
              + " ".join(f"{k}:{proposed[k]:.1e}/{ssat[k]:.1e}" for k in SMALL_MATRICES))
    assert report_criterion(1, ok, detail)


def test_criterion_2_parameter_selection():
    select_params(1.0, 1e-16)  # warm caches
    start = time.perf_counter()
    params = select_params(244.9, 1e-16)
    elapsed = time.perf_counter() - start
    ok = params == (20, 8) and elapsed < 0.010
    assert report_criterion(2, ok, f"(M, N) = {params} (expect (20, 8)); {elapsed * 1e3:.2f} ms")


def test_criterion_3_taylor_terms(toeplitz_run):
    res, elapsed = toeplitz_run
    steps = res.trace.taylor
    vanished = all(s.zero for s in steps[9:])
    widths = [steps[i - 1].bandwidth.l for i in range(1, len(steps) + 1)]
    near = all(abs(widths[i - 1] - 2 * i) <= 2 for i in range(2, 9))
    ok = vanished and near and res.plan.M >= 10 and elapsed < 30
    detail = (f"S_i = 0 for i >= 10: {vanished}; bandwidths i=1..{res.trace.M_eff}: "
              f"{widths[:res.trace.M_eff]}; M_eff = {res.trace.M_eff}; {elapsed:.1f}s (< 30s)")
    assert report_criterion(3, ok, detail)


def test_criterion_4_squaring_bandwidth(toeplitz_run):
    res, _ = toeplitz_run
    filtered = [s.bandwidth.l for s in res.trace.squaring]
    n = 2000
    start = time.perf_counter()
    _, steps = pim_expm(tridiag(n, 1.0, -2.0, 1.0), 20, 8, mem_cap=None, return_trace=True)
    pim_time = time.perf_counter() - start
    pim = [s.pattern_bandwidth.l for s in steps]
    expected = [min(40 * 2 ** i, 2 * (n - 1)) for i in range(1, 9)]
    ok = (len(filtered) == 8 and 30 <= filtered[-1] <= 46 and max(filtered) <= 64
          and pim == expected)
    detail = (f"filtered T_i bandwidths {filtered} (T_8 in [30, 46], all <= 64); "
              f"unfiltered n={n} {pim} vs {expected}; PIM {pim_time:.1f}s")
    assert report_criterion(4, ok, detail)


def test_criterion_5_toeplitz_accuracy():
    n = 10000
    H = scaled_laplacian(n)
    start = time.perf_counter()
    res = expm(H, 1e-16)
    elapsed = time.perf_counter() - start
    c = middle_column_index(n)
    ref_inc = toeplitz_reference_column(n, incremental=True)
    ref_full = toeplitz_reference_column(n)
    col = res.t_hat[:, [c]].toarray().ravel()
    # error of the exponential's column, measured on the incremental part so
    # the identity is never rounded in
    err = float(np.linalg.norm(col - ref_inc) / np.linalg.norm(ref_full))
    err_inc = rel_err(col, ref_inc)
    ratio = sparsity(res.materialize())
    ok = err <= 1e-15 and ratio <= 0.01 and elapsed <= 10
    detail = (f"middle-column error {err:.2e} (<= 1e-15; relative to the T column alone "
              f"{err_inc:.2e}); sparsity {ratio:.4f} (<= 0.01); {elapsed:.2f}s (<= 10s)")
    assert report_criterion(5, ok, detail)


def test_criterion_6_filter_certificate():
    rng = np.random.default_rng(6)
    cases = 10_000
    cert = passes_ok = idem = 0
    max_passes = 0
    start = time.perf_counter()
    for _ in range(cases):
        n = int(rng.integers(1, 41))
        A = random_csr(rng, n, float(rng.uniform(0.02, 0.5)), spread=float(rng.uniform(0, 16)))
        norm = frobenius_norm(A)
        eps_g = (norm if norm else 1.0) * 10.0 ** rng.uniform(-14, 0.5)
        e_r = float(rng.uniform(0.01, 1.0))
        F, rep = filter_matrix(A, eps_g, e_r)
        budget = eps_g * (1 + e_r)
        cert += frobenius_norm(sp.csr_array(A - F)) <= budget and rep.dropped_norm <= budget
        passes_ok += rep.iterations <= MAX_PASSES and not rep.capped
        max_passes = max(max_passes, rep.iterations)
        G, rep2 = filter_matrix(F, eps_g, e_r)
        idem += (G != F).nnz == 0 and rep2.dropped_norm == 0.0
    elapsed = time.perf_counter() - start
    ok = cert == cases and passes_ok == cases and idem == cases and elapsed < 60
    detail = (f"certificate {cert}/{cases}; <= {MAX_PASSES} passes {passes_ok}/{cases} "
              f"(max {max_passes}); idempotent {idem}/{cases}; {elapsed:.1f}s (< 60s)")
    assert report_criterion(6, ok, detail)


def test_criterion_7_bandwidth_subadditivity():
    rng = np.random.default_rng(7)
    pairs = 1000
    violations = 0
    start = time.perf_counter()
    for _ in range(pairs):
        n = int(rng.integers(1, 60))
        A = random_csr(rng, n, float(rng.uniform(0.01, 0.3)))
        B = random_csr(rng, n, float(rng.uniform(0.01, 0.3)))
        ba, bb = bandwidth(A), bandwidth(B)
        s, p = bandwidth(add(A, B)), bandwidth(spgemm(A, B))
        violations += not (s.l1 <= max(ba.l1, bb.l1) and s.l2 <= max(ba.l2, bb.l2)
                           and s.l <= max(ba.l1, bb.l1) + max(ba.l2, bb.l2))
        violations += not (p.l1 <= ba.l1 + bb.l1 and p.l2 <= ba.l2 + bb.l2
                           and p.l <= ba.l + bb.l)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 30
    assert report_criterion(7, ok, f"{violations} violations over {pairs} pairs; {elapsed:.1f}s (< 30s)")


def test_criterion_8_error_budget():
    rng = np.random.default_rng(8)
    cases = 100
    worst = 0.0
    failures = 0
    start = time.perf_counter()
    for _ in range(cases):
        n = int(rng.integers(5, 201))
        H = random_sparse(n, float(rng.uniform(0.005, 0.1)), symmetric=True,
                          seed=int(rng.integers(2 ** 63)))
        if H.nnz == 0:
            H = sp.csr_array(sp.eye(n, format="csr"))
        H = H * (float(rng.uniform(0.5, 20.0)) / frobenius_norm(H))
        tol = float(10.0 ** rng.uniform(-12, -6))
        res = expm(H, tol)
        w, V = np.linalg.eigh(H.toarray())
        exact = (V * np.exp(w)) @ V.T
        ratio = rel_err(res.materialize().toarray(), exact) / (2 * res.plan.r_N)
        worst = max(worst, ratio)
        failures += ratio > 1
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 120
    detail = (f"{cases - failures}/{cases} within 2 r_N (worst error / 2 r_N = {worst:.3f}); "
              f"{elapsed:.1f}s (< 120s)")
    assert report_criterion(8, ok, detail)


def test_criterion_9_filter_off_equivalence():
    rng = np.random.default_rng(9)
    cases = 20
    worst = 0.0
    start = time.perf_counter()
    for _ in range(cases):
        n = int(rng.integers(2, 301))
        H = random_csr(rng, n, float(rng.uniform(1.0, 4.0)) / n)
        H = H * (float(rng.uniform(0.1, 20.0)) / max(frobenius_norm(H), 1e-300))
        res = expm(H, 1e-14, filtering=False)
        T = pim_expm(H, res.plan.M, res.plan.N, mem_cap=None)
        diff = np.abs((res.t_hat - T).toarray()).max(initial=0.0)
        scale = np.abs(T.toarray()).max(initial=0.0)
        if scale:
            worst = max(worst, diff / (scale * np.finfo(float).eps))
    elapsed = time.perf_counter() - start
    ok = worst <= 2 and elapsed < 30
    detail = f"max difference {worst:.2f} ulp of max |T| over {cases} matrices (<= 2); {elapsed:.1f}s (< 30s)"
    assert report_criterion(9, ok, detail)
