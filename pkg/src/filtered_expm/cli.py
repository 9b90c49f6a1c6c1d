"""Command line interface: ``filtered-expm {expm,compare,bandwidth}``.

Every option can also come from a JSON file given with ``--config``; keys
are the long option names with dashes replaced by underscores.  Command
line flags win over the file.

Exit codes
----------
0 success, 1 I/O failure, 2 usage error, 3 Matrix Market parse error,
4 infeasible plan, 5 memory cap exceeded, 6 non-finite input.
"""

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import __version__
from ._validation import check_square_sparse, check_tolerance
from .baselines import (
    DEFAULT_MEM_CAP,
    DENSE_CAP,
    SMALL_MATRICES,
    closed_form_small,
    middle_column_index,
    pim_expm,
    ssat_expm,
    toeplitz_reference_column,
    tse_converged_order,
    tse_expm,
)
from .engine import DEFAULT_E_R, THRESHOLD_MODES, expm
from .exceptions import InfeasiblePlanError, MatrixMarketError, NonFiniteError, ResourceCapError
from .generators import generate
from .mmio import read_matrix_market, write_matrix_market
from .sparse_core import bandwidth, real_bandwidth_estimate, sparsity

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INFEASIBLE = 4
EXIT_RESOURCE = 5
EXIT_NONFINITE = 6

DIAG_COLUMNS = (
    "phase",
    "step",
    "nnz",
    "bandwidth_l",
    "filter_threshold",
    "dropped_norm",
    "filter_iterations",
)
SUMMARY_KEYS = ("n", "nnz_in", "nnz_out", "M", "N", "M_eff", "r_N", "wall_time_s")
COMPARE_COLUMNS = ("matrix", "method", "rel_error", "time_s", "nnz", "sparsity", "note")

_U64_MAX = 2 ** 64 - 1


class UsageError(Exception):
    """Bad option values detected after argparse."""


@dataclass
class Source:
    """Input matrix and where it came from."""

    label: str
    H: object
    gen: str | None = None


# -- argument parsing ----------------------------------------------------------

def _u64(text):
    value = int(text)
    if not 0 <= value <= _U64_MAX:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**64), got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _add_source(p, table1=False):
    group = p.add_mutually_exclusive_group()
    group.add_argument("--input", metavar="PATH", help="Matrix Market coordinate file")
    group.add_argument(
        "--gen",
        metavar="SPEC",
        help="built-in generator: tridiag:n:a:b:c, randsym:n:density, "
        "randn:n:density, scaled-laplacian:n, small:H1..H5, zero:n",
    )
    if table1:
        group.add_argument(
            "--table1", action="store_true", help="run the five small test matrices"
        )
    p.add_argument("--seed", type=_u64, default=None, help="seed for random generators")


def _add_engine(p):
    p.add_argument("--tol", type=float, default=1e-16, help="relative error tolerance")
    p.add_argument("--er", type=float, default=DEFAULT_E_R, help="filter slack e_r")
    p.add_argument("--normal", choices=("auto", "yes", "no"), default="auto")
    p.add_argument("--threshold-mode", choices=THRESHOLD_MODES, default="absolute")
    p.add_argument("--mem-cap", type=_nonneg_int, default=DEFAULT_MEM_CAP, metavar="BYTES")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="filtered-expm",
        description="Exponential of large sparse matrices by filtered incremental squaring.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="PATH", help="JSON file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expm", help="compute exp(H) and write it as Matrix Market")
    _add_source(p)
    _add_engine(p)
    p.add_argument("--out", metavar="PATH", help="output Matrix Market file")
    p.add_argument(
        "--materialize-identity",
        action="store_true",
        help="write I + T instead of the incremental part T",
    )
    p.add_argument("--diag", metavar="PATH", help="per-step diagnostics CSV")
    p.add_argument("--summary", metavar="PATH", help="also write the key=value summary here")
    p.add_argument("--no-filter", action="store_true", help="disable filtering")

    p = sub.add_parser("compare", help="run the proposed method against the baselines")
    _add_source(p, table1=True)
    _add_engine(p)
    p.add_argument("--out", metavar="PATH", help="write the comparison table as CSV")

    p = sub.add_parser("bandwidth", help="report bandwidths and an RCM estimate")
    _add_source(p)
    return parser


def _load_config(path):
    try:
        with open(path) as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path}: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError(f"config file {path}: expected a JSON object")
    return config


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        config = _load_config(args.config)
        known = vars(args)
        unknown = sorted(set(config) - set(known) - {"command", "config"})
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        # defaults from the file, then reparse so explicit flags win
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**{k: v for k, v in config.items() if k in known})
        args = parser.parse_args(argv)
    return args


# -- helpers -------------------------------------------------------------------

def _source(args):
    if args.input:
        return Source(args.input, read_matrix_market(args.input))
    if args.gen:
        try:
            H = generate(args.gen, seed=args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return Source(args.gen, H, gen=args.gen)
    raise UsageError("one of --input or --gen is required")


def _normal_flag(text):
    return {"auto": "auto", "yes": True, "no": False}[text]


def _check_engine_args(args):
    try:
        check_tolerance(args.tol, "--tol")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not args.er > 0:
        raise UsageError("--er must be positive")


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_diagnostics(path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DIAG_COLUMNS)
        for row in trace.rows():
            writer.writerow([_fmt(row[c]) for c in DIAG_COLUMNS])


def format_summary(values):
    return "".join(f"{k}={_fmt(values[k])}\n" for k in SUMMARY_KEYS)


# -- expm ------------------------------------------------------------------------

def cmd_expm(args):
    _check_engine_args(args)
    src = _source(args)
    H = check_square_sparse(src.H, name=src.label)
    start = time.perf_counter()
    result = expm(
        H,
        args.tol,
        e_r=args.er,
        normal=_normal_flag(args.normal),
        threshold_mode=args.threshold_mode,
        filtering=not args.no_filter,
        mem_cap=args.mem_cap,
    )
    wall = time.perf_counter() - start
    out = result.materialize() if args.materialize_identity else result.t_hat
    if args.out:
        plan = result.plan
        write_matrix_market(
            args.out,
            out,
            incremental=not args.materialize_identity,
            comment=f"exp of {src.label}; M={plan.M} N={plan.N} tol={args.tol:.3g}",
        )
    if args.diag:
        write_diagnostics(args.diag, result.trace)
    summary = format_summary(
        {
            "n": result.n,
            "nnz_in": H.nnz,
            "nnz_out": out.nnz,
            "M": result.plan.M,
            "N": result.plan.N,
            "M_eff": result.trace.M_eff,
            "r_N": float(result.plan.r_N),
            "wall_time_s": wall,
        }
    )
    sys.stdout.write(summary)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(summary)
    return EXIT_OK


# -- compare -----------------------------------------------------------------------

class _Oracle:
    """Relative error of a computed exponential against a known reference.

    Each method hands over either the incremental part ``T`` or the full
    exponential; ``incremental`` says which.
    """

    def __init__(self, kind, ref, n, scale=None):
        self.kind = kind
        self.ref = ref
        self.n = n
        self.scale = scale

    def error(self, X, incremental):
        if self.kind == "closed-form":
            E = _dense(X)
            if incremental:
                E = E + np.eye(self.n)
            return float(np.linalg.norm(E - self.ref) / np.linalg.norm(self.ref))
        if self.kind == "toeplitz":
            # compared on the incremental part, relative to the full column
            c = middle_column_index(self.n)
            col = _dense_column(X, c)
            if not incremental:
                col[c] -= 1.0
            return float(np.linalg.norm(col - self.ref) / self.scale)
        # zero matrix: exp(0) = I
        D = _dense(X)
        delta = np.linalg.norm(D if incremental else D - np.eye(self.n))
        return float(delta / np.sqrt(self.n))


def _dense(X):
    return X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)


def _dense_column(X, c):
    if sp.issparse(X):
        return np.asarray(X[:, [c]].toarray()).ravel()
    return np.array(X[:, c], dtype=np.float64)


def _oracle_for(src):
    n = src.H.shape[0]
    if src.gen:
        kind, *rest = src.gen.split(":")
        if kind == "small":
            _, E = closed_form_small(rest[0])
            return _Oracle("closed-form", E, n)
        if kind == "scaled-laplacian" and n >= 100:
            scale = float(np.linalg.norm(toeplitz_reference_column(n)))
            return _Oracle("toeplitz", toeplitz_reference_column(n, incremental=True), n,
                           scale=scale)
    if src.H.nnz == 0:
        return _Oracle("identity", None, n)
    return None


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def _row(label, method, oracle, X, incremental, elapsed, note=""):
    n = X.shape[0]
    nnz = X.nnz if sp.issparse(X) else int(np.count_nonzero(X))
    if incremental:
        # identity counted as stored
        nnz += n - int(np.count_nonzero(X.diagonal()))
    err = oracle.error(X, incremental) if oracle else None
    return {
        "matrix": label,
        "method": method,
        "rel_error": err,
        "time_s": elapsed,
        "nnz": nnz,
        "sparsity": nnz / float(n) ** 2,
        "note": note,
    }


def _skip(label, method, note):
    return {"matrix": label, "method": method, "rel_error": None, "time_s": None,
            "nnz": None, "sparsity": None, "note": note}


def compare_rows(src, args):
    """Run the proposed method and the baselines on one input."""
    H = check_square_sparse(src.H, name=src.label)
    n = H.shape[0]
    oracle = _oracle_for(src)
    if oracle is None:
        print(f"warning: no reference solution for {src.label}; error column omitted",
              file=sys.stderr)
    result, t = _timed(lambda: expm(
        H,
        args.tol,
        e_r=args.er,
        normal=_normal_flag(args.normal),
        threshold_mode=args.threshold_mode,
    ))
    M, N = result.plan.M, result.plan.N
    rows = [_row(src.label, "proposed", oracle, result.t_hat, True, t, f"M={M} N={N}")]
    try:
        T, t = _timed(lambda: pim_expm(H, M, N, mem_cap=args.mem_cap))
        rows.append(_row(src.label, "pim", oracle, T, True, t, f"M={M} N={N}"))
    except ResourceCapError as exc:
        rows.append(_skip(src.label, "pim", f"skipped: {exc}"))
    if n > DENSE_CAP:
        for method in ("ssat", "tse"):
            rows.append(_skip(src.label, method, f"skipped: n > {DENSE_CAP}"))
        return rows
    D = H.toarray()
    E, t = _timed(lambda: ssat_expm(D, M, N))
    rows.append(_row(src.label, "ssat", oracle, E, False, t, f"M={M} N={N}"))
    order = tse_converged_order(D)
    E, t = _timed(lambda: tse_expm(D, order))
    rows.append(_row(src.label, "tse", oracle, E, False, t, f"M={order}"))
    return rows


def _cell(key, value):
    if value is None:
        return "-"
    if key in ("rel_error", "sparsity"):
        return f"{value:.3e}"
    if key == "time_s":
        return f"{value:.4f}"
    return str(value)


def print_table(rows, stream):
    cells = [[_cell(k, r[k]) for k in COMPARE_COLUMNS] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(COMPARE_COLUMNS)]
    line = "  ".join(k.ljust(w) for k, w in zip(COMPARE_COLUMNS, widths))
    stream.write(line.rstrip() + "\n")
    for c in cells:
        stream.write("  ".join(v.ljust(w) for v, w in zip(c, widths)).rstrip() + "\n")


def cmd_compare(args):
    _check_engine_args(args)
    if args.table1:
        sources = []
        for name in SMALL_MATRICES:
            spec = f"small:{name}"
            sources.append(Source(name, generate(spec), gen=spec))
    else:
        sources = [_source(args)]
    rows = []
    for src in sources:
        rows.extend(compare_rows(src, args))
    print_table(rows, sys.stdout)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(COMPARE_COLUMNS)
            for r in rows:
                writer.writerow(["" if r[k] is None else _fmt(r[k]) for k in COMPARE_COLUMNS])
    return EXIT_OK


# -- bandwidth ---------------------------------------------------------------------

def cmd_bandwidth(args):
    src = _source(args)
    H = check_square_sparse(src.H, name=src.label, allow_nonfinite=True)
    prof = bandwidth(H)
    rcm, _ = real_bandwidth_estimate(H)
    values = {
        "n": H.shape[0],
        "nnz": H.nnz,
        "l1": prof.l1,
        "l2": prof.l2,
        "l": prof.l,
        "rcm_l1": rcm.l1,
        "rcm_l2": rcm.l2,
        "rcm_l": rcm.l,
        "sparsity": sparsity(H),
    }
    sys.stdout.write("".join(f"{k}={_fmt(v)}\n" for k, v in values.items()))
    return EXIT_OK


COMMANDS = {"expm": cmd_expm, "compare": cmd_compare, "bandwidth": cmd_bandwidth}


def main(argv=None):
    """Entry point; returns the process exit code."""
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MatrixMarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasiblePlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
