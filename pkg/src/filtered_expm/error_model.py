"""Forward-error budget and (M, N) selection for the incremental squaring method.

The relative error of an order-``M`` Taylor start followed by ``N``
incremental squarings is bounded by ``2**N * r0`` where ``r0`` is the
remainder bound returned by :func:`taylor_remainder_bound` at the scaled
norm ``||H|| * 2**-N``.  :func:`select_params` minimizes the polynomial
degree ``M * 2**N`` subject to that bound and ``||H|| * 2**-N <= 1``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import UNIT_ROUNDOFF, check_tolerance
from .exceptions import InfeasiblePlanError

__all__ = [
    "ExpmPlan",
    "taylor_remainder_bound",
    "propagate_error",
    "select_params",
    "alpha_bound",
    "make_plan",
    "N_WINDOW",
    "M_CAP",
]

N_WINDOW = 50
M_CAP = 120
_MAX_EXPONENT = 1023  # largest N with 2**N finite


def taylor_remainder_bound(x, M):
    """Bound on ``||F0^{-1} R0||`` for an order-``M`` Taylor start.

    Evaluates the positive series

        (1/M!) * sum_{i>=0} x**(M+1+i) / (i! * (i+M+1))

    which equals ``(-1)**(M+1)/M! * gamma_lower(M+1, -x)``.  Terms come
    from a multiplicative recurrence, so no factorial is ever formed.

    Parameters
    ----------
    x : float
        Norm of the scaled matrix, ``x >= 0``.
    M : int
        Taylor order, ``M >= 0``.

    Returns
    -------
    float
    """
    x = float(x)
    M = int(M)
    if x < 0 or M < 0:
        raise ValueError("taylor_remainder_bound requires x >= 0 and M >= 0")
    return _scaled_remainder(x, M, 1.0)


def _scaled_remainder(x, M, scale):
    # scale * remainder, with scale folded into the first term so that a
    # result above the underflow threshold is never lost on the way
    if x == 0.0:
        return 0.0
    term = scale * x / (M + 1)
    for k in range(1, M + 1):
        term *= x / k
    total = term
    i = 0
    while term > 0.0 and term >= UNIT_ROUNDOFF * total:
        term *= x * (i + M + 1) / ((i + 1) * (i + M + 2))
        total += term
        i += 1
    return total


def propagate_error(r0, N):
    """Linearized error propagation ``r[i] = 2**i * r0`` for ``i = 0..N``."""
    if r0 < 0:
        raise ValueError("r0 must be nonnegative")
    return np.ldexp(np.full(int(N) + 1, float(r0)), np.arange(int(N) + 1))


def _enumerate(normH, eps_tol):
    normH = float(normH)
    if not math.isfinite(normH) or normH < 0:
        raise ValueError(f"norm must be finite and nonnegative, got {normH!r}")
    if normH == 0.0:
        return 0, 0
    n0 = max(math.ceil(math.log2(normH)), 0)
    while normH * 2.0 ** -n0 > 1.0:  # guard log2 rounding
        n0 += 1
    best = None
    for N in range(n0, n0 + N_WINDOW + 1):
        if N > _MAX_EXPONENT:
            break
        scale = 2.0 ** N
        # Any M >= 1 costs at least 2**N; nothing later can beat ``best``.
        if best is not None and (best[0] == 0 or scale > best[0]):
            break
        x = normH / scale
        for M in range(0, M_CAP + 1):
            if best is not None and M * scale >= best[0]:
                break
            if _scaled_remainder(x, M, scale) <= eps_tol:
                best = (M * scale, M, N)
                break
    if best is None:
        raise InfeasiblePlanError(
            f"no (M, N) with M <= {M_CAP} and N in [{n0}, {n0 + N_WINDOW}] "
            f"meets tolerance {eps_tol:g} for norm {normH:g}"
        )
    return best[1], best[2]


def select_params(normH, eps_tol):
    """Choose the Taylor order ``M`` and squaring count ``N``.

    Enumerates ``N`` over ``[N0, N0 + 50]`` with ``N0 = max(ceil(log2 normH), 0)``
    and, for each ``N``, the smallest feasible ``M``.  The pair with the
    smallest ``M * 2**N`` wins; ties go to the smaller ``N``.

    Raises
    ------
    InfeasiblePlanError
        If no pair with ``M <= 120`` satisfies the tolerance.
    """
    eps_tol = check_tolerance(eps_tol)
    return _enumerate(normH, eps_tol)


def alpha_bound(normH_scaled, eps):
    """Minimal ``M * 2**N`` meeting tolerance ``eps`` at the given norm.

    Multiplied by a bandwidth bound of the input, this bounds the
    eps-bandwidth of the exponential.
    """
    eps = check_tolerance(eps, "eps")
    M, N = _enumerate(normH_scaled, eps)
    return M * 2 ** N


@dataclass(frozen=True)
class ExpmPlan:
    """Parameters and per-step error budget of one exponential evaluation.

    ``eps_g_squaring[i-1]`` is the filter budget of squaring step ``i``.
    """

    M: int
    N: int
    scaled_norm: float
    r0: float
    r: tuple
    eps_tol: float
    a: float
    eps_g_taylor: float
    eps_g_squaring: tuple = field(default=())

    @property
    def r_N(self):
        return self.r[-1]

    @property
    def objective(self):
        return self.M * 2 ** self.N


def make_plan(normH, eps_tol, normal, normH_full=None):
    """Assemble an :class:`ExpmPlan`.

    Parameters
    ----------
    normH : float
        Frobenius norm used for (M, N) selection.
    eps_tol : float
        Target relative error, at least the unit roundoff.
    normal : bool
        Selects the budget fraction: ``a = 1/(N+1)`` for normal matrices,
        ``a = min(1, 1/normH_full)`` otherwise.
    normH_full : float, optional
        Norm used for the non-normal budget; defaults to ``normH``.
    """
    eps_tol = check_tolerance(eps_tol)
    M, N = _enumerate(normH, eps_tol)
    if normH_full is None:
        normH_full = normH
    scaled = math.ldexp(float(normH), -N)
    if normal:
        a = 1.0 / (1 + N)
    else:
        a = 1.0 if normH_full <= 1.0 else 1.0 / normH_full
    r0 = taylor_remainder_bound(scaled, M)
    r = propagate_error(r0, N)
    eps_taylor = a * r0 / (M * math.exp(2.0 * scaled)) if M > 0 else 0.0
    return ExpmPlan(
        M=M,
        N=N,
        scaled_norm=scaled,
        r0=r0,
        r=tuple(float(v) for v in r),
        eps_tol=eps_tol,
        a=a,
        eps_g_taylor=eps_taylor,
        eps_g_squaring=tuple(float(a * v) for v in r[1:]),
    )
