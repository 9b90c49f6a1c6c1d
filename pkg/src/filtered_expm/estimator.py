"""scikit-learn style wrapper around :func:`filtered_expm.engine.expm`."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_square_sparse
from .engine import DEFAULT_E_R, THRESHOLD_MODES, expm


class SparseExpm(TransformerMixin, BaseEstimator):
    """Fit the exponential of a sparse matrix, then propagate samples with it.

    ``fit(H)`` computes ``E = I + T_hat ~ exp(H)``.  ``transform(X)`` treats
    every row of ``X`` as a state vector ``x`` and returns rows ``(E x)^T``,
    i.e. ``X @ E.T``, so a fitted instance drops into a ``Pipeline`` as a
    linear propagator (one time step of ``x' = H x``).

    Parameters
    ----------
    tol : float, default=1e-16
        Relative error tolerance of the exponential.
    e_r : float, default=0.1
        Slack of each filter call.
    normal : {"auto", True, False}, default="auto"
        Normality assumption for the filter budget.
    threshold_mode : {"absolute", "scaled"}, default="absolute"
    filtering : bool, default=True
        Set ``False`` for plain unfiltered incremental squaring.

    Attributes
    ----------
    result_ : ExpmResult
    t_hat_ : scipy.sparse.csr_array
        Incremental part of the exponential.
    plan_ : ExpmPlan
    n_features_in_ : int
    """

    def __init__(self, tol=1e-16, e_r=DEFAULT_E_R, normal="auto",
                 threshold_mode="absolute", filtering=True):
        self.tol = tol
        self.e_r = e_r
        self.normal = normal
        self.threshold_mode = threshold_mode
        self.filtering = filtering

    def fit(self, X, y=None):
        """Compute the exponential of the square matrix ``X``."""
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")
        if self.normal not in ("auto", True, False):
            raise ValueError("normal must be 'auto', True or False")
        H = check_square_sparse(X, name="X")
        self.result_ = expm(
            H,
            self.tol,
            e_r=self.e_r,
            normal=self.normal,
            threshold_mode=self.threshold_mode,
            filtering=self.filtering,
        )
        self.t_hat_ = self.result_.t_hat
        self.plan_ = self.result_.plan
        self.n_features_in_ = H.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return X + (self.t_hat_ @ X.T).T

    def exponential(self):
        """Materialized sparse ``I + T_hat``."""
        check_is_fitted(self, "result_")
        return self.result_.materialize()
