"""scikit-learn style wrappers around the omega-along-Beatty pipeline."""

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ValidationError
from .reals import BeattySpec, floor_linear_array
from .stats import empirical_dK, loglog, omega_of


def _check_n(X):
    X = check_array(X, dtype=np.int64, ensure_2d=False)
    X = X.reshape(-1)
    if X.size and X.min() < 1:
        raise ValidationError("inputs must be positive integers n")
    return X


class BeattyOmegaTransformer(TransformerMixin, BaseEstimator):
    """Maps n to (omega(floor(alpha n + beta)) - center) / scale.

    ``fit`` fixes N as the largest n seen and sets center = log log N and
    scale = sqrt(log log N), unless ``standardize`` is False.
    """

    def __init__(self, alpha="sqrt:2", beta="rational:0", standardize=True, cache_dir=None):
        self.alpha = alpha
        self.beta = beta
        self.standardize = standardize
        self.cache_dir = cache_dir

    def fit(self, X, y=None):
        X = _check_n(X)
        self.spec_ = BeattySpec.parse(self.alpha, self.beta)
        self.N_ = int(X.max())
        ll = loglog(self.N_)
        self.center_ = ll if self.standardize else 0.0
        self.scale_ = math.sqrt(ll) if self.standardize else 1.0
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = _check_n(X)
        floors = floor_linear_array(self.spec_.alpha, self.spec_.beta, X)
        w = omega_of(floors, self.cache_dir)
        return ((w - self.center_) / self.scale_).reshape(-1, 1)

    def score(self, X, y=None):
        """Negative Kolmogorov distance to N(0, 1), so larger is better."""
        return -empirical_dK(self.transform(X)[:, 0])


class OmegaSampleTransformer(TransformerMixin, BaseEstimator):
    """Standardizes already computed omega counts (one column per coordinate)."""

    def __init__(self, N=None):
        self.N = N

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.N_ = int(self.N) if self.N is not None else len(X)
        ll = loglog(self.N_)
        self.center_, self.scale_ = ll, math.sqrt(ll)
        return self

    def transform(self, X):
        check_is_fitted(self, "center_")
        X = check_array(X, dtype=np.float64)
        return (X - self.center_) / self.scale_
