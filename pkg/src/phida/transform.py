"""Data-driven feature transformation applied before all distance computations.

Each feature is centered at its Hazen median and divided by a robust scale
raised to an adaptive exponent: the exponent is 0 when feature scales are
homogeneous (pure centering, distances preserved) and approaches 1 as scale
heterogeneity grows (full normalization).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .stats import coefficient_of_variation, hazen_quantiles_by_column

# IQR of a standard normal; turns an IQR into a std-comparable scale.
IQR_TO_SIGMA = 1.349
SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class TransformState:
    median: np.ndarray
    sigma_hat: np.ndarray  # floored at SIGMA_FLOOR
    gamma: float
    denom: np.ndarray  # sigma_hat ** gamma, cached

    @property
    def dim(self) -> int:
        return self.median.shape[0]


def scale_exponent(scales) -> float:
    """Exponent gamma = max(1 - 1/cv^2, 0) over positive finite scales.

    Returns 0 when the coefficient of variation is zero or undefined.
    """
    s = np.asarray(scales, dtype=float).ravel()
    positive = s[np.isfinite(s) & (s > 0)]
    if positive.size == 0:
        return 0.0
    cv = coefficient_of_variation(positive)
    if cv <= 0.0:
        return 0.0
    return max(1.0 - 1.0 / (cv * cv), 0.0)


def fit_transform_state(points) -> TransformState:
    """Fit the per-feature median, robust scale, and exponent from points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[0] == 0:
        raise ValueError("cannot fit transform on an empty point set")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain nonfinite values")
    q25, med, q75 = hazen_quantiles_by_column(pts, [0.25, 0.5, 0.75])
    raw_sigma = (q75 - q25) / IQR_TO_SIGMA
    gamma = scale_exponent(raw_sigma)
    sigma = np.maximum(raw_sigma, SIGMA_FLOOR)
    denom = sigma**gamma
    return TransformState(median=med, sigma_hat=sigma, gamma=gamma, denom=denom)


def apply_transform(state: TransformState, x) -> np.ndarray:
    """Map x (one vector or a matrix of rows) into the transformed space."""
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != state.dim:
        raise ValueError(f"dimension mismatch: got {arr.shape[-1]}, transform has {state.dim}")
    return (arr - state.median) / state.denom


class AdaptiveScaler(TransformerMixin, BaseEstimator):
    """sklearn-style wrapper around the adaptive feature transformation."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.state_ = fit_transform_state(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "state_")
        X = check_array(X, dtype=float)
        return apply_transform(self.state_, X)
