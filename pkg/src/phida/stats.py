"""Robust statistics used across the pipeline.

Hazen quantiles (plotting position (i - 0.5)/n with linear interpolation),
streaming Welford moments, and the coefficient of variation.
"""

from __future__ import annotations

import numpy as np


def hazen_quantile(values, q: float) -> float:
    """Hazen quantile of a finite sample.

    Sorting the sample ascending as v_1..v_n, the quantile sits at virtual
    position q*n + 0.5, clamped to [1, n], with linear interpolation between
    the two bracketing order statistics.  q = 0 and q = 1 therefore return
    the minimum and maximum.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(v)):
        raise ValueError("sample contains nonfinite values")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level {q} outside [0, 1]")
    return float(np.quantile(v, q, method="hazen"))


def hazen_median(values) -> float:
    return hazen_quantile(values, 0.5)


def hazen_iqr(values) -> float:
    """Interquartile range Q75 - Q25 under the Hazen convention; >= 0."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(v)):
        raise ValueError("sample contains nonfinite values")
    q25, q75 = np.quantile(v, [0.25, 0.75], method="hazen")
    return float(q75 - q25)


def hazen_quantiles_by_column(matrix: np.ndarray, levels) -> np.ndarray:
    """Column-wise Hazen quantiles of a 2-D array; returns (len(levels), d)."""
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError("expected a nonempty 2-D array")
    return np.quantile(matrix, levels, axis=0, method="hazen")


def coefficient_of_variation(values) -> float:
    """Population std divided by mean, for positive finite entries.

    The caller is expected to filter to positive finite values; an empty
    input raises so callers can fall back to an undefined-cv branch.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("undefined cv: empty sample")
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("cv requires positive finite entries")
    mean = float(v.mean())
    return float(v.std() / mean)


class WelfordState:
    """Single-pass per-feature mean / m2 accumulator.

    The derived standard deviation uses the n-1 denominator and is zero
    until two samples have been seen.
    """

    __slots__ = ("count", "mean", "m2")

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def update(self, x) -> "WelfordState":
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: got {x.shape[0]}, state has {self.dim}")
        if not np.all(np.isfinite(x)):
            raise ValueError("nonfinite sample")
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)
        return self

    def std(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros(self.dim)
        return np.sqrt(np.maximum(self.m2, 0.0) / (self.count - 1))

    def copy(self) -> "WelfordState":
        out = WelfordState(self.dim)
        out.count = self.count
        out.mean = self.mean.copy()
        out.m2 = self.m2.copy()
        return out
