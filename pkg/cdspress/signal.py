"""Smoothing and correlation of per-window series."""
from typing import Any

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.stats import gaussian_kde, pearsonr

from cdspress.exceptions import InsufficientData, InvalidArgument, UndefinedCorrelation
from cdspress.literals import KERNEL_TRUNCATION


def _as_series(values: Any) -> np.ndarray:
    series = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(series)):
        raise InvalidArgument("Series entries must be finite")
    return series


def gaussian_smooth(values: Any, radius: float) -> np.ndarray:
    """Convolve with a Gaussian kernel of standard deviation ``radius``.

    The kernel is truncated at 4 standard deviations; near the edges the
    truncated kernel is renormalized to the mass that falls inside the series.

    >>> gaussian_smooth([2.0, 2.0, 2.0], 1.0).round(12).tolist()
    [2.0, 2.0, 2.0]
    """
    if not radius > 0:
        raise InvalidArgument(f"Smoothing radius must be positive, got {radius}")
    series = _as_series(values)
    if len(series) == 0:
        raise InvalidArgument("Cannot smooth an empty series")
    kwargs = dict(sigma=radius, mode="constant", cval=0.0, truncate=KERNEL_TRUNCATION)
    mass = gaussian_filter1d(np.ones_like(series), **kwargs)
    return gaussian_filter1d(series, **kwargs) / mass


def pearson(a: Any, b: Any) -> float:
    """Sample Pearson correlation coefficient.

    >>> round(pearson([1, 2, 3], [2, 4, 7]), 4)
    0.9934
    """
    x, y = _as_series(a), _as_series(b)
    if len(x) != len(y):
        raise InvalidArgument(f"Series lengths differ: {len(x)} != {len(y)}")
    if len(x) < 2:
        raise UndefinedCorrelation("fewer than two observations")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelation("constant series")
    return float(np.clip(pearsonr(x, y)[0], -1.0, 1.0))


def silverman_bandwidth(positions: Any) -> float:
    """Gaussian kernel bandwidth for a set of positions, by the Silverman rule."""
    points = _as_series(positions)
    if len(points) < 2 or np.ptp(points) == 0:
        raise InsufficientData("Bandwidth needs at least two distinct positions")
    kde = gaussian_kde(points, bw_method="silverman")
    return float(np.sqrt(kde.covariance[0, 0]))


def smoothed_correlation(a: Any, b: Any, radius: float) -> float:
    """Pearson correlation of two per-window series, both smoothed with one radius."""
    if len(a) < 2:
        raise UndefinedCorrelation("fewer than two valid windows")
    return pearson(gaussian_smooth(a, radius), gaussian_smooth(b, radius))
