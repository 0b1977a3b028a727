"""Correlation-dimension estimate of intrinsic dimension.

Neighborhood sizes are given as percentages. A percentage q maps to the
radius at which the correlation integral (the empirical CDF of pairwise
distances) reaches q/100, i.e. the q-quantile of the pair distances.
Equivalently, the average point has q/100 * (n - 1) neighbours inside it.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DegenerateError, DataError, InsufficientSamplesError

TABLE_RANGES = (
    (10, 20), (20, 30), (30, 40), (40, 50), (50, 60), (60, 70), (70, 80), (80, 90),
    (10, 90), (20, 80), (30, 70), (40, 60),
)

MAX_ZERO_FRACTION = 0.01


@dataclass(frozen=True)
class DistanceSet:
    n_points: int
    distances: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=np.float64)
        if self.n_points < 2:
            raise InsufficientSamplesError("a distance set needs at least 2 points")
        if d.size != self.n_points * (self.n_points - 1) // 2:
            raise DataError("distance count does not match n(n-1)/2")
        d.flags.writeable = False
        object.__setattr__(self, "distances", d)

    def __len__(self):
        return self.distances.size


@dataclass(frozen=True)
class DimEstimate:
    lo_pct: float
    hi_pct: float
    slope: float
    fit_rmse: float
    n_fit_points: int


def _as_matrix(X) -> np.ndarray:
    rows = X if isinstance(X, np.ndarray) else [getattr(x, "values", x) for x in X]
    try:
        mat = np.asarray(rows, dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"vectors have mismatched dimensions: {exc}") from None
    if mat.ndim == 1:
        mat = mat[:, None]
    if mat.ndim != 2:
        raise DataError("vectors have mismatched dimensions")
    return mat


def pairwise_distances(X) -> DistanceSet:
    """All unordered-pair Euclidean distances, sorted ascending.

    ``X`` may be an (n, D) array, a list of equal-length vectors or a list
    of key portions.
    """
    mat = _as_matrix(X)
    if mat.shape[0] < 2:
        raise InsufficientSamplesError("need at least two vectors")
    d = np.sort(pdist(mat, "euclidean"))
    return DistanceSet(mat.shape[0], d)


def correlation_integral(dset: DistanceSet, r: float) -> float:
    """Fraction of pairs strictly closer than ``r``."""
    if not r > 0:
        raise DataError(f"radius must be positive, got {r}")
    return int(np.searchsorted(dset.distances, r, side="left")) / len(dset)


def radius_at_fraction(dset: DistanceSet, q: float) -> float:
    if not 0 < q < 1:
        raise DataError(f"fraction must lie in (0, 1), got {q}")
    return float(np.quantile(dset.distances, q, method="linear"))


def _ensure_distances(X):
    return X if isinstance(X, DistanceSet) else pairwise_distances(X)


def estimate_dimension(X, lo_pct: float, hi_pct: float, n_fit_points: int = 16) -> DimEstimate:
    """Least-squares slope of log C(r) against log r over the given neighborhood range.

    ``X`` may also be a precomputed :class:`DistanceSet`.
    """
    if not 0 < lo_pct < hi_pct < 100:
        raise DataError(f"need 0 < lo_pct < hi_pct < 100, got ({lo_pct}, {hi_pct})")
    if n_fit_points < 2:
        raise DataError("n_fit_points must be >= 2")
    dset = _ensure_distances(X)
    n_zero = int(np.searchsorted(dset.distances, 0.0, side="right"))
    if n_zero > MAX_ZERO_FRACTION * len(dset):
        raise DegenerateError(f"{n_zero} of {len(dset)} pairs coincide")

    r_lo = radius_at_fraction(dset, lo_pct / 100.0)
    r_hi = radius_at_fraction(dset, hi_pct / 100.0)
    if not (r_lo > 0 and r_hi > r_lo):
        raise DegenerateError(f"degenerate radius range [{r_lo}, {r_hi}] for {lo_pct}-{hi_pct}%")

    radii = np.geomspace(r_lo, r_hi, n_fit_points)
    counts = np.searchsorted(dset.distances, radii, side="left")
    if counts[0] == 0:
        raise DegenerateError(f"correlation integral vanishes at r={r_lo}")
    x = np.log(radii)
    y = np.log(counts / len(dset))
    slope, intercept = np.polyfit(x, y, 1)
    rmse = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DimEstimate(float(lo_pct), float(hi_pct), float(slope), rmse, int(n_fit_points))


def dimension_table(X, ranges=TABLE_RANGES, n_fit_points: int = 16) -> list:
    """One estimate per range, all from a single shared distance set."""
    dset = _ensure_distances(X)
    return [estimate_dimension(dset, lo, hi, n_fit_points) for lo, hi in ranges]
