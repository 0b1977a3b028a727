"""Linear PCA map from key-portion space to the intrinsic iris code space."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InsufficientSamplesError, RankDeficiencyError, SizeError, DataError
from .model import IntrinsicIrisCode, KeyPortion, format_label


@dataclass(frozen=True, eq=False)
class IntrinsicMap:
    """Fitted PCA map.

    ``components`` holds ``d`` orthonormal rows ordered by decreasing
    explained variance. Variances use the sample (n - 1) normalization.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).ravel()
        comps = np.array(self.components, dtype=np.float64)
        var = np.array(self.explained_variance, dtype=np.float64).ravel()
        if comps.ndim != 2 or comps.shape[0] < 1:
            raise SizeError("components must be a non-empty 2-D array")
        if mean.size != comps.shape[1] or var.size != comps.shape[0]:
            raise SizeError("mean, components and variances disagree in shape")
        for a in (mean, comps, var):
            a.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "explained_variance", var)

    @property
    def d(self) -> int:
        return self.components.shape[0]

    @property
    def dim_in(self) -> int:
        return self.components.shape[1]

    @cached_property
    def fingerprint(self) -> str:
        from .fileio import map_fingerprint

        return map_fingerprint(self)


def _fix_signs(components: np.ndarray) -> np.ndarray:
    # largest-magnitude element positive; argmax returns the lowest index on ties
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def fit_map(averages, d: int = 4) -> IntrinsicMap:
    """Fit a ``d``-component PCA map.

    Inputs are put in label order first, so the fitted map does not depend
    on the order in which the averages were supplied.
    """
    if d < 1:
        raise DataError(f"d must be >= 1, got {d}")
    averages = sorted(averages, key=lambda k: (format_label(k.label), k.sample_id))
    n = len(averages)
    if n <= d:
        raise InsufficientSamplesError(f"fitting d={d} needs more than {d} samples, got {n}")
    X = np.stack([k.values for k in averages])
    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = s[0] * max(centered.shape) * np.finfo(np.float64).eps if s.size else 0.0
    rank = int(np.count_nonzero(s > tol))
    if rank < d:
        raise RankDeficiencyError(f"centered data has rank {rank} < d={d}")
    components = _fix_signs(vt[:d])
    variance = s[:d] ** 2 / (n - 1)
    return IntrinsicMap(mean, components, variance)


def project_vector(imap: IntrinsicMap, values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size != imap.dim_in:
        raise SizeError(f"expected {imap.dim_in} values, got {v.size}")
    return imap.components @ (v - imap.mean)


def project(imap: IntrinsicMap, key: KeyPortion) -> IntrinsicIrisCode:
    return IntrinsicIrisCode(project_vector(imap, key.values), key.label)


def project_all(imap: IntrinsicMap, keys) -> list:
    # row by row, so batch and single projections agree bit for bit
    return [project(imap, k) for k in keys]

