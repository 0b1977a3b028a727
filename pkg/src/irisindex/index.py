"""Enrollment database, exact expanding-neighborhood search and penetration rate."""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .embed import IntrinsicMap, fit_map, project_all
from .errors import DataError, DuplicateLabelError, SizeError, UnknownLabelError
from .model import EyeLabel, IntrinsicIrisCode, format_label

DEFAULT_BINS = 100


@dataclass(frozen=True, eq=False)
class EnrollmentDB:
    """Enrolled (label, code) pairs, kept sorted by formatted label."""

    labels: tuple
    coords: np.ndarray
    map_fingerprint: str = ""

    def __post_init__(self):
        labels = tuple(self.labels)
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[0] != len(labels):
            raise SizeError("coords must be an (N, d) array with one row per label")
        if coords.shape[0] == 0 or coords.shape[1] < 1:
            raise SizeError("an enrollment database needs at least one entry and one coordinate")
        if not np.all(np.isfinite(coords)):
            raise DataError("enrolled codes must be finite")
        names = [format_label(lab) for lab in labels]
        dups = sorted(name for name, c in Counter(names).items() if c > 1)
        if dups:
            raise DuplicateLabelError(f"label {dups[0]} enrolled more than once")
        order = sorted(range(len(names)), key=names.__getitem__)
        coords = coords[order]
        coords.flags.writeable = False
        object.__setattr__(self, "labels", tuple(labels[i] for i in order))
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "_row", {labels[i]: j for j, i in enumerate(order)})

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def row_of(self, label: EyeLabel) -> int:
        try:
            return self._row[label]
        except KeyError:
            raise UnknownLabelError(f"label {format_label(label)} is not enrolled") from None

    def __contains__(self, label) -> bool:
        return label in self._row

    def entries(self):
        return list(zip(self.labels, self.coords))


@dataclass(frozen=True)
class PenetrationResult:
    P: float
    samples: np.ndarray
    ranks: np.ndarray
    Q: int
    N: int
    bin_edges: np.ndarray
    histogram: np.ndarray


def enroll(imap: IntrinsicMap, averages) -> EnrollmentDB:
    codes = project_all(imap, averages)
    return EnrollmentDB(
        tuple(c.label for c in codes),
        np.stack([c.coords for c in codes]),
        imap.fingerprint,
    )


def _distances(db: EnrollmentDB, coords) -> np.ndarray:
    q = np.asarray(coords, dtype=np.float64).ravel()
    if q.size != db.d:
        raise SizeError(f"query has {q.size} coordinates, database has {db.d}")
    return np.sqrt(((db.coords - q) ** 2).sum(axis=1))


def _sorted_order(dist: np.ndarray) -> np.ndarray:
    # rows are already in label order, so a stable sort breaks distance ties by label
    return np.argsort(dist, kind="stable")


def query_rank(db: EnrollmentDB, query: IntrinsicIrisCode) -> int:
    """1-based position of the query's own eye in the distance-sorted enrollment list."""
    own = db.row_of(query.label)
    dist = _distances(db, query.coords)
    d_own = dist[own]
    closer = np.count_nonzero(dist < d_own)
    tied_before = np.count_nonzero(dist[:own] == d_own)
    return int(closer + tied_before + 1)


def ranked_candidates(db: EnrollmentDB, coords):
    """Full candidate list as ``[(label, distance), ...]`` in search order."""
    dist = _distances(db, coords)
    return [(db.labels[i], float(dist[i])) for i in _sorted_order(dist)]


def expanding_search(db: EnrollmentDB, coords, batch: int = 1):
    """Yield the enrolled entries nearest-first, ``batch`` at a time.

    Each batch is a list of ``(label, distance)`` pairs. The search is exact;
    a caller stops consuming once it has verified a match.
    """
    if batch < 1:
        raise DataError(f"batch must be >= 1, got {batch}")
    ranked = ranked_candidates(db, coords)
    for start in range(0, len(ranked), batch):
        yield ranked[start:start + batch]


def penetration(db: EnrollmentDB, queries, n_bins: int = DEFAULT_BINS, mapper=map) -> PenetrationResult:
    """Mean fraction of the database searched before each query's own eye turns up."""
    queries = list(queries)
    if not queries:
        raise DataError("penetration needs at least one query")
    if n_bins < 1:
        raise DataError("n_bins must be >= 1")
    ranks = np.fromiter(mapper(lambda q: query_rank(db, q), queries), dtype=np.int64, count=len(queries))
    Q, N = len(queries), db.n
    samples = ranks / N
    # integer total keeps P exact up to one rounding
    P = int(ranks.sum()) / (Q * N)
    counts, edges = np.histogram(samples, bins=n_bins, range=(0.0, 1.0))
    return PenetrationResult(P, samples, ranks, Q, N, edges, counts)


def dimension_sweep(averages, samples, dims, n_bins: int = DEFAULT_BINS) -> list:
    """``[(d, P), ...]`` for each mapping dimension, in the given order."""
    dims = list(dims)
    if not dims:
        raise DataError("dims must not be empty")
    averages = list(averages)
    samples = list(samples)
    rows = []
    for d in dims:
        imap = fit_map(averages, d)
        db = enroll(imap, averages)
        result = penetration(db, project_all(imap, samples), n_bins)
        rows.append((d, result.P))
    return rows

