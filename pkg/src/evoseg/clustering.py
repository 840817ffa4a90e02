"""Weighted k-means objective, Lloyd baseline, and exhaustive oracle.

An assignment maps every occupied bin to one of ``c`` clusters. The cost
of an assignment is the frequency-weighted within-cluster sum of squared
distances

    J = sum_j f_j * ||X_j - C_{label_j}||^2

where C_i is the frequency-weighted mean of cluster i's member bins. The
weighted mean is the unique minimiser of J for a fixed assignment, so a
bin with frequency f behaves exactly like f unit-weight points at the
same coordinates. Empty clusters are legal and contribute nothing.

Floating-point discipline: centroids are accumulated with ``np.bincount``
(sequential, in ascending bin order) and J is reduced with a single 1-D
``np.sum`` over bins in ascending order. ``_population_objective`` applies
the identical operation sequence to a whole batch of label vectors at
once, so batch and single-assignment values agree bit for bit. Everything
that reports a J value funnels through one of these two paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConfigError, ConsistencyError, EmptyInputError
from .histogram import BinnedHistogram

# Hard cap on c**n for the exhaustive search; beyond this the enumeration
# is refused rather than attempted.
ORACLE_BOUND = 2**20

# Label vectors per chunk in the exhaustive sweep; bounds peak memory at
# roughly chunk * n bytes for labels plus chunk * c floats per channel.
_CHUNK = 1 << 14


@dataclass(frozen=True)
class Assignment:
    """One cluster label per bin, each in [0, clusters)."""

    labels: tuple[int, ...]
    clusters: int

    def __post_init__(self) -> None:
        if self.clusters < 1:
            raise ConfigError(f"cluster count must be >= 1, got {self.clusters}")
        for lab in self.labels:
            if not 0 <= lab < self.clusters:
                raise ConfigError(
                    f"label {lab} outside [0, {self.clusters})"
                )


@dataclass
class Centroids:
    """Per-cluster weighted means; unoccupied clusters carry NaN centres."""

    centres: np.ndarray  # (c, 3) float64, NaN rows where unoccupied
    weights: np.ndarray  # (c,) float64, sums of member frequencies
    occupancy: np.ndarray  # (c,) bool


def _labels_array(bins: BinnedHistogram, asg: Assignment) -> np.ndarray:
    if len(asg.labels) != len(bins):
        raise ConsistencyError(
            f"assignment has {len(asg.labels)} labels for {len(bins)} bins"
        )
    return np.asarray(asg.labels, dtype=np.int64)


def weighted_centroids(bins: BinnedHistogram, asg: Assignment) -> Centroids:
    """Frequency-weighted mean colour of every cluster under ``asg``."""
    labels = _labels_array(bins, asg)
    c = asg.clusters
    f = bins.frequencies
    x = bins.centres
    weights = np.bincount(labels, weights=f, minlength=c)
    sums = np.empty((c, 3), dtype=np.float64)
    for ch in range(3):
        sums[:, ch] = np.bincount(labels, weights=f * x[:, ch], minlength=c)
    occupancy = weights > 0
    centres = np.full((c, 3), np.nan)
    centres[occupancy] = sums[occupancy] / weights[occupancy, None]
    return Centroids(centres=centres, weights=weights, occupancy=occupancy)


def objective_j(bins: BinnedHistogram, asg: Assignment, cen: Centroids) -> float:
    """Frequency-weighted within-cluster sum of squared distances."""
    labels = _labels_array(bins, asg)
    if cen.centres.shape[0] != asg.clusters:
        raise ConsistencyError(
            f"{cen.centres.shape[0]} centroids for {asg.clusters} clusters"
        )
    diff = bins.centres - cen.centres[labels]
    terms = bins.frequencies * (diff * diff).sum(axis=1)
    return float(terms.sum())


def _population_objective(
    labels_mat: np.ndarray, x: np.ndarray, f: np.ndarray, c: int
) -> np.ndarray:
    """J for every row of a (rows, n) label matrix, bit-equal to objective_j.

    The flattened bincount visits bins in the same order per cluster slot as
    the per-assignment path, and each row's final reduction is a 1-D sum over
    the same contiguous term layout, so no float divergence is possible.
    """
    rows, n = labels_mat.shape
    offset = labels_mat + c * np.arange(rows, dtype=np.int64)[:, None]
    flat = offset.ravel()
    weights = np.bincount(flat, weights=np.broadcast_to(f, (rows, n)).ravel(),
                          minlength=rows * c).reshape(rows, c)
    sums = np.empty((rows, c, 3), dtype=np.float64)
    for ch in range(3):
        wx = np.broadcast_to(f * x[:, ch], (rows, n)).ravel()
        sums[:, :, ch] = np.bincount(flat, weights=wx,
                                     minlength=rows * c).reshape(rows, c)
    centres = np.full((rows, c, 3), np.nan)
    occ = weights > 0
    centres[occ] = sums[occ] / weights[occ][:, None]

    gathered = centres[np.arange(rows)[:, None], labels_mat]  # (rows, n, 3)
    diff = x - gathered
    terms = f * (diff * diff).sum(axis=2)
    out = np.empty(rows, dtype=np.float64)
    for r in range(rows):
        out[r] = terms[r].sum()
    return out


def lloyd_kmeans(
    bins: BinnedHistogram,
    c: int,
    seed: int,
    max_iter: int = 100,
) -> tuple[Assignment, float]:
    """Classical alternating k-means on the binned histogram.

    Starts from ``c`` distinct bins drawn uniformly by ``seed`` (all bins
    when ``c`` >= bin count), then alternates nearest-centre assignment
    (ties to the lowest cluster index) with weighted-centroid updates until
    the assignment stops changing or ``max_iter`` is hit. J never increases
    from one iteration to the next.
    """
    final: tuple[Assignment, float] | None = None
    for asg, j in lloyd_iterations(bins, c, seed, max_iter):
        final = (asg, j)
    assert final is not None
    return final


def lloyd_iterations(bins: BinnedHistogram, c: int, seed: int, max_iter: int):
    """Yield (assignment, J) after the initial assignment and every update."""
    if c < 1:
        raise ConfigError(f"cluster count must be >= 1, got {c}")
    if len(bins) == 0:
        raise EmptyInputError("cannot cluster an empty histogram")
    n = len(bins)
    x = bins.centres
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=min(c, n), replace=False)
    centres = np.full((c, 3), np.nan)
    centres[: len(chosen)] = x[chosen]
    occupancy = np.zeros(c, dtype=bool)
    occupancy[: len(chosen)] = True

    labels = _nearest(x, centres, occupancy)
    for _ in range(max_iter):
        asg = Assignment(labels=tuple(int(v) for v in labels), clusters=c)
        cen = weighted_centroids(bins, asg)
        yield asg, objective_j(bins, asg, cen)
        new_labels = _nearest(x, cen.centres, cen.occupancy)
        if np.array_equal(new_labels, labels):
            return
        labels = new_labels
    asg = Assignment(labels=tuple(int(v) for v in labels), clusters=c)
    cen = weighted_centroids(bins, asg)
    yield asg, objective_j(bins, asg, cen)


def _nearest(x: np.ndarray, centres: np.ndarray, occupancy: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centres[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    d2[:, ~occupancy] = np.inf
    return np.argmin(d2, axis=1)  # argmin takes the lowest index on ties


def brute_force_optimum(bins: BinnedHistogram, c: int) -> tuple[Assignment, float]:
    """Exhaustively enumerate all c**n label vectors; return a J-minimiser.

    Enumeration is in lexicographic label order and only a strictly better
    J replaces the incumbent, so ties resolve to the lexicographically
    smallest optimal vector. Refuses instances with c**n > ORACLE_BOUND.
    """
    if c < 1:
        raise ConfigError(f"cluster count must be >= 1, got {c}")
    n = len(bins)
    if n == 0:
        raise EmptyInputError("cannot cluster an empty histogram")
    space = _search_space(c, n)
    if space > ORACLE_BOUND:
        raise CapacityError(
            f"exhaustive search needs {c}**{n} = {space} evaluations, "
            f"above the bound of {ORACLE_BOUND}"
        )

    x = bins.centres
    f = bins.frequencies
    radix = c ** np.arange(n - 1, -1, -1, dtype=np.int64)  # first bin varies slowest
    best_j = np.inf
    best_row = None
    for start in range(0, space, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, space), dtype=np.int64)
        labels_mat = (codes[:, None] // radix) % c
        js = _population_objective(labels_mat, x, f, c)
        k = int(np.argmin(js))
        if js[k] < best_j:
            best_j = float(js[k])
            best_row = labels_mat[k].copy()

    asg = Assignment(labels=tuple(int(v) for v in best_row), clusters=c)
    return asg, objective_j(bins, asg, weighted_centroids(bins, asg))


def _search_space(c: int, n: int) -> int:
    if c >= 2 and n > ORACLE_BOUND.bit_length():
        return ORACLE_BOUND + 1  # definitely over; avoid a giant power
    return c**n
