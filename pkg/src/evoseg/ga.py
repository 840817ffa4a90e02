"""Genetic search over bin-to-cluster assignments.

A candidate solution is a flat bitstring: each bin gets ceil(log2 c) bits
(most significant first) holding its cluster label, folded by ``mod c``
when the raw value overflows. Every bitstring of the right length decodes
to a valid assignment, so crossover and mutation never need a repair pass,
and the three reference string lengths (62 bins at c=3 -> 124 bits, 64 at
c=2 -> 64, 156 at c=6 -> 468) fall straight out of the formula.

The loop is a plain generational GA: size-2 tournament selection on raw J
(lower is fitter), single-point crossover, a single uniformly-placed bit
flip per chromosome with the configured probability, and elitism so the
best J never regresses. An optional per-bit mutation mode (each bit flips
independently with the configured probability) is available for
experiments but is not the default.

Reproducibility: one ``numpy.random.default_rng(seed)`` stream drives the
whole run. Draws happen in a fixed, documented order -- population init,
then per generation: all tournament index draws, all crossover decisions,
all cut positions, all mutation decisions, all mutation positions (cut and
position draws happen whether or not the matching decision fired, keeping
the stream aligned). Identical config and seed therefore reproduce the
result bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .clustering import (
    Assignment,
    _population_objective,
    objective_j,
    weighted_centroids,
)
from .errors import CapacityError, ConfigError, ConsistencyError
from .histogram import BinnedHistogram


def label_bits(c: int) -> int:
    """Bits needed per bin to hold a label in [0, c)."""
    if c < 1:
        raise ConfigError(f"cluster count must be >= 1, got {c}")
    return math.ceil(math.log2(c)) if c > 1 else 0


def chromosome_length(n: int, c: int) -> int:
    """Total bitstring length for n bins and c clusters."""
    return n * label_bits(c)


@dataclass
class GaConfig:
    """Knobs for one evolutionary run. Defaults match the reference setup."""

    clusters: int
    population: int = 50
    generations: int = 10000
    crossover_rate: float = 0.95
    mutation_rate: float = 0.85
    elitism: int = 1
    tournament_size: int = 2
    seed: int = 0
    early_stop_stall: int | None = None
    mutation_mode: str = "per-chromosome"

    def validate(self) -> None:
        if self.clusters < 2:
            raise ConfigError(f"clusters must be >= 2, got {self.clusters}")
        if self.population < 2:
            raise ConfigError(f"population must be >= 2, got {self.population}")
        if self.generations < 0:
            raise ConfigError(f"generations must be >= 0, got {self.generations}")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigError(f"crossover rate {self.crossover_rate} outside [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError(f"mutation rate {self.mutation_rate} outside [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ConfigError(
                f"elitism must be in [0, population), got {self.elitism}"
            )
        if self.tournament_size < 2:
            raise ConfigError(
                f"tournament size must be >= 2, got {self.tournament_size}"
            )
        if self.early_stop_stall is not None and self.early_stop_stall < 1:
            raise ConfigError("early-stop stall must be a positive generation count")
        if self.mutation_mode not in ("per-chromosome", "per-bit"):
            raise ConfigError(
                f"mutation mode must be 'per-chromosome' or 'per-bit', "
                f"got {self.mutation_mode!r}"
            )


@dataclass
class GaResult:
    """Outcome of one run: best individual plus the convergence history."""

    best_assignment: Assignment
    best_j: float
    history: list[tuple[float, float]] = field(repr=False)  # (best J, mean J)
    generations_run: int
    elapsed: float


def decode(chrom: np.ndarray, n: int, c: int) -> Assignment:
    """Turn a bitstring into an assignment of n bins to c clusters.

    Bin j's label is the integer in bits [j*b, (j+1)*b), MSB first, taken
    mod c. Raises ConsistencyError if the length is not n * b.
    """
    bits = np.asarray(chrom, dtype=np.uint8)
    b = label_bits(c)
    if bits.ndim != 1 or bits.shape[0] != n * b:
        raise ConsistencyError(
            f"chromosome length {bits.shape[0] if bits.ndim == 1 else bits.shape} "
            f"does not match {n} bins x {b} bits"
        )
    if b == 0:
        return Assignment(labels=(0,) * n, clusters=c)
    labels = _decode_labels(bits[None, :], n, c)[0]
    return Assignment(labels=tuple(int(v) for v in labels), clusters=c)


def _decode_labels(bits_mat: np.ndarray, n: int, c: int) -> np.ndarray:
    """(rows, L) bit matrix -> (rows, n) label matrix, MSB-first, mod c."""
    b = label_bits(c)
    pow2 = 1 << np.arange(b - 1, -1, -1, dtype=np.int64)
    raw = bits_mat.reshape(bits_mat.shape[0], n, b).astype(np.int64) @ pow2
    return raw % c


def fitness(chrom: np.ndarray, bins: BinnedHistogram, c: int) -> float:
    """J of the decoded assignment; lower is fitter."""
    asg = decode(chrom, len(bins), c)
    return objective_j(bins, asg, weighted_centroids(bins, asg))


def tournament_select(
    population: np.ndarray,
    fitnesses: np.ndarray,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Pick the best of ``size`` uniform draws (with replacement).

    Ties go to the earliest-drawn contestant.
    """
    if population.shape[0] == 0:
        raise ConsistencyError("cannot select from an empty population")
    idx = rng.integers(0, population.shape[0], size=size)
    winner = idx[int(np.argmin(fitnesses[idx]))]
    return population[winner].copy()


def crossover(
    p1: np.ndarray,
    p2: np.ndarray,
    rate: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Single-point crossover with the given probability, else copies.

    The cut is uniform on [1, L-1] and the suffixes are swapped.
    """
    a = np.asarray(p1, dtype=np.uint8)
    b = np.asarray(p2, dtype=np.uint8)
    if a.shape != b.shape:
        raise ConsistencyError(f"parent lengths differ: {a.shape} vs {b.shape}")
    if a.shape[0] < 2:
        raise ConsistencyError("crossover needs chromosomes of at least 2 bits")
    if rng.random() < rate:
        cut = int(rng.integers(1, a.shape[0]))
        return (
            np.concatenate([a[:cut], b[cut:]]),
            np.concatenate([b[:cut], a[cut:]]),
        )
    return a.copy(), b.copy()


def mutate(
    chrom: np.ndarray,
    rate: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """With the given probability, flip exactly one uniformly chosen bit.

    The output is always within Hamming distance 1 of the input.
    """
    out = np.asarray(chrom, dtype=np.uint8).copy()
    if rng.random() < rate:
        pos = int(rng.integers(0, out.shape[0]))
        out[pos] ^= 1
    return out


def evolve(bins: BinnedHistogram, cfg: GaConfig) -> GaResult:
    """Run the generational GA and return the best assignment found.

    The history records (best J, mean J) of the population at generation 0
    (the random initialisation) and after every evolution step. With
    elitism >= 1 the best-J column is non-increasing. The run halts at the
    generation budget, or earlier when ``early_stop_stall`` consecutive
    generations fail to improve the best J.
    """
    cfg.validate()
    n = len(bins)
    c = cfg.clusters
    L = chromosome_length(n, c)
    if L == 0:
        raise CapacityError("zero-length chromosome: nothing to evolve")

    x = bins.centres
    f = bins.frequencies
    rng = np.random.default_rng(cfg.seed)
    start = time.perf_counter()

    pop = rng.integers(0, 2, size=(cfg.population, L), dtype=np.uint8)
    jvec = _population_objective(_decode_labels(pop, n, c), x, f, c)

    best_idx = int(np.argmin(jvec))
    best_j = float(jvec[best_idx])
    best_bits = pop[best_idx].copy()
    history = [(best_j, float(jvec.mean()))]

    pairs = (cfg.population - cfg.elitism + 1) // 2
    col = np.arange(L)
    stall = 0
    gens_run = 0

    for _ in range(cfg.generations):
        elite_rows = np.argsort(jvec, kind="stable")[: cfg.elitism]

        sel = rng.integers(0, cfg.population, size=(pairs, 2, cfg.tournament_size))
        pick = np.argmin(jvec[sel], axis=2)  # first drawn wins ties
        parent_idx = np.take_along_axis(sel, pick[:, :, None], axis=2)[:, :, 0]
        pa = pop[parent_idx[:, 0]]
        pb = pop[parent_idx[:, 1]]

        if L >= 2:
            cross_u = rng.random(pairs)
            cuts = rng.integers(1, L, size=pairs)
            swap = (cross_u < cfg.crossover_rate)[:, None] & (col >= cuts[:, None])
            child_a = np.where(swap, pb, pa)
            child_b = np.where(swap, pa, pb)
        else:
            child_a, child_b = pa.copy(), pb.copy()

        if cfg.mutation_mode == "per-chromosome":
            mut_u = rng.random((pairs, 2))
            mut_pos = rng.integers(0, L, size=(pairs, 2))
            for slot, child in ((0, child_a), (1, child_b)):
                hit = mut_u[:, slot] < cfg.mutation_rate
                child[hit, mut_pos[hit, slot]] ^= 1
        else:
            flips = (rng.random((pairs, 2, L)) < cfg.mutation_rate).astype(np.uint8)
            child_a ^= flips[:, 0]
            child_b ^= flips[:, 1]

        offspring = np.empty((2 * pairs, L), dtype=np.uint8)
        offspring[0::2] = child_a
        offspring[1::2] = child_b
        pop = np.concatenate([pop[elite_rows], offspring])[: cfg.population]
        jvec = _population_objective(_decode_labels(pop, n, c), x, f, c)
        gens_run += 1

        gen_best = int(np.argmin(jvec))
        gen_best_j = float(jvec[gen_best])
        history.append((gen_best_j, float(jvec.mean())))

        if gen_best_j < best_j:
            best_j = gen_best_j
            best_bits = pop[gen_best].copy()
            stall = 0
        else:
            stall += 1
            if cfg.early_stop_stall is not None and stall >= cfg.early_stop_stall:
                break

    best_assignment = decode(best_bits, n, c)
    cen = weighted_centroids(bins, best_assignment)
    return GaResult(
        best_assignment=best_assignment,
        best_j=objective_j(bins, best_assignment, cen),
        history=history,
        generations_run=gens_run,
        elapsed=time.perf_counter() - start,
    )
