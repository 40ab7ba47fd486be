"""Distribution bookkeeping: N_std, unit-mean normalization, CDF distances and the c_std search."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable

import numpy as np
from modules.enums import CutoffMode, DistributionKind, Group
from modules.ensembles import EnsembleSample, ExcisedConfig, ExcisionExhausted, draw_pool
from modules.errors import ConvergenceError

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)

# PoolSampler(start, count) -> samples for draws start .. start + count - 1
PoolSampler = Callable[[int, int], list[EnsembleSample]]


def base_n_std(x: float, level: int = 3) -> int:
    """round(log(sqrt(M) X / (2 pi e))): the size whose eigenphase density matches the zero density."""
    v = math.log(math.sqrt(level) * x / (2 * math.pi * math.e))
    if v < 1:
        raise ValueError(f"X = {x:g} too small: log(sqrt({level}) X / (2 pi e)) = {v:.3f} < 1")
    return round(v)


def n_std(x: float, group: Group, level: int = 3) -> int:
    """Matrix size modelling twists up to X; doubled for SO(2N) and USp(2N)."""
    base = base_n_std(x, level)
    return 2 * base if group.doubled else base


@dataclass
class EmpiricalDistribution:
    values: np.ndarray
    keys: np.ndarray
    kind: DistributionKind
    normalization: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.keys = np.asarray(self.keys, dtype=np.int64)
        if self.values.size == 0:
            raise ValueError(f"empty {self.kind.value} distribution")
        if self.values.shape != self.keys.shape:
            raise ValueError("values and keys differ in length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"{self.kind.value} distribution has non-finite values")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, float]], kind: DistributionKind) -> EmpiricalDistribution:
        keys, values = zip(*pairs) if pairs else ((), ())
        return cls(np.array(values, dtype=np.float64), np.array(keys, dtype=np.int64), kind)

    def __len__(self):
        return self.values.size

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def cdf(self, points) -> np.ndarray:
        ordered = np.sort(self.values)
        return np.searchsorted(ordered, np.asarray(points, dtype=np.float64), side="right") / ordered.size

    def ordered_by_key(self) -> EmpiricalDistribution:
        order = np.argsort(self.keys, kind="stable")
        return replace(self, values=self.values[order], keys=self.keys[order])

    def subset(self, mask: np.ndarray) -> EmpiricalDistribution:
        return replace(self, values=self.values[mask], keys=self.keys[mask])


def normalize_to_unit_mean(dist: EmpiricalDistribution) -> EmpiricalDistribution:
    mean = dist.mean
    if not mean > 0:
        raise ValueError(f"cannot normalize a distribution with mean {mean}")
    return replace(dist, values=dist.values / mean, normalization=mean)


def split_small_large(dist: EmpiricalDistribution) -> tuple[EmpiricalDistribution, EmpiricalDistribution]:
    """First half of the discriminant ordering is small conductor; an odd extra element goes to it."""
    if len(dist) < 2:
        raise ValueError("need at least two samples to split")
    ordered = dist.ordered_by_key()
    middle = (len(ordered) + 1) // 2
    index = np.arange(len(ordered))
    return ordered.subset(index < middle), ordered.subset(index >= middle)


def default_eval_points(a: EmpiricalDistribution, b: EmpiricalDistribution, count: int = 40) -> np.ndarray:
    """`count` equally spaced points across the pooled 1st to 99th percentile range."""
    pooled = np.concatenate([a.values, b.values])
    low, high = np.percentile(pooled, [1, 99])
    if high <= low:
        high = low + 1.0
    return np.linspace(low, high, count)


def cdf_discrepancy(a: EmpiricalDistribution, b: EmpiricalDistribution, eval_points) -> float:
    """Area between the two empirical CDFs: |F_a - F_b| at each midpoint times the interval width."""
    points = np.asarray(eval_points, dtype=np.float64)
    if points.size < 2:
        raise ValueError("need at least two evaluation points")
    if np.any(np.diff(points) < 0):
        raise ValueError("evaluation points must be sorted")
    midpoints = (points[1:] + points[:-1]) / 2
    widths = np.diff(points)
    return float(np.sum(np.abs(a.cdf(midpoints) - b.cdf(midpoints)) * widths))


@dataclass
class DensityTable:
    edges: np.ndarray
    density: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return (self.edges[1:] + self.edges[:-1]) / 2

    @property
    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


def density_histogram(values, n_bins: int, value_range: tuple[float, float]) -> DensityTable:
    if n_bins < 1:
        raise ValueError("n_bins must be at least 1")
    low, high = value_range
    if not high > low:
        raise ValueError(f"empty histogram range {value_range}")
    if isinstance(values, EmpiricalDistribution):
        values = values.values
    density, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=n_bins, range=(low, high), density=True)
    return DensityTable(edges, np.nan_to_num(density))


def lowest_phase_distribution(samples: Sequence[EnsembleSample], absolute: bool = False) -> EmpiricalDistribution:
    return EmpiricalDistribution(
        np.array([s.lowest_phase(absolute) for s in samples]),
        np.array([s.draw if s.draw is not None else i for i, s in enumerate(samples)]),
        DistributionKind.LOWEST_EIGENPHASE,
    )


def mean_lowest_eigenphase(group: Group, n: int, n_samples: int, seed: int, absolute: bool = False) -> float:
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    return lowest_phase_distribution(draw_pool(group, n, seed, n_samples), absolute).mean


def pooled_phase_density(samples: Sequence[EnsembleSample], n_bins: int = 100) -> DensityTable:
    """Density of all positive eigenphases on (0, pi]: flat for U, raised at 0 for SO, depleted for USp."""
    phases = np.concatenate([s.eigenphases[s.eigenphases > 0] for s in samples])
    return density_histogram(phases, n_bins, (0.0, math.pi))


@dataclass(frozen=True)
class EnsembleContext:
    """Random-matrix side of a c_std search: SO(2 n_std) draws from the stream `seed`."""

    n_std: int
    n_matrices: int
    seed: int
    max_attempts: int = 1_000_000
    eval_point_count: int = 40
    sampler: PoolSampler | None = None

    @property
    def matrix_size(self) -> int:
        return 2 * self.n_std

    def draw(self, start: int, count: int) -> list[EnsembleSample]:
        if self.sampler is not None:
            return self.sampler(start, count)
        return draw_pool(Group.SO_EVEN, self.matrix_size, self.seed, count, start)


@dataclass
class CutoffSearchResult:
    candidates: np.ndarray
    discrepancies: np.ndarray
    argmin: float
    mode: CutoffMode
    acceptance_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.discrepancies)


def excision_cutoff(c: float, k: int, n_std_base: int) -> float:
    return ExcisedConfig(c, k, n_std_base).cutoff


def _extend_until_accepted(pool: list[EnsembleSample], lambdas: np.ndarray, cutoff: float, ctx: EnsembleContext):
    # pool doubles until n_matrices draws pass the cutoff or max_attempts draws have been made
    while np.count_nonzero(lambdas >= cutoff) < ctx.n_matrices and len(pool) < ctx.max_attempts:
        batch = min(len(pool), ctx.max_attempts - len(pool))
        more = ctx.draw(len(pool), batch)
        pool.extend(more)
        lambdas = np.concatenate([lambdas, [s.lambda_at_one for s in more]])
    return pool, lambdas


def excised_sample(weight: int, c: float, ctx: EnsembleContext) -> list[EnsembleSample]:
    """The first n_matrices SO(2 n_std) draws of the stream with |Lambda_A(1)| >= c exp((1 - k) n_std / 2)."""
    cutoff = excision_cutoff(c, weight, ctx.n_std)
    pool = ctx.draw(0, ctx.n_matrices)
    pool, lambdas = _extend_until_accepted(pool, np.array([s.lambda_at_one for s in pool]), cutoff, ctx)
    accepted = np.flatnonzero(lambdas >= cutoff)
    if accepted.size < ctx.n_matrices:
        raise ExcisionExhausted(cutoff, len(pool), int(accepted.size), ctx.n_matrices)
    return [pool[i] for i in accepted[: ctx.n_matrices]]


def _zeros_vs_excised(weight, zero_dist, ctx: EnsembleContext, grid):
    zeros = normalize_to_unit_mean(zero_dist)
    pool = ctx.draw(0, ctx.n_matrices)
    lambdas = np.array([s.lambda_at_one for s in pool])
    unexcised = normalize_to_unit_mean(lowest_phase_distribution(pool))
    eval_points = default_eval_points(zeros, unexcised, ctx.eval_point_count)

    discrepancies, rates = [], []
    for c in grid:
        cutoff = excision_cutoff(c, weight, ctx.n_std)
        # common random numbers: every candidate filters the same stream of draws
        pool, lambdas = _extend_until_accepted(pool, lambdas, cutoff, ctx)
        accepted = np.flatnonzero(lambdas >= cutoff)
        rates.append(accepted.size / len(pool))
        if accepted.size < ctx.n_matrices:
            logger.info(f"c_std candidate {c:g} infeasible: acceptance rate {rates[-1]:.3g}")
            discrepancies.append(math.nan)
            continue
        chosen = [pool[i] for i in accepted[: ctx.n_matrices]]
        excised = normalize_to_unit_mean(lowest_phase_distribution(chosen))
        discrepancies.append(cdf_discrepancy(zeros, excised, eval_points))
        logger.debug(f"c_std candidate {c:g}: discrepancy {discrepancies[-1]:.6f}, acceptance {rates[-1]:.3g}")
    return discrepancies, rates


def _values_vs_charpoly(weight, value_dist, ctx: EnsembleContext, grid):
    values = normalize_to_unit_mean(value_dist)
    pool = ctx.draw(0, ctx.n_matrices)
    charpoly = normalize_to_unit_mean(
        EmpiricalDistribution(
            np.array([s.lambda_at_one for s in pool]),
            np.array([s.draw if s.draw is not None else i for i, s in enumerate(pool)]),
            DistributionKind.CHARPOLY_VALUE,
        )
    )
    eval_points = default_eval_points(values, charpoly, ctx.eval_point_count)

    discrepancies, rates = [], []
    for c in grid:
        cutoff = excision_cutoff(c, weight, ctx.n_std)
        kept_values = values.values >= cutoff
        kept_charpoly = charpoly.values >= cutoff
        rates.append(float(np.mean(kept_charpoly)))
        if not kept_values.any() or not kept_charpoly.any():
            discrepancies.append(math.nan)
            continue
        discrepancies.append(
            cdf_discrepancy(values.subset(kept_values), charpoly.subset(kept_charpoly), eval_points)
        )
    return discrepancies, rates


def estimate_c_std(
    weight: int,
    dist: EmpiricalDistribution,
    ctx: EnsembleContext,
    grid: Sequence[float],
    mode: CutoffMode = CutoffMode.ZEROS_VS_EXCISED,
) -> CutoffSearchResult:
    """Grid search for the excision constant c_std minimizing the CDF discrepancy.

    `dist` holds lowest zeros for ZEROS_VS_EXCISED and central values for VALUES_VS_CHARPOLY.
    """
    candidates = np.asarray(grid, dtype=np.float64)
    if candidates.size == 0:
        raise ValueError("empty candidate grid")
    if np.any(np.diff(candidates) <= 0):
        raise ValueError("candidate grid must be strictly ascending")

    if mode is CutoffMode.ZEROS_VS_EXCISED:
        discrepancies, rates = _zeros_vs_excised(weight, dist, ctx, candidates)
    else:
        discrepancies, rates = _values_vs_charpoly(weight, dist, ctx, candidates)

    discrepancies = np.asarray(discrepancies, dtype=np.float64)
    if not np.isfinite(discrepancies).any():
        raise ConvergenceError("every c_std candidate was infeasible")
    best = int(np.nanargmin(discrepancies))
    logger.info(f"c_std search ({mode.value}): argmin {candidates[best]:g}, discrepancy {discrepancies[best]:.6f}")
    return CutoffSearchResult(candidates, discrepancies, float(candidates[best]), mode, np.asarray(rates))


@dataclass
class Comparison:
    """Unit-mean zeros against unit-mean lowest eigenphases, plus the small/large conductor split."""

    zeros: EmpiricalDistribution
    eigenphases: EmpiricalDistribution
    small: EmpiricalDistribution
    large: EmpiricalDistribution
    zeros_density: DensityTable
    eigen_density: DensityTable
    small_density: DensityTable
    large_density: DensityTable
    excised: EmpiricalDistribution | None = None
    excised_density: DensityTable | None = None


def compare_distributions(
    zero_dist: EmpiricalDistribution,
    eigen_dist: EmpiricalDistribution,
    excised_dist: EmpiricalDistribution | None = None,
    n_bins: int = 40,
) -> Comparison:
    zeros = normalize_to_unit_mean(zero_dist)
    eigen = normalize_to_unit_mean(eigen_dist)
    small, large = split_small_large(zeros)
    excised = None if excised_dist is None else normalize_to_unit_mean(excised_dist)

    upper = max(float(np.percentile(zeros.values, 99.5)), float(np.percentile(eigen.values, 99.5)), 2.0)
    value_range = (0.0, upper)
    return Comparison(
        zeros=zeros,
        eigenphases=eigen,
        small=small,
        large=large,
        zeros_density=density_histogram(zeros, n_bins, value_range),
        eigen_density=density_histogram(eigen, n_bins, value_range),
        small_density=density_histogram(small, n_bins, value_range),
        large_density=density_histogram(large, n_bins, value_range),
        excised=excised,
        excised_density=None if excised is None else density_histogram(excised, n_bins, value_range),
    )
