"""Monte Carlo estimators built on the path simulator"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .claims import ClaimDistribution
from .errors import DomainError, NumericalFailure
from .model import ConstantFraction, InsuranceModel, Market, Strategy, Utility
from .simulate import BatchOutcome, RngStream, SimGrid, simulate_batch

# Stream namespaces keep the DPP sub-estimates on disjoint random streams
_NS_VALUE = (1,)
_NS_OUTER = (2,)
_NS_INNER = 3

# Inner DPP paths are batched across outer paths, about this many per task
NESTED_CHUNK_PATHS = 4000


@dataclass(frozen=True)
class RuinEstimate:
    p_hat: float
    n_paths: int
    n_ruined: int
    std_err: float
    ci95_low: float
    ci95_high: float


@dataclass(frozen=True)
class ValueEstimate:
    v_hat: float
    n_paths: int
    std_err: float
    n_ruined: int = 0


@dataclass(frozen=True)
class TableCell:
    x: float
    distribution: ClaimDistribution
    strategy: str
    estimate: RuinEstimate


@dataclass(frozen=True)
class DppResult:
    gap: float
    std_err: float
    passed: bool
    best_fraction: float
    value: ValueEstimate
    continuation: Dict[float, Tuple[float, float]] = field(default_factory=dict)


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion"""
    if n < 1:
        raise DomainError("Wilson interval needs n >= 1")
    p_hat = successes / n
    z = stats.norm.ppf(1 - (1 - confidence) / 2)
    a = p_hat + z ** 2 / (2 * n)
    b = math.sqrt(p_hat * (1 - p_hat) / n + z ** 2 / (4 * n ** 2))
    c = 1 + z ** 2 / n
    lower = (a - z * b) / c
    upper = (a + z * b) / c
    # keep p_hat inside the interval despite rounding
    return max(0.0, min(lower, p_hat)), min(1.0, max(upper, p_hat))


def _run_chunk(task: tuple) -> BatchOutcome:
    model, market, utility, strategy, grid, master_seed, namespace, start, end = task
    streams = [RngStream(master_seed, i, namespace) for i in range(start, end)]
    return simulate_batch(model, market, utility, strategy, grid, streams)


def _run_nested_chunk(task: tuple) -> BatchOutcome:
    model, market, utility, strategy, grid, master_seed, outer_indices, surpluses, n_inner = task
    streams = [RngStream(master_seed, j, (_NS_INNER, int(i))) for i in outer_indices for j in range(n_inner)]
    initial = np.repeat(np.asarray(surpluses, dtype=float), n_inner)
    return simulate_batch(model, market, utility, strategy, grid, streams, initial_surplus=initial)


class MonteCarloEstimator:
    """Ruin and value estimators over independent per-path random streams"""

    def __init__(self, config: Optional[dict] = None):
        """
        Initialize the estimator

        Args:
            config: Dictionary with 'workers', 'chunk_size' and 'max_nested_paths'
        """
        self.logger = logging.getLogger(__name__)
        config = config or {}

        self.workers = int(config.get('workers', 1))
        self.chunk_size = int(config.get('chunk_size', 250))
        self.max_nested_paths = int(config.get('max_nested_paths', 1_000_000))

        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        if self.chunk_size < 1:
            raise DomainError(f"chunk_size must be >= 1, got {self.chunk_size}")

    def run_paths(
        self,
        model: InsuranceModel,
        market: Market,
        utility: Utility,
        strategy: Strategy,
        grid: SimGrid,
        n_paths: int,
        master_seed: int,
        namespace: Tuple[int, ...] = (),
    ) -> BatchOutcome:
        """Simulate streams 0..n_paths-1; chunking depends only on chunk_size"""
        if n_paths < 1:
            raise DomainError(f"n_paths must be >= 1, got {n_paths}")

        tasks = [
            (model, market, utility, strategy, grid, master_seed, namespace, start, min(start + self.chunk_size, n_paths))
            for start in range(0, n_paths, self.chunk_size)
        ]

        batch = BatchOutcome.concatenate(self._map(_run_chunk, tasks))
        self._check_valid(batch, master_seed)
        return batch

    def run_nested(
        self,
        model: InsuranceModel,
        market: Market,
        utility: Utility,
        strategy: Strategy,
        grid: SimGrid,
        outer_indices: Sequence[int],
        surpluses: Sequence[float],
        n_inner: int,
        master_seed: int,
    ) -> np.ndarray:
        """
        Mean accumulated utility of n_inner paths started from each surplus

        Inner path j of outer path i draws from stream j in namespace (3, i),
        so batching never changes a path. Tasks hold whole outer paths.
        """
        if len(outer_indices) != len(surpluses):
            raise DomainError("run_nested needs one surplus per outer index")
        if n_inner < 1:
            raise DomainError(f"n_inner must be >= 1, got {n_inner}")
        if len(outer_indices) == 0:
            return np.empty(0)

        per_task = max(1, NESTED_CHUNK_PATHS // n_inner)
        tasks = [
            (model, market, utility, strategy, grid, master_seed,
             list(outer_indices[k:k + per_task]), list(surpluses[k:k + per_task]), n_inner)
            for k in range(0, len(outer_indices), per_task)
        ]
        batch = BatchOutcome.concatenate(self._map(_run_nested_chunk, tasks))
        self._check_valid(batch, master_seed)
        return batch.accumulated_utility.reshape(len(outer_indices), n_inner).mean(axis=1)

    def _map(self, func, tasks: List[tuple]) -> List[BatchOutcome]:
        if self.workers == 1 or len(tasks) == 1:
            return [func(task) for task in tasks]
        with ProcessPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(func, tasks))

    @staticmethod
    def _check_valid(batch: BatchOutcome, master_seed: int):
        if not batch.valid.all():
            bad = np.flatnonzero(~batch.valid)
            raise NumericalFailure(
                "simulation produced invalid paths",
                {"count": len(bad), "stream_indices": bad[:10].tolist(), "master_seed": master_seed},
            )

    def estimate_ruin(
        self,
        model: InsuranceModel,
        market: Market,
        utility: Utility,
        strategy: Strategy,
        grid: SimGrid,
        n_paths: int,
        master_seed: int,
    ) -> RuinEstimate:
        """Fraction of ruined paths with Wald standard error and Wilson 95% interval"""
        start = time.time()
        batch = self.run_paths(model, market, utility, strategy, grid, n_paths, master_seed)
        n = len(batch)
        n_ruined = int(batch.ruined.sum())
        p_hat = n_ruined / n
        std_err = math.sqrt(p_hat * (1 - p_hat) / n)
        low, high = wilson_interval(n_ruined, n)

        self.logger.info(
            f"Ruin estimate x0={model.x0:g} {model.claims.describe()} {strategy.label}: "
            f"p_hat={p_hat:.4f} ({n_ruined}/{n_paths}) in {time.time() - start:.1f}s"
        )
        return RuinEstimate(p_hat, n_paths, n_ruined, std_err, low, high)

    def estimate_value(
        self,
        model: InsuranceModel,
        market: Market,
        utility: Utility,
        strategy: Strategy,
        grid: SimGrid,
        n_paths: int,
        master_seed: int,
        namespace: Tuple[int, ...] = (),
    ) -> ValueEstimate:
        """Sample mean and standard error of the accumulated utility"""
        batch = self.run_paths(model, market, utility, strategy, grid, n_paths, master_seed, namespace)
        return _value_from(batch.accumulated_utility, int(batch.ruined.sum()))

    def sweep_table(
        self,
        model_template: InsuranceModel,
        market: Market,
        utility: Utility,
        grid: SimGrid,
        x_values: Sequence[float],
        strategies: Sequence[Strategy],
        n_paths: int,
        master_seed: int,
        distributions: Optional[Sequence[ClaimDistribution]] = None,
    ) -> List[TableCell]:
        """
        Ruin estimates per (distribution, x, strategy)

        Every cell uses the same master seed, so strategies compared at a
        fixed x run on common random numbers.
        """
        if not x_values:
            raise DomainError("sweep_table needs at least one x value")
        if not strategies:
            raise DomainError("sweep_table needs at least one strategy")
        distributions = list(distributions) if distributions else [model_template.claims]

        cells = []
        for dist in distributions:
            for x in sorted(x_values):
                model = InsuranceModel(float(x), model_template.c, model_template.lam, dist)
                for strategy in strategies:
                    estimate = self.estimate_ruin(model, market, utility, strategy, grid, n_paths, master_seed)
                    cells.append(TableCell(float(x), dist, strategy.label, estimate))
        return cells

    def dpp_consistency(
        self,
        model: InsuranceModel,
        market: Market,
        utility: Utility,
        grid: SimGrid,
        h: float,
        candidate_fractions: Sequence[float],
        n_outer: int,
        n_inner: int,
        master_seed: int,
    ) -> DppResult:
        """
        Signed gap G = V(x) - max_theta E[int_0^{h^tau} phi ds + V(h, X_h)]

        V is the value of the best constant-fraction candidate on [0, T]; the
        continuation value at h is a nested estimate with n_inner paths per
        outer path under that same candidate. Passes when G >= -3 std_err.
        """
        if not candidate_fractions:
            raise DomainError("dpp_consistency needs at least one candidate fraction")
        if not (0.0 < h < utility.T):
            raise DomainError(f"h must lie in (0, T={utility.T}), got {h!r}")
        steps_to_h = h / utility.T * grid.n_steps
        k = int(round(steps_to_h))
        if abs(steps_to_h - k) > 1e-9 * max(1.0, steps_to_h) or k < 1 or k >= grid.n_steps:
            raise DomainError(f"h={h} is not aligned with the {grid.n_steps}-step grid on [0, {utility.T}]")
        if n_outer < 2 or n_inner < 1:
            raise DomainError("dpp_consistency needs n_outer >= 2 and n_inner >= 1")
        if n_outer * n_inner > self.max_nested_paths:
            raise DomainError(
                f"nested budget n_outer*n_inner={n_outer * n_inner} exceeds max_nested_paths={self.max_nested_paths}"
            )

        start = time.time()
        candidates = [ConstantFraction(float(theta)) for theta in candidate_fractions]

        values = [
            self.estimate_value(model, market, utility, s, grid, n_outer, master_seed, _NS_VALUE) for s in candidates
        ]
        best_index = int(np.argmax([v.v_hat for v in values]))
        best = candidates[best_index]
        value = values[best_index]

        head_utility = utility.with_horizon(h)
        head_grid = SimGrid(k)
        tail_utility = utility.with_horizon(utility.T - h)
        tail_grid = SimGrid(grid.n_steps - k)
        shift = math.exp(-utility.kappa * utility.alpha * h)

        continuation: Dict[float, Tuple[float, float]] = {}
        for strategy in candidates:
            outer = self.run_paths(model, market, head_utility, strategy, head_grid, n_outer, master_seed, _NS_OUTER)
            totals = outer.accumulated_utility.copy()
            survivors = np.flatnonzero(~outer.ruined)
            inner_means = self.run_nested(
                model, market, tail_utility, best, tail_grid,
                survivors.tolist(), outer.terminal_surplus[survivors].tolist(), n_inner, master_seed,
            )
            totals[survivors] += shift * inner_means
            estimate = _value_from(totals, int(outer.ruined.sum()))
            continuation[strategy.theta] = (estimate.v_hat, estimate.std_err)

        best_theta = max(continuation, key=lambda theta: continuation[theta][0])
        cont_mean, cont_se = continuation[best_theta]
        gap = value.v_hat - cont_mean
        std_err = math.sqrt(value.std_err ** 2 + cont_se ** 2)
        passed = gap >= -3.0 * std_err

        self.logger.info(
            f"DPP check: G={gap:.6g} std_err={std_err:.3g} ({'PASS' if passed else 'FAIL'}) "
            f"best fraction {best.theta:g}, {n_outer}x{n_inner} nested paths in {time.time() - start:.1f}s"
        )
        return DppResult(gap, std_err, passed, best.theta, value, continuation)


def _value_from(samples: np.ndarray, n_ruined: int) -> ValueEstimate:
    n = len(samples)
    v_hat = float(np.mean(samples))
    std_err = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ValueEstimate(v_hat, n, std_err, n_ruined)
