"""
Path simulation of the controlled surplus process

Euler steps run between consecutive event times (uniform grid nodes merged
with exact claim arrival times). Each path draws from its own RngStream in a
fixed order: arrivals, then claim uniforms, then one Gaussian uniform per
sub-step. Compared configurations that share a stream therefore see the same
arrivals, claims and Gaussians (common random numbers).
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .errors import DomainError
from .model import InsuranceModel, Market, Strategy, Utility

logger = logging.getLogger(__name__)

# Uniforms are kept away from 0 and 1 before inverse-CDF transforms
UNIFORM_EPS = 1e-16

ClaimSchedule = Sequence[Tuple[float, float]]


@dataclass(frozen=True)
class SimGrid:
    """Uniform time grid with n_steps intervals over the utility horizon"""

    n_steps: int

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps!r}")

    def step(self, T: float) -> float:
        """Grid spacing on [0, T]"""
        return T / self.n_steps

    def nodes(self, T: float) -> np.ndarray:
        """Grid times h, 2h, ..., T (time 0 excluded)"""
        return np.linspace(0.0, T, self.n_steps + 1)[1:]


@dataclass(frozen=True)
class RngStream:
    """Independent random stream identified by (master_seed, stream_index)"""

    master_seed: int
    stream_index: int
    namespace: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.stream_index < 0:
            raise DomainError(f"stream_index must be >= 0, got {self.stream_index!r}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed & 0xFFFFFFFFFFFFFFFF,
            spawn_key=tuple(self.namespace) + (self.stream_index,),
        )
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class PathOutcome:
    ruined: bool
    ruin_time: Optional[float]
    terminal_surplus: float
    accumulated_utility: float
    n_claims: int
    valid: bool = True


@dataclass(frozen=True)
class BatchOutcome:
    """Per-path results of a batch, in the order of the streams given"""

    ruined: np.ndarray
    ruin_time: np.ndarray
    terminal_surplus: np.ndarray
    accumulated_utility: np.ndarray
    n_claims: np.ndarray
    valid: np.ndarray

    def __len__(self) -> int:
        return len(self.ruined)

    def path(self, i: int) -> PathOutcome:
        ruined = bool(self.ruined[i])
        return PathOutcome(
            ruined=ruined,
            ruin_time=float(self.ruin_time[i]) if ruined else None,
            terminal_surplus=float(self.terminal_surplus[i]),
            accumulated_utility=float(self.accumulated_utility[i]),
            n_claims=int(self.n_claims[i]),
            valid=bool(self.valid[i]),
        )

    @classmethod
    def concatenate(cls, parts: Sequence["BatchOutcome"]) -> "BatchOutcome":
        return cls(*(np.concatenate([getattr(p, name) for p in parts]) for name in cls.__dataclass_fields__))


def _draw_arrivals(rng: np.random.Generator, lam: float, T: float) -> np.ndarray:
    if lam <= 0:
        return np.empty(0)
    times: List[float] = []
    t = rng.exponential(1.0 / lam)
    while t < T:
        times.append(t)
        t += rng.exponential(1.0 / lam)
    return np.asarray(times, dtype=float)


def draw_arrivals(lam: float, T: float, stream: RngStream) -> np.ndarray:
    """Poisson arrival times in (0, T) from cumulative Exponential(lam) gaps"""
    if not (lam > 0 and T > 0):
        raise DomainError(f"draw_arrivals needs lambda > 0 and T > 0, got lambda={lam!r}, T={T!r}")
    return _draw_arrivals(stream.generator(), lam, T)


def _uniforms(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.clip(rng.random(n), UNIFORM_EPS, 1.0 - UNIFORM_EPS)


def _path_events(
    model: InsuranceModel,
    T: float,
    grid_nodes: np.ndarray,
    stream: RngStream,
    schedule: Optional[ClaimSchedule],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Event times, claim amounts (0 at grid nodes) and standard normals for one path"""
    rng = stream.generator()
    if schedule is None:
        arrivals = _draw_arrivals(rng, model.lam, T)
        amounts = np.asarray(model.claims.sample(_uniforms(rng, len(arrivals))), dtype=float).reshape(-1)
    else:
        ordered = sorted((float(t), float(a)) for t, a in schedule if 0.0 < t < T)
        arrivals = np.asarray([t for t, _ in ordered], dtype=float)
        amounts = np.asarray([a for _, a in ordered], dtype=float)

    times = np.concatenate([grid_nodes, arrivals])
    jumps = np.concatenate([np.zeros(len(grid_nodes)), amounts])
    # grid node first when an arrival coincides with it
    order = np.argsort(times, kind="stable")
    normals = special.ndtri(_uniforms(rng, len(times)))
    return times[order], jumps[order], normals


def simulate_batch(
    model: InsuranceModel,
    market: Market,
    utility: Utility,
    strategy: Strategy,
    grid: SimGrid,
    streams: Sequence[RngStream],
    schedules: Optional[Sequence[Optional[ClaimSchedule]]] = None,
    initial_surplus: Optional[Sequence[float]] = None,
) -> BatchOutcome:
    """
    Simulate one path per stream, vectorised across the batch

    Args:
        schedules: optional per-path list of (time, amount) claims replacing
            the random arrivals and claim draws (Gaussians still come from
            the stream)
        initial_surplus: optional per-path starting surplus replacing model.x0
    """
    n = len(streams)
    if n == 0:
        raise DomainError("simulate_batch needs at least one stream")
    if initial_surplus is None:
        x = np.full(n, float(model.x0))
    else:
        x = np.array(initial_surplus, dtype=float)
        if x.shape != (n,) or np.any(x < 0):
            raise DomainError("initial_surplus needs one non-negative value per stream")
    T = utility.T
    nodes = grid.nodes(T)
    per_path = [
        _path_events(model, T, nodes, s, None if schedules is None else schedules[i]) for i, s in enumerate(streams)
    ]
    width = max(len(p[0]) for p in per_path)

    # Padding uses zero-length steps at T
    times = np.full((n, width), T)
    jumps = np.zeros((n, width))
    normals = np.zeros((n, width))
    n_claims = np.zeros(n, dtype=np.int64)
    for i, (t_i, j_i, z_i) in enumerate(per_path):
        times[i, : len(t_i)] = t_i
        jumps[i, : len(j_i)] = j_i
        normals[i, : len(z_i)] = z_i
        n_claims[i] = len(t_i) - len(nodes)

    alive = np.ones(n, dtype=bool)
    valid = np.ones(n, dtype=bool)
    ruin_time = np.full(n, np.nan)
    util = np.zeros(n)
    t_prev = np.zeros(n)
    excess = market.mu - market.r

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(width):
            t_k = times[:, k]
            delta = t_k - t_prev
            theta = strategy.evaluate(t_prev, x)
            util += np.where(alive, utility.phi(t_prev, x) * delta, 0.0)

            drift = model.c + (market.r + excess * theta) * x
            x_new = x + drift * delta + market.sigma * theta * x * np.sqrt(delta) * normals[:, k]
            x_new = x_new - jumps[:, k]

            broken = alive & ~np.isfinite(x_new)
            if broken.any():
                valid &= ~broken
                alive &= ~broken
            newly_ruined = alive & (x_new < 0)
            ruin_time[newly_ruined] = t_k[newly_ruined]
            alive &= ~newly_ruined
            x = np.where(alive, x_new, 0.0)
            t_prev = t_k

    if not valid.all():
        logger.error(f"{int((~valid).sum())} path(s) produced non-finite surplus and were flagged invalid")

    ruined = ~np.isnan(ruin_time)
    return BatchOutcome(
        ruined=ruined,
        ruin_time=ruin_time,
        terminal_surplus=x,
        accumulated_utility=util,
        n_claims=n_claims,
        valid=valid,
    )


def simulate_path(
    model: InsuranceModel,
    market: Market,
    utility: Utility,
    strategy: Strategy,
    grid: SimGrid,
    stream: RngStream,
    schedule: Optional[ClaimSchedule] = None,
) -> PathOutcome:
    """Single controlled surplus path; see simulate_batch"""
    batch = simulate_batch(
        model, market, utility, strategy, grid, [stream], None if schedule is None else [schedule]
    )
    return batch.path(0)


def deterministic_surplus(x0: float, c: float, r: float, t: float) -> float:
    """x e^{rt} + (c/r)(e^{rt} - 1): surplus with no claims and no investment"""
    if r == 0:
        return x0 + c * t
    return x0 * math.exp(r * t) + c / r * math.expm1(r * t)
