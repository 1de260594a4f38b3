"""Parameter containers: insurance model, market, utility and strategies"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Union

import numpy as np

from .claims import ClaimDistribution, net_profit_holds
from .errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class InsuranceModel:
    """Cramer-Lundberg surplus X_t = x0 + c t - Q_t"""

    x0: float
    c: float
    lam: float
    claims: ClaimDistribution

    def __post_init__(self):
        if not (math.isfinite(self.x0) and self.x0 >= 0):
            raise DomainError(f"initial surplus x0 must be >= 0, got {self.x0!r}")
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"premium rate c must be > 0, got {self.c!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise DomainError(f"claim intensity lambda must be >= 0, got {self.lam!r}")
        if not net_profit_holds(self.c, self.lam, self.claims):
            raise DomainError(
                f"net profit condition fails: c/lambda={self.c / self.lam:g} "
                f"<= E[U]={self.claims.mean():g}"
            )

    def with_surplus(self, x0: float) -> "InsuranceModel":
        return InsuranceModel(x0, self.c, self.lam, self.claims)

    def with_claims(self, claims: ClaimDistribution) -> "InsuranceModel":
        return InsuranceModel(self.x0, self.c, self.lam, claims)


@dataclass(frozen=True)
class Market:
    """Black-Scholes market: bond rate r, stock drift mu and volatility sigma"""

    r: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise DomainError(f"risk-free rate r must be >= 0, got {self.r!r}")
        if not math.isfinite(self.mu):
            raise DomainError(f"drift mu must be finite, got {self.mu!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"volatility sigma must be > 0, got {self.sigma!r}")
        if self.mu <= self.r:
            logger.warning(f"mu={self.mu} <= r={self.r}: investing in the stock is never optimal")

    @classmethod
    def from_variance(cls, r: float, mu: float, sigma2: float) -> "Market":
        if not (math.isfinite(sigma2) and sigma2 > 0):
            raise DomainError(f"sigma2 must be > 0, got {sigma2!r}")
        return cls(r, mu, math.sqrt(sigma2))

    @property
    def sigma2(self) -> float:
        return self.sigma ** 2

    @property
    def excess_return(self) -> float:
        return self.mu - self.r


@dataclass(frozen=True)
class Utility:
    """Cobb-Douglas utility phi(t, x) = x^(1-alpha) exp(-kappa alpha t) on [0, T]"""

    alpha: float
    kappa: float
    T: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not math.isfinite(self.kappa):
            raise DomainError(f"kappa must be finite, got {self.kappa!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError(f"horizon T must be > 0, got {self.T!r}")

    def phi(self, t: ArrayLike, x: ArrayLike) -> ArrayLike:
        x_arr = np.maximum(np.asarray(x, dtype=float), 0.0)
        value = x_arr ** (1.0 - self.alpha) * np.exp(-self.kappa * self.alpha * np.asarray(t, dtype=float))
        if np.ndim(value) == 0:
            return float(value)
        return value

    def with_horizon(self, T: float) -> "Utility":
        return Utility(self.alpha, self.kappa, T)


def unclamped_merton(market: Market, alpha: float) -> float:
    """(mu - r) / (sigma^2 alpha) when mu > r, else 0"""
    if market.excess_return <= 0:
        return 0.0
    return market.excess_return / (market.sigma2 * alpha)


class Strategy(ABC):
    """Rule mapping (t, x) to the invested fraction in [0, 1]"""

    @property
    @abstractmethod
    def label(self) -> str:
        ...

    @abstractmethod
    def fraction(self) -> float:
        ...

    def evaluate(self, t: ArrayLike, x: ArrayLike) -> ArrayLike:
        """Invested fraction at (t, x); the amount in the stock is fraction * x"""
        theta = self.fraction()
        if np.ndim(x) == 0 and np.ndim(t) == 0:
            return theta
        return np.full(np.broadcast(np.asarray(t), np.asarray(x)).shape, theta)


@dataclass(frozen=True)
class NoInvestment(Strategy):
    label = "no_invest"

    def fraction(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantFraction(Strategy):
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= 1.0):
            raise DomainError(f"invested fraction must lie in [0, 1], got {self.theta!r}")

    @property
    def label(self) -> str:
        return f"fraction_{self.theta:g}"

    def fraction(self) -> float:
        return self.theta


@dataclass(frozen=True)
class MertonClamped(Strategy):
    """Merton ratio clamped into [0, 1]; fixed at construction"""

    theta: float
    label = "merton"

    @classmethod
    def from_market(cls, market: Market, utility: Utility) -> "MertonClamped":
        raw = unclamped_merton(market, utility.alpha)
        return cls(min(max(raw, 0.0), 1.0))

    def __post_init__(self):
        if not (0.0 <= self.theta <= 1.0):
            raise DomainError(f"clamped Merton fraction must lie in [0, 1], got {self.theta!r}")

    def fraction(self) -> float:
        return self.theta


def evaluate(strategy: Strategy, t: ArrayLike, x: ArrayLike) -> ArrayLike:
    """Invested fraction of the strategy at time(s) t and surplus(es) x"""
    return strategy.evaluate(t, x)


def strategy_from_token(token: str, market: Market, utility: Utility) -> Strategy:
    """Parse 'none', 'merton' or a decimal fraction into a strategy"""
    key = str(token).strip().lower()
    if key in ("none", "no_invest", "0"):
        return NoInvestment()
    if key == "merton":
        return MertonClamped.from_market(market, utility)
    try:
        theta = float(key)
    except ValueError:
        raise DomainError(f"unknown strategy '{token}' (expected none, merton or a fraction)") from None
    return ConstantFraction(theta)
