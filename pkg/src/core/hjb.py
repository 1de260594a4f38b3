"""
Closed-form quantities of the HJB problem with Cobb-Douglas utility

With V(t, x) = f^alpha(t) x^(1-alpha) and z = f^alpha the HJB equation reduces to
z' - R z = -exp(-kappa alpha t), z(T) = 0, where R = K + alpha (1-alpha) sigma^2 theta*^2 / 2.
K depends on x; HjbSolution freezes it at a reference surplus.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from .claims import truncated_power_moment
from .errors import DomainError
from .model import InsuranceModel, Market, Utility, unclamped_merton

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Relative slack when checking 0 <= t <= T
_TIME_TOL = 1e-12


def merton_fraction(market: Market, alpha: float) -> float:
    """Unclamped Merton ratio (mu - r) / (sigma^2 alpha), or 0 when mu <= r"""
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not market.sigma > 0:
        raise DomainError(f"sigma must be > 0, got {market.sigma!r}")
    return unclamped_merton(market, alpha)


def clamped_merton_fraction(market: Market, alpha: float) -> float:
    return min(max(merton_fraction(market, alpha), 0.0), 1.0)


def _investment_drift(market: Market, theta_star: float) -> float:
    return market.r + market.excess_return * theta_star


def K_of_x(model: InsuranceModel, market: Market, utility: Utility, theta_star: float, x: float) -> float:
    """
    K(x) = lambda E[x^(1-a) - (x-U)^(1-a)] / x^(1-a) - c (1-a) / x - [r + (mu-r) theta*] (1-a)

    The expectation uses the truncated moment E[(x-U)^(1-a); U <= x].
    """
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"K(x) needs x > 0, got {x!r}")
    power = 1.0 - utility.alpha
    jump_term = 0.0
    if model.lam > 0:
        moment = truncated_power_moment(model.claims, x, utility.alpha)
        jump_term = model.lam * (1.0 - moment / x ** power)
    return jump_term - model.c * power / x - _investment_drift(market, theta_star) * power


def alternative_k_limits(model: InsuranceModel, market: Market, utility: Utility, theta_star: float) -> Dict[str, float]:
    """Limit values obtained when the moment term is (wrongly) assumed to vanish"""
    drift = _investment_drift(market, theta_star)
    return {
        "lambda - alpha*drift": model.lam - utility.alpha * drift,
        "lambda - (1-alpha)*drift": model.lam - (1.0 - utility.alpha) * drift,
    }


def K_limit(model: InsuranceModel, market: Market, utility: Utility, theta_star: float) -> float:
    """
    Limit of K(x) as x -> infinity

    The truncated moment behaves like x^(1-a) for large x, so the jump term
    tends to 0 and only the investment drift survives.
    """
    limit = -(1.0 - utility.alpha) * _investment_drift(market, theta_star)
    others = ", ".join(f"{k}={v:.6g}" for k, v in alternative_k_limits(model, market, utility, theta_star).items())
    logger.warning(
        f"K(x) limit computed term by term is {limit:.6g}; the values {others} assume "
        f"E[(x-U)^(1-alpha)] -> 0, which the truncated moment does not satisfy"
    )
    return limit


def _check_time(t: ArrayLike, T: float) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    slack = _TIME_TOL * max(T, 1.0)
    if np.any(arr < -slack) or np.any(arr > T + slack):
        raise DomainError(f"time must lie in [0, T={T}]")
    return np.clip(arr, 0.0, T)


def z_profile(R: float, utility: Utility, t: ArrayLike) -> ArrayLike:
    """z = f^alpha, the solution of z' - R z = -exp(-kappa alpha t) with z(T) = 0"""
    tt = _check_time(t, utility.T)
    remaining = utility.T - tt
    rate = R + utility.kappa * utility.alpha
    discount = np.exp(-utility.kappa * utility.alpha * tt)
    if rate == 0.0:
        bracket = remaining
    else:
        bracket = -np.expm1(-rate * remaining) / rate
    z = discount * bracket
    return float(z) if np.ndim(z) == 0 else z


def f_profile(R: float, utility: Utility, t: ArrayLike) -> ArrayLike:
    """
    f(t) = exp(-kappa t) [(1 - exp(-(R + kappa alpha)(T - t))) / (R + kappa alpha)]^(1/alpha)

    For R + kappa alpha = 0 the bracket is replaced by its limit T - t.
    """
    z = np.asarray(z_profile(R, utility, t))
    f = np.maximum(z, 0.0) ** (1.0 / utility.alpha)
    return float(f) if np.ndim(f) == 0 else f


@dataclass(frozen=True)
class HjbSolution:
    theta_star: float
    K: float
    R: float
    x_ref: float
    utility: Utility
    market: Market

    @classmethod
    def build(
        cls,
        model: InsuranceModel,
        market: Market,
        utility: Utility,
        x_ref: Optional[float] = None,
    ) -> "HjbSolution":
        """Freeze K at x_ref (default: the model's initial surplus)"""
        x_ref = model.x0 if x_ref is None else x_ref
        if not x_ref > 0:
            raise DomainError(f"reference surplus x_ref must be > 0, got {x_ref!r}")
        theta_star = merton_fraction(market, utility.alpha)
        k_value = K_of_x(model, market, utility, theta_star, x_ref)
        R = k_value + 0.5 * utility.alpha * (1.0 - utility.alpha) * market.sigma2 * theta_star ** 2
        if R + utility.kappa * utility.alpha == 0.0:
            logger.info("R + kappa*alpha = 0: using the limiting profile z(t) = exp(-kappa alpha t) (T - t)")
        return cls(theta_star=theta_star, K=k_value, R=R, x_ref=x_ref, utility=utility, market=market)

    def z(self, t: ArrayLike) -> ArrayLike:
        return z_profile(self.R, self.utility, t)

    def f(self, t: ArrayLike) -> ArrayLike:
        return f_profile(self.R, self.utility, t)

    def value(self, t: ArrayLike, x: ArrayLike) -> ArrayLike:
        return value_closed_form(self, t, x)


def value_closed_form(solution: HjbSolution, t: ArrayLike, x: ArrayLike) -> ArrayLike:
    """V(t, x) = f^alpha(t) x^(1-alpha); zero at t = T and at x = 0"""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise DomainError("surplus must be >= 0 in the closed-form value")
    v = np.asarray(solution.z(t)) * x_arr ** (1.0 - solution.utility.alpha)
    return float(v) if np.ndim(v) == 0 else v


def k_spread(
    model: InsuranceModel, market: Market, utility: Utility, x_grid: Iterable[float]
) -> Tuple[float, float]:
    """(min, max) of K over a surplus grid; shows how far K is from constant"""
    theta_star = merton_fraction(market, utility.alpha)
    values = [K_of_x(model, market, utility, theta_star, float(x)) for x in x_grid]
    if not values:
        raise DomainError("k_spread needs a non-empty grid")
    low, high = min(values), max(values)
    logger.info(f"K(x) over {len(values)} grid points ranges from {low:.6g} to {high:.6g}")
    return low, high
