"""Typed, validated run configuration built from a ConfigManager"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

from ..core.claims import (
    ClaimDistribution,
    FAMILIES,
    distribution_from_config,
    net_profit_holds,
    premium_from_loading,
)
from ..core.errors import ConfigError, DomainError, UndefinedMomentError
from ..core.model import InsuranceModel, Market, Strategy, Utility, strategy_from_token
from .config_manager import ConfigManager

logger = logging.getLogger(__name__)

_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


@dataclass(frozen=True)
class SimSettings:
    n_steps: int = 10_000
    n_paths: int = 10_000
    master_seed: int = 20240601
    workers: int = 1
    chunk_size: int = 250


@dataclass(frozen=True)
class DppSettings:
    h: float = 0.1
    candidates: Tuple[float, ...] = (0.0, 0.4, 0.8, 1.0)
    n_outer: int = 2000
    n_inner: int = 200
    n_steps: int = 100
    max_nested_paths: int = 1_000_000


@dataclass(frozen=True)
class RunConfig:
    model: InsuranceModel
    market: Market
    utility: Utility
    sim: SimSettings
    rho: Optional[float] = None
    ruin_strategy: str = 'none'
    table_x_values: Tuple[float, ...] = ()
    table_distributions: Tuple[ClaimDistribution, ...] = ()
    value_x_values: Tuple[float, ...] = ()
    value_strategies: Tuple[str, ...] = ('none', 'merton')
    value_closed_form: bool = True
    dpp: DppSettings = field(default_factory=DppSettings)
    x_ref: Optional[float] = None
    k_grid: Tuple[float, ...] = ()
    log_level: str = 'INFO'

    def strategy(self, token: str) -> Strategy:
        return strategy_from_token(token, self.market, self.utility)

    def echo_comments(self) -> dict:
        """Derived values appended as comments when echoing the config"""
        if self.rho is None:
            return {}
        return {'model': [f'c = {self.model.c!r} (derived from rho)']}

    def estimator_settings(self) -> dict:
        return {
            'workers': self.sim.workers,
            'chunk_size': self.sim.chunk_size,
            'max_nested_paths': self.dpp.max_nested_paths,
        }

    @classmethod
    def from_manager(cls, manager: ConfigManager) -> 'RunConfig':
        """Read and validate everything; all problems are reported together"""
        reader = _Reader(manager)
        return reader.build()


class _Reader:
    """Collects field errors instead of stopping at the first one"""

    def __init__(self, manager: ConfigManager):
        self.manager = manager
        self.errors: List[Tuple[str, str]] = []

    def fail(self, key: str, message: str):
        self.errors.append((key, message))

    def _raw(self, key: str, required: bool) -> Optional[str]:
        value = self.manager.get(key)
        if value is None or str(value).strip() == '':
            if required:
                self.fail(key, 'is required')
            return None
        return str(value).strip()

    def number(self, key: str, default: Optional[float] = None, required: bool = False,
               check: Optional[Callable[[float], bool]] = None, rule: str = '') -> Optional[float]:
        raw = self._raw(key, required and default is None)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError:
            self.fail(key, f'must be a number, got {raw!r}')
            return default
        if check is not None and not check(value):
            self.fail(key, f'must be {rule}, got {raw}')
            return default
        return value

    def integer(self, key: str, default: int, minimum: int = 1) -> int:
        raw = self._raw(key, False)
        if raw is None:
            return default
        try:
            value = int(raw, 0)
        except ValueError:
            self.fail(key, f'must be an integer, got {raw!r}')
            return default
        if value < minimum:
            self.fail(key, f'must be >= {minimum}, got {value}')
            return default
        return value

    def numbers(self, key: str, default: Tuple[float, ...] = ()) -> Tuple[float, ...]:
        raw = self._raw(key, False)
        if raw is None:
            return () if self.manager.has(key) else default
        try:
            return tuple(float(part) for part in raw.split(',') if part.strip())
        except ValueError:
            self.fail(key, f'must be a comma-separated list of numbers, got {raw!r}')
            return ()

    def words(self, key: str, default: Tuple[str, ...] = ()) -> Tuple[str, ...]:
        raw = self._raw(key, False)
        if raw is None:
            return default
        return tuple(part.strip().lower() for part in raw.split(',') if part.strip())

    def flag(self, key: str, default: bool) -> bool:
        raw = self._raw(key, False)
        if raw is None:
            return default
        if raw.lower() in _TRUE:
            return True
        if raw.lower() in _FALSE:
            return False
        self.fail(key, f'must be true or false, got {raw!r}')
        return default

    def distribution(self, family: str, origin: str) -> Optional[ClaimDistribution]:
        if family not in FAMILIES:
            self.fail(origin, f'unknown distribution {family!r} (expected one of {", ".join(sorted(FAMILIES))})')
            return None
        _, names = FAMILIES[family]
        params = {}
        for name in names:
            value = self.number(f'{family}.{name}', required=True, check=lambda v: v > 0, rule='> 0')
            if value is not None:
                params[name] = value
        if len(params) != len(names):
            return None
        try:
            return distribution_from_config(family, params)
        except DomainError as e:
            self.fail(family, str(e))
            return None

    def check_table_distributions(self, distributions, claims, c: float, lam: float):
        """Each table distribution must satisfy the net-profit condition under the model premium"""
        for dist in distributions:
            if dist == claims:
                continue  # checked by InsuranceModel
            try:
                holds = net_profit_holds(c, lam, dist)
            except UndefinedMomentError as e:
                self.fail(f'{dist.family}.shape', str(e))
                continue
            if not holds:
                self.fail(
                    'table.distributions',
                    f'{dist.describe()} violates the net profit condition: c/lambda={c / lam:g} <= E[U]={dist.mean():g}',
                )

    def build(self) -> RunConfig:
        positive = dict(check=lambda v: v > 0, rule='> 0')
        non_negative = dict(check=lambda v: v >= 0, rule='>= 0')

        # [model]
        x0 = self.number('model.x0', required=True, **non_negative)
        lam = self.number('model.lambda', required=True, **non_negative)
        family = (self._raw('model.distribution', True) or '').lower()
        claims = self.distribution(family, 'model.distribution') if family else None
        c = self.number('model.c', **positive)
        rho = self.number('model.rho', **non_negative)
        if (c is None) == (rho is None) and not any(k in ('model.c', 'model.rho') for k, _ in self.errors):
            self.fail('model.c', 'exactly one of model.c and model.rho must be given')
            self.fail('model.rho', 'exactly one of model.c and model.rho must be given')

        # [market]
        r = self.number('market.r', required=True, **non_negative)
        mu = self.number('market.mu', required=True)
        sigma2 = self.number('market.sigma2', required=True, **positive)

        # [utility]
        alpha = self.number('utility.alpha', required=True, check=lambda v: 0 < v < 1, rule='in (0, 1)')
        kappa = self.number('utility.kappa', default=0.0)
        horizon = self.number('utility.T', required=True, **positive)

        # [sim]
        sim = SimSettings(
            n_steps=self.integer('sim.n_steps', SimSettings.n_steps),
            n_paths=self.integer('sim.n_paths', SimSettings.n_paths),
            master_seed=self.integer('sim.master_seed', SimSettings.master_seed, minimum=0),
            workers=self.integer('sim.workers', SimSettings.workers),
            chunk_size=self.integer('sim.chunk_size', SimSettings.chunk_size),
        )

        # command sections
        ruin_strategy = (self._raw('ruin.strategy', False) or 'none').lower()
        table_x_values = self.numbers('table.x_values', (100.0, 200.0, 400.0))
        families = self.words('table.distributions', (family,) if family else ())
        table_distributions = tuple(
            d for d in (claims if f == family else self.distribution(f, 'table.distributions') for f in families)
            if d is not None
        )
        value_x_values = self.numbers('value.x_values', (x0,) if x0 is not None else ())
        if any(x < 0 for x in value_x_values):
            self.fail('value.x_values', 'must all be >= 0')
        if any(x < 0 for x in table_x_values):
            self.fail('table.x_values', 'must all be >= 0')
        value_strategies = self.words('value.strategies', ('none', 'merton'))
        value_closed_form = self.flag('value.closed_form', True)

        dpp = DppSettings(
            h=self.number('dpp.h', DppSettings.h, **positive),
            candidates=self.numbers('dpp.candidates', DppSettings.candidates),
            n_outer=self.integer('dpp.n_outer', DppSettings.n_outer, minimum=2),
            n_inner=self.integer('dpp.n_inner', DppSettings.n_inner),
            n_steps=self.integer('dpp.n_steps', DppSettings.n_steps),
            max_nested_paths=self.integer('dpp.max_nested_paths', DppSettings.max_nested_paths),
        )
        if any(not 0 <= theta <= 1 for theta in dpp.candidates):
            self.fail('dpp.candidates', 'fractions must lie in [0, 1]')

        x_ref = self.number('hjb.x_ref', **positive)
        k_grid = self.numbers('hjb.k_grid', ())
        if any(x <= 0 for x in k_grid):
            self.fail('hjb.k_grid', 'must all be > 0')
        log_level = (self._raw('advanced.log_level', False) or 'INFO').upper()
        if log_level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            self.fail('advanced.log_level', f'must be a logging level name, got {log_level!r}')

        if self.errors:
            raise self._error()

        # Cross-field invariants
        if rho is not None:
            try:
                c = premium_from_loading(lam, claims.mean(), rho)
            except DomainError as e:
                self.fail('model.rho', str(e))
                raise self._error()
            logger.info(f"Premium rate c={c!r} derived from rho={rho}")

        try:
            model = InsuranceModel(x0, c, lam, claims)
        except DomainError as e:
            self.fail('model', str(e))
        try:
            market = Market.from_variance(r, mu, sigma2)
        except DomainError as e:
            self.fail('market', str(e))
        try:
            utility = Utility(alpha, kappa, horizon)
        except DomainError as e:
            self.fail('utility', str(e))
        self.check_table_distributions(table_distributions, claims, c, lam)
        if self.errors:
            raise self._error()

        for token, key in [(ruin_strategy, 'ruin.strategy')] + [(s, 'value.strategies') for s in value_strategies]:
            try:
                strategy_from_token(token, market, utility)
            except DomainError as e:
                self.fail(key, str(e))
        if self.errors:
            raise self._error()

        return RunConfig(
            model=model,
            market=market,
            utility=utility,
            sim=sim,
            rho=rho,
            ruin_strategy=ruin_strategy,
            table_x_values=table_x_values,
            table_distributions=table_distributions,
            value_x_values=value_x_values,
            value_strategies=value_strategies,
            value_closed_form=value_closed_form,
            dpp=dpp,
            x_ref=x_ref,
            k_grid=k_grid,
            log_level=log_level,
        )

    def _error(self) -> ConfigError:
        details = '; '.join(f'{key} {message}' for key, message in self.errors)
        return ConfigError(f'Invalid configuration: {details}', [key for key, _ in self.errors])
