"""Command-line surface: merton, ruin, table, value and dpp"""
import argparse
import csv
import io
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from ..core.errors import ConfigError, DomainError, NumericalFailure
from ..core.hjb import HjbSolution, K_limit, clamped_merton_fraction, k_spread
from ..core.model import MertonClamped, NoInvestment
from ..core.montecarlo import MonteCarloEstimator
from ..core.simulate import SimGrid
from ..utils.config_manager import ConfigManager
from ..utils.run_config import RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMMAND_NAMES = ('merton', 'ruin', 'table', 'value', 'dpp')


def fmt(value) -> str:
    """Shortest round-trip decimal for floats, plain text otherwise"""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Header plus rows as CSV text with \n line endings"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buffer.getvalue()


def _solution(config: RunConfig) -> HjbSolution:
    x_ref = config.x_ref if config.x_ref is not None else config.model.x0
    if not x_ref > 0:
        raise ConfigError('hjb.x_ref must be set (> 0) when model.x0 is 0', ['hjb.x_ref'])
    return HjbSolution.build(config.model, config.market, config.utility, x_ref)


def cmd_merton(config: RunConfig, estimator: MonteCarloEstimator) -> str:
    """Merton fraction, R and f(0) at the reference surplus"""
    solution = _solution(config)
    lines = [
        f'theta_star={solution.theta_star:.6f}',
        f'theta_clamped={clamped_merton_fraction(config.market, config.utility.alpha):.6f}',
        f'c={fmt(config.model.c)}',
        f'x_ref={fmt(solution.x_ref)}',
        f'K={fmt(solution.K)}',
        f'R={fmt(solution.R)}',
        f'f0={fmt(solution.f(0.0))}',
        f'K_limit={fmt(K_limit(config.model, config.market, config.utility, solution.theta_star))}',
    ]
    if config.k_grid:
        low, high = k_spread(config.model, config.market, config.utility, config.k_grid)
        lines.append(f'K_min={fmt(low)}')
        lines.append(f'K_max={fmt(high)}')
    return '\n'.join(lines) + '\n'


def cmd_ruin(config: RunConfig, estimator: MonteCarloEstimator) -> str:
    """One CSV row with the ruin estimate for the configured strategy"""
    strategy = config.strategy(config.ruin_strategy)
    grid = SimGrid(config.sim.n_steps)
    est = estimator.estimate_ruin(
        config.model, config.market, config.utility, strategy, grid, config.sim.n_paths, config.sim.master_seed
    )
    header = ['x0', 'strategy', 'p_hat', 'std_err', 'ci95_low', 'ci95_high', 'n_paths', 'n_steps', 'seed']
    row = [
        float(config.model.x0), strategy.label, est.p_hat, est.std_err, est.ci95_low, est.ci95_high,
        est.n_paths, config.sim.n_steps, config.sim.master_seed,
    ]
    return to_csv(header, [row])


def cmd_table(config: RunConfig, estimator: MonteCarloEstimator) -> str:
    """Ruin probability without and with Merton investment per (distribution, x)"""
    if not config.table_x_values:
        raise ConfigError('table.x_values must list at least one surplus', ['table.x_values'])
    if not config.table_distributions:
        raise ConfigError('table.distributions must list at least one distribution', ['table.distributions'])
    no_invest = NoInvestment()
    invest = MertonClamped.from_market(config.market, config.utility)
    cells = estimator.sweep_table(
        config.model, config.market, config.utility, SimGrid(config.sim.n_steps),
        config.table_x_values, [no_invest, invest], config.sim.n_paths, config.sim.master_seed,
        config.table_distributions,
    )

    by_key: Dict[tuple, Dict[str, object]] = {}
    for cell in cells:
        by_key.setdefault((cell.distribution, cell.x), {})[cell.strategy] = cell.estimate
    rows = []
    for (dist, x), estimates in by_key.items():
        plain, merton = estimates[no_invest.label], estimates[invest.label]
        rows.append([x, dist.family, plain.p_hat, plain.std_err, merton.p_hat, merton.std_err])
    header = ['x', 'dist', 'psi_no_invest', 'se_no_invest', 'psi_invest', 'se_invest']
    return to_csv(header, rows)


def cmd_value(config: RunConfig, estimator: MonteCarloEstimator) -> str:
    """Monte Carlo value per (x0, strategy), optionally beside the closed form V(0, x0)"""
    if not config.value_x_values:
        raise ConfigError('value.x_values must list at least one surplus', ['value.x_values'])
    grid = SimGrid(config.sim.n_steps)
    solution = _solution(config) if config.value_closed_form else None

    header = ['x0', 'strategy', 'v_hat', 'std_err']
    if solution is not None:
        header.append('v_closed_form')
    rows = []
    for x0 in config.value_x_values:
        model = config.model.with_surplus(float(x0))
        for token in config.value_strategies:
            strategy = config.strategy(token)
            est = estimator.estimate_value(
                model, config.market, config.utility, strategy, grid, config.sim.n_paths, config.sim.master_seed
            )
            row = [float(x0), strategy.label, est.v_hat, est.std_err]
            if solution is not None:
                row.append(float(solution.value(0.0, float(x0))))
            rows.append(row)
    return to_csv(header, rows)


def cmd_dpp(config: RunConfig, estimator: MonteCarloEstimator) -> str:
    """Statistical check of the dynamic programming principle"""
    dpp = config.dpp
    if not 0 < dpp.h < config.utility.T:
        raise ConfigError(f'dpp.h must lie in (0, T={config.utility.T}), got {dpp.h}', ['dpp.h'])
    if not dpp.candidates:
        raise ConfigError('dpp.candidates must list at least one fraction', ['dpp.candidates'])
    result = estimator.dpp_consistency(
        config.model, config.market, config.utility, SimGrid(dpp.n_steps), dpp.h, dpp.candidates,
        dpp.n_outer, dpp.n_inner, config.sim.master_seed,
    )
    lines = [
        f'G={fmt(result.gap)}',
        f'std_err={fmt(result.std_err)}',
        f'best_fraction={fmt(result.best_fraction)}',
        f'V_hat={fmt(result.value.v_hat)}',
    ]
    for theta, (mean, se) in result.continuation.items():
        lines.append(f'continuation[{fmt(theta)}]={fmt(mean)} +/- {fmt(se)}')
    lines.append(f'result={"PASS" if result.passed else "FAIL"}')
    return '\n'.join(lines) + '\n'


COMMANDS: Dict[str, Callable[[RunConfig, MonteCarloEstimator], str]] = {
    'merton': cmd_merton,
    'ruin': cmd_ruin,
    'table': cmd_table,
    'value': cmd_value,
    'dpp': cmd_dpp,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='ruinlab',
        description='Ruin probabilities and optimal investment for the Cramer-Lundberg model',
    )
    parser.add_argument('command', choices=COMMAND_NAMES)
    parser.add_argument('--config', required=True, help='Path to a .cfg or .json configuration file')
    parser.add_argument('--out', help='Write output to this file instead of stdout')
    parser.add_argument('--seed', type=int, help='Override sim.master_seed')
    parser.add_argument('--workers', type=int, help='Worker processes (never changes results)')
    parser.add_argument('--echo-config', action='store_true', help='Print the effective configuration and exit')
    return parser


def _write(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding='utf-8', newline='\n')
    else:
        sys.stdout.write(text)


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return the exit code"""
    args = build_parser().parse_args(argv)
    try:
        manager = ConfigManager(args.config)
        if args.seed is not None:
            manager.set('sim.master_seed', args.seed)
        if args.workers is not None:
            manager.set('sim.workers', args.workers)
        config = RunConfig.from_manager(manager)
        logging.getLogger().setLevel(config.log_level)

        if args.echo_config:
            _write(manager.to_text(config.echo_comments()), args.out)
            return EXIT_OK

        estimator = MonteCarloEstimator(config.estimator_settings())
        _write(COMMANDS[args.command](config, estimator), args.out)
        return EXIT_OK

    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as e:
        logger.error(f"Precondition failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as e:
        logger.error(f"Numerical failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
