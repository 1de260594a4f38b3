"""Integration tests for the ruinlab command line"""
import csv
import io
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from src.cli.commands import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, fmt, run, to_csv
from tests.fixtures import BASE_CONFIG, write_config

# Four table cells keep the table runs quick
SMALL_TABLE = {'table.x_values': '100, 200', 'table.distributions': 'exponential, pareto'}


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.count = 0

    def invoke(self, command, overrides=None, *flags, config=None):
        """Run one command and return (exit code, output text)"""
        self.count += 1
        if config is None:
            config = write_config(self.tmp.name, overrides, name=f'run{self.count}.cfg')
        out = Path(self.tmp.name) / f'out{self.count}.txt'
        code = run([command, '--config', str(config), '--out', str(out), *flags])
        return code, out.read_text(encoding='utf-8') if out.exists() else ''

    @staticmethod
    def rows(text):
        return list(csv.DictReader(io.StringIO(text)))


class TestFormatting(unittest.TestCase):
    """Shared output helpers"""

    def test_floats_round_trip(self):
        """fmt writes floats that read back exactly"""
        for value in (0.1, 1e-17, 65.00000000000001, 0.0):
            self.assertEqual(float(fmt(value)), value)
        self.assertEqual(fmt(3), '3')

    def test_csv_layout(self):
        """Header then rows with newline endings"""
        self.assertEqual(to_csv(['a', 'b'], [[1, 0.5]]), 'a,b\n1,0.5\n')


class TestMerton(CliTestCase):
    """merton command"""

    def test_reference_parameters(self):
        """merton prints theta_star=0.800000 first"""
        code, text = self.invoke('merton', config=BASE_CONFIG)
        self.assertEqual(code, EXIT_OK)
        lines = text.splitlines()
        self.assertEqual(lines[0], 'theta_star=0.800000')
        values = dict(line.split('=', 1) for line in lines)
        self.assertEqual(float(values['theta_clamped']), 0.8)
        self.assertLess(float(values['K_min']), float(values['K_max']))
        self.assertGreater(float(values['f0']), 0.0)

    def test_no_excess_return(self):
        """mu = r prints a zero fraction"""
        code, text = self.invoke('merton', {'market.mu': '8.4e-4'})
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(text.startswith('theta_star=0.000000\n'))

    def test_zero_variance_is_config_error(self):
        """sigma2 = 0 exits with 2"""
        code, _ = self.invoke('merton', {'market.sigma2': '0'})
        self.assertEqual(code, EXIT_CONFIG)

    def test_zero_reference_surplus(self):
        """x0 = 0 without x_ref exits with 2"""
        code, _ = self.invoke('merton', {'model.x0': '0', 'hjb.x_ref': None})
        self.assertEqual(code, EXIT_CONFIG)

    def test_quadrature_failure_exits_with_3(self):
        """A truncated moment that does not converge exits with 3"""
        failed = (float('nan'), 1.0, {'neval': 21}, 'The maximum number of subdivisions has been achieved.')
        with mock.patch('src.core.claims.integrate.quad', return_value=failed):
            code, text = self.invoke('merton')
        self.assertEqual(code, EXIT_NUMERICAL)
        self.assertEqual(text, '')


class TestRuin(CliTestCase):
    """ruin command"""

    def test_row_layout(self):
        """ruin writes the header and one row"""
        code, text = self.invoke('ruin', {'model.x0': '20'})
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(text.startswith('x0,strategy,p_hat,std_err,ci95_low,ci95_high,n_paths,n_steps,seed\n'))
        (row,) = self.rows(text)
        self.assertEqual(row['strategy'], 'no_invest')
        self.assertEqual(row['n_paths'], '50')
        self.assertLessEqual(float(row['ci95_low']), float(row['p_hat']))

    def test_identical_bytes_for_same_seed(self):
        """Same seed gives identical bytes for 1, 2 and 8 workers"""
        overrides = {'ruin.strategy': 'merton', 'model.x0': '30'}
        _, first = self.invoke('ruin', overrides)
        _, second = self.invoke('ruin', overrides)
        self.assertEqual(first, second)
        for workers in ('2', '8'):
            _, parallel = self.invoke('ruin', overrides, '--workers', workers)
            self.assertEqual(first, parallel)

    def test_seed_flag(self):
        """--seed overrides the master seed"""
        _, text = self.invoke('ruin', None, '--seed', '123')
        self.assertEqual(self.rows(text)[0]['seed'], '123')

    def test_single_path(self):
        """n_paths = 1 still gives a valid interval"""
        _, text = self.invoke('ruin', {'sim.n_paths': '1'})
        (row,) = self.rows(text)
        self.assertIn(row['p_hat'], ('0.0', '1.0'))
        self.assertEqual(row['std_err'], '0.0')
        self.assertTrue(0.0 <= float(row['ci95_low']) < float(row['ci95_high']) <= 1.0)

    def test_missing_config(self):
        """A missing config exits with 2"""
        code, _ = self.invoke('ruin', config=Path(self.tmp.name) / 'nowhere.cfg')
        self.assertEqual(code, EXIT_CONFIG)


class TestTableAndValue(CliTestCase):
    """table and value commands"""

    def test_table_rows(self):
        """Rows are ordered by distribution, then x"""
        code, text = self.invoke('table', {**SMALL_TABLE, 'table.x_values': '200, 100'})
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(text.startswith('x,dist,psi_no_invest,se_no_invest,psi_invest,se_invest\n'))
        rows = self.rows(text)
        self.assertEqual([(r['dist'], r['x']) for r in rows],
                         [('exponential', '100.0'), ('exponential', '200.0'), ('pareto', '100.0'), ('pareto', '200.0')])

    def test_single_cell_table(self):
        """One distribution and one x give one row"""
        code, text = self.invoke('table', {'table.x_values': '100', 'table.distributions': 'weibull'})
        self.assertEqual(code, EXIT_OK)
        (row,) = self.rows(text)
        self.assertEqual((row['dist'], row['x']), ('weibull', '100.0'))

    def test_empty_table_grid(self):
        """An empty x list exits with 2"""
        code, _ = self.invoke('table', {'table.x_values': ''})
        self.assertEqual(code, EXIT_CONFIG)

    def test_table_family_checked_before_simulation(self):
        """A table family failing the net-profit condition exits with 2 before any estimate"""
        overrides = {'table.distributions': 'exponential, weibull', 'weibull.scale': '100'}
        with self.assertNoLogs('src.core.montecarlo', level='INFO'):
            code, text = self.invoke('table', overrides)
        self.assertEqual(code, EXIT_CONFIG)
        self.assertEqual(text, '')

    def test_value_closed_form_at_zero(self):
        """The closed form is 0 at x0 = 0 while the estimate is positive"""
        code, text = self.invoke('value', {'value.x_values': '0', 'value.strategies': 'none'})
        self.assertEqual(code, EXIT_OK)
        (row,) = self.rows(text)
        self.assertEqual(row['v_closed_form'], '0.0')
        self.assertGreater(float(row['v_hat']), 0.0)

    def test_value_without_closed_form(self):
        """closed_form = false drops the column"""
        _, text = self.invoke('value', {'value.x_values': '100', 'value.closed_form': 'false'})
        rows = self.rows(text)
        self.assertEqual([r['strategy'] for r in rows], ['no_invest', 'merton'])
        self.assertNotIn('v_closed_form', rows[0])


class TestDpp(CliTestCase):
    """dpp command"""

    def test_report(self):
        """dpp prints G, one line per candidate and the verdict"""
        code, text = self.invoke('dpp', {'dpp.candidates': '0, 0.8'})
        self.assertEqual(code, EXIT_OK)
        lines = text.splitlines()
        self.assertTrue(lines[0].startswith('G='))
        self.assertIn(lines[-1], ('result=PASS', 'result=FAIL'))
        self.assertEqual(sum(line.startswith('continuation[') for line in lines), 2)

    def test_step_beyond_horizon(self):
        """h beyond T exits with 2"""
        code, _ = self.invoke('dpp', {'dpp.h': '2'})
        self.assertEqual(code, EXIT_CONFIG)

    def test_misaligned_step(self):
        """h off the grid exits with 2"""
        code, _ = self.invoke('dpp', {'dpp.h': '0.13'})
        self.assertEqual(code, EXIT_CONFIG)


class TestReproducibility(CliTestCase):
    """Same seed, same bytes, whatever the worker count"""

    def assert_same_for_workers(self, command, overrides):
        _, serial = self.invoke(command, overrides, '--workers', '1')
        _, again = self.invoke(command, overrides, '--workers', '1')
        _, parallel = self.invoke(command, overrides, '--workers', '8')
        self.assertTrue(serial)
        self.assertEqual(serial, again)
        self.assertEqual(serial, parallel)

    def test_table(self):
        """table output is identical for 1 and 8 workers"""
        self.assert_same_for_workers('table', SMALL_TABLE)

    def test_value(self):
        """value output is identical for 1 and 8 workers"""
        self.assert_same_for_workers('value', {'value.x_values': '0, 100'})

    def test_dpp(self):
        """dpp output is identical for 1 and 8 workers"""
        self.assert_same_for_workers('dpp', {'dpp.candidates': '0, 0.8'})


class TestEcho(CliTestCase):
    """--echo-config"""

    def test_echo_round_trip(self):
        """--echo-config output loads back to the same text"""
        _, first = self.invoke('ruin', None, '--echo-config')
        self.assertIn('# c = 65.0 (derived from rho)', first)
        echoed = Path(self.tmp.name) / 'echoed.cfg'
        echoed.write_text(first, encoding='utf-8')
        _, second = self.invoke('ruin', None, '--echo-config', config=echoed)
        self.assertEqual(first, second)


if __name__ == '__main__':
    unittest.main()
