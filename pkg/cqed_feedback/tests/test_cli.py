import os
import unittest
from tempfile import TemporaryDirectory

from .. import simulate, parse_config
from ..scenario import preset_flat, ConfigError
from ..cli import main, build_parser, load_scenario, EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_IO
from ..providers import read_csv, load_manifest

SMALL = ['--set', 'integrator.t_end=0.1', '--set', 'integrator.record_stride=50', '-q']


def _read(fn):
    with open(fn) as fp:
        return fp.read()


class LoadScenarioTestCase(unittest.TestCase):
    def test_precedence(self):
        args = build_parser().parse_args(['--preset', 'fig3', '--seed', '4', '--set', 'run.seed=6',
                                          '--trajectories', '12'])
        cfg = load_scenario(args, environ={'QFB_SEED': '5', 'QFB_TRAJECTORIES': '9', 'QFB_WORKERS': '2'})
        self.assertEqual(cfg.seed, 6)
        self.assertEqual(cfg.n_traj, 12)
        self.assertEqual(cfg.workers, 2)
        self.assertEqual(cfg.feedback.strategy, 'filtered_current')

    def test_config_file(self):
        with TemporaryDirectory() as tmpdir:
            fn = os.path.join(tmpdir, 'custom.cfg')
            with open(fn, 'w') as fp:
                fp.write('feedback.u = 2\n')
            args = build_parser().parse_args(['--preset', 'fig2bc', '--config', fn])
            cfg = load_scenario(args, environ={})
        self.assertEqual(cfg.feedback.u, 2.0)
        self.assertEqual(cfg.feedback.strategy, 'state_estimate')


class MainTestCase(unittest.TestCase):
    def test_preset_run(self):
        with TemporaryDirectory() as tmpdir:
            out = os.path.join(tmpdir, 'fig3')
            code = main(['--preset', 'fig3', '--trajectories', '3', '--seed', '7', '--out', out,
                         '--emit-trajectories'] + SMALL, environ={})
            self.assertEqual(code, EXIT_OK)
            names = sorted(os.listdir(out))
            for fn in ('ensemble.csv', 'ensemble_P2.csv', 'ensemble_P3.csv', 'manifest.cfg', 'sudden_death.csv',
                       'traj_0.csv', 'traj_2.csv'):
                self.assertIn(fn, names)
            self.assertNotIn('traj_P2_0.csv', names)
            header, rows = read_csv(os.path.join(out, 'sudden_death.csv'))
            self.assertEqual(len(rows), 9)
            manifest = load_manifest(os.path.join(out, 'manifest.cfg'))
            self.assertTrue(manifest.startswith('# cqed_feedback '))
            self.assertIn('# seed 7\n', manifest)

    def test_manifest_reproduces(self):
        with TemporaryDirectory() as tmpdir:
            first = os.path.join(tmpdir, 'a')
            second = os.path.join(tmpdir, 'b')
            self.assertEqual(main(['--preset', 'fig2bc', '--trajectories', '4', '--seed', '3', '--out', first]
                                  + SMALL, environ={}), EXIT_OK)
            code = main(['--config', os.path.join(first, 'manifest.cfg'), '--out', second, '-q'], environ={})
            self.assertEqual(code, EXIT_OK)
            for fn in ('ensemble.csv', 'sudden_death.csv'):
                self.assertEqual(_read(os.path.join(first, fn)), _read(os.path.join(second, fn)))

    def test_workers_bit_identical(self):
        with TemporaryDirectory() as tmpdir:
            outputs = {}
            for workers in (1, 4, 8):
                out = os.path.join(tmpdir, 'w%d' % workers)
                code = main(['--preset', 'fig3', '--trajectories', '60', '--seed', '5', '--workers', str(workers),
                             '--out', out] + SMALL, environ={})
                self.assertEqual(code, EXIT_OK)
                outputs[workers] = [_read(os.path.join(out, fn)) for fn in
                                    ('ensemble.csv', 'ensemble_P3.csv', 'sudden_death.csv')]
            self.assertEqual(outputs[1], outputs[4])
            self.assertEqual(outputs[1], outputs[8])

    def test_save_states(self):
        with TemporaryDirectory() as tmpdir:
            code = main(['--preset', 'fig2a', '--trajectories', '2', '--out', tmpdir,
                         '--set', 'run.save_states=true'] + SMALL, environ={})
            self.assertEqual(code, EXIT_OK)
            self.assertTrue(os.path.exists(os.path.join(tmpdir, 'states.mat')))

    def test_config_errors(self):
        with TemporaryDirectory() as tmpdir:
            self.assertEqual(main(['--preset', 'fig9', '--out', tmpdir], environ={}), EXIT_CONFIG)
            self.assertEqual(main(['--preset', 'fig3', '--set', 'feedback.u=abc', '--out', tmpdir], environ={}),
                             EXIT_CONFIG)
            self.assertEqual(main(['--bogus-flag'], environ={}), EXIT_CONFIG)
            self.assertEqual(main(['--preset', 'fig3', '--trajectories', '0', '--out', tmpdir], environ={}),
                             EXIT_CONFIG)
            self.assertEqual(os.listdir(tmpdir), [])

    def test_integration_failure(self):
        with TemporaryDirectory() as tmpdir:
            code = main(['--set', 'rates.Gamma_d=0', '--set', 'noise.gamma_1=10', '--set', 'initial.state=10',
                         '--set', 'integrator.scheme=euler', '--set', 'integrator.dt=0.5',
                         '--set', 'integrator.t_end=1', '--set', 'integrator.record_stride=1',
                         '--trajectories', '2', '--out', tmpdir, '-q'], environ={})
            self.assertEqual(code, EXIT_INTEGRATION)

    def test_unreadable_config(self):
        with TemporaryDirectory() as tmpdir:
            code = main(['--config', os.path.join(tmpdir, 'missing.cfg'), '-q'], environ={})
            self.assertEqual(code, EXIT_IO)


class SimulateTestCase(unittest.TestCase):
    def test_variant(self):
        cfg = parse_config('integrator.t_end = 0.1\nintegrator.record_stride = 50\nrun.n_traj = 2\n',
                           base=preset_flat('fig3'))
        stats = simulate(cfg, label='P2')
        self.assertEqual(stats.n_traj, 2)
        self.assertEqual(len(stats.times), 3)

    def test_unknown_preset(self):
        with self.assertRaises(ConfigError):
            simulate('fig9')


if __name__ == '__main__':
    unittest.main()
