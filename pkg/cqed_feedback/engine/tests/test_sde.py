import unittest

import numpy as np

from ..qstate import projector, basis_ket, bell_state, DensityMatrix
from ..model import ModelRates
from ..feedback import FeedbackConfig, FilterConfig
from ..records import detect_sudden_death
from ..sde import (IntegratorConfig, IntegratorFailure, RngStream, StepKernel, wiener_increment, homodyne_increment,
                   enforce_state, step, run_trajectory, EULER_SLACK_CAP)
from ..ensemble import lindblad_solve

CAPTION = ModelRates.from_efficiency(chi_alpha2=1.25, Gamma_d=1.0, gamma_p=1.0)
NOISY = ModelRates.from_efficiency(chi_alpha2=1.25, Gamma_d=1.0, gamma_p=1.0, gamma_relax=(0.1, 0.1))

SHORT = IntegratorConfig(dt=1e-3, t_end=1.0, record_stride=100)


class _Silent(RngStream):
    """
    Noise-free stream: every Wiener increment is zero
    """
    def wiener_increments(self, n, dt):
        return np.zeros(n)


class ConfigTestCase(unittest.TestCase):
    def test_counts(self):
        self.assertEqual(SHORT.n_steps, 1000)
        self.assertEqual(SHORT.n_samples, 11)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            IntegratorConfig(dt=0.0)
        with self.assertRaises(ValueError):
            IntegratorConfig(scheme='rk4')
        with self.assertRaises(ValueError):
            IntegratorConfig(record_stride=0)
        with self.assertRaises(ValueError):
            IntegratorConfig(dt=1e-3, t_end=1e-4)


class NoiseTestCase(unittest.TestCase):
    def test_wiener_statistics(self):
        dt = 1e-3
        d_w = RngStream(2024).wiener_increments(10 ** 6, dt)
        self.assertLess(abs(d_w.mean()), 5 * np.sqrt(dt / 1e6))
        self.assertLess(abs(d_w.var() - dt), 1e-5)

    def test_scalar_increment(self):
        rng = RngStream(1)
        self.assertIsInstance(wiener_increment(rng, 1e-3), float)
        with self.assertRaises(ValueError):
            wiener_increment(rng, 0.0)

    def test_reproducible(self):
        a = RngStream(7, 3).wiener_increments(100, 1e-3)
        b = RngStream(7, 3).wiener_increments(100, 1e-3)
        c = RngStream(7, 4).wiener_increments(100, 1e-3)
        self.assertTrue(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))

    def test_homodyne_increment(self):
        r = ModelRates.from_efficiency(Gamma_d=1.0)
        ground = projector(basis_ket('00'))
        self.assertAlmostEqual(homodyne_increment(ground, r, 0.01, 1e-3), np.sqrt(2) * 2 * 1e-3 + 0.01)
        phi = projector(bell_state('Phi_plus'))
        self.assertAlmostEqual(homodyne_increment(phi, r, -0.02, 1e-3), -0.02)


class StepTestCase(unittest.TestCase):
    cfg = IntegratorConfig()

    def test_identity(self):
        rho = np.array(DensityMatrix.separable())
        zero = np.zeros((4, 4))
        self.assertTrue(np.allclose(step(rho, zero, zero, 0.3, self.cfg), rho))

    def test_clip(self):
        m = np.diag([0.5, 0.3, 0.2 + 1e-7, -1e-7]).astype(complex)
        out = enforce_state(m, self.cfg)
        self.assertGreaterEqual(np.linalg.eigvalsh(out)[0], -1e-15)
        self.assertAlmostEqual(np.trace(out).real, 1.0)

    def test_abort(self):
        with self.assertRaises(IntegratorFailure) as ctx:
            enforce_state(np.diag([0.6, 0.3, 0.2, -0.1]).astype(complex), self.cfg, t=1.5)
        self.assertAlmostEqual(ctx.exception.min_eigenvalue, -0.1)
        self.assertEqual(ctx.exception.t, 1.5)
        with self.assertRaises(IntegratorFailure):
            enforce_state(np.full((4, 4), np.nan), self.cfg)

    def test_renormalize(self):
        out = enforce_state(2 * np.eye(4, dtype=complex) / 4, self.cfg)
        self.assertTrue(np.allclose(out, np.eye(4) / 4))


class DarkStateTestCase(unittest.TestCase):
    """
    Phi_plus is annihilated by J_z and by the antisymmetric Purcell channel
    """
    def _final_fidelity(self, fb, rng):
        rec = run_trajectory(CAPTION, fb, SHORT, rng, rho0='Phi_plus')
        self.assertIsNone(rec.failure)
        return rec.fidelity[-1], rec.concurrence[-1]

    def test_no_feedback(self):
        f, c = self._final_fidelity(FeedbackConfig(), RngStream(5))
        self.assertAlmostEqual(f, 1.0, places=10)
        self.assertAlmostEqual(c, 1.0, places=8)

    def test_state_estimate(self):
        f, _ = self._final_fidelity(FeedbackConfig(strategy='state_estimate', u=1.0), RngStream(5))
        self.assertAlmostEqual(f, 1.0, places=10)

    def test_noiseless_filtered(self):
        fb = FeedbackConfig(strategy='filtered_current', u=10.0, filter=FilterConfig())
        f, _ = self._final_fidelity(fb, _Silent(5))
        self.assertAlmostEqual(f, 1.0, places=10)

    def test_markovian_direct_leaves(self):
        f, _ = self._final_fidelity(FeedbackConfig(strategy='markovian_direct', u=0.1), RngStream(5))
        self.assertLess(f, 1.0 - 1e-6)

    def test_euler_scheme(self):
        cfg = IntegratorConfig(dt=1e-3, t_end=1.0, record_stride=100, scheme='euler')
        rec = run_trajectory(CAPTION, FeedbackConfig(), cfg, RngStream(5), rho0='Phi_plus')
        self.assertAlmostEqual(rec.fidelity[-1], 1.0, places=10)


class TrajectoryTestCase(unittest.TestCase):
    def test_shapes(self):
        cfg = IntegratorConfig(dt=1e-3, t_end=1.0, record_stride=100, record_current=True)
        rec = run_trajectory(NOISY, FeedbackConfig(), cfg, RngStream(1, 2), keep_states=True)
        self.assertEqual(rec.stream_id, 2)
        self.assertEqual(len(rec.times), 11)
        self.assertAlmostEqual(rec.times[-1], 1.0)
        for series in (rec.concurrence, rec.fidelity, rec.purity, rec.current):
            self.assertEqual(len(series), 11)
        self.assertEqual(rec.current[0], 0.0)
        self.assertEqual(rec.states.shape, (11, 4, 4))
        self.assertTrue(np.all(rec.concurrence >= 0) and np.all(rec.concurrence <= 1))
        self.assertTrue(np.all(rec.purity <= 1 + 1e-12))

    def test_initial_sample(self):
        rec = run_trajectory(NOISY, FeedbackConfig(), SHORT, RngStream(1))
        self.assertAlmostEqual(rec.concurrence[0], 0.0)
        self.assertAlmostEqual(rec.fidelity[0], 0.5)
        self.assertAlmostEqual(rec.purity[0], 1.0)

    def test_deterministic_replay(self):
        fb = FeedbackConfig(strategy='filtered_current', u=10.0)
        a = run_trajectory(NOISY, fb, SHORT, RngStream(11, 0))
        b = run_trajectory(NOISY, fb, SHORT, RngStream(11, 0))
        self.assertTrue(np.array_equal(a.concurrence, b.concurrence))
        self.assertTrue(np.array_equal(a.fidelity, b.fidelity))

    def test_frozen_dynamics(self):
        rec = run_trajectory(ModelRates(), FeedbackConfig(), SHORT, RngStream(3), keep_states=True)
        for m in rec.states:
            self.assertTrue(np.allclose(m, np.full((4, 4), 0.25)))

    def test_failure_truncates(self):
        cfg = IntegratorConfig(dt=0.5, t_end=1.0, record_stride=1, scheme='euler')
        rec = run_trajectory(ModelRates(gamma_relax=(10.0, 0.0)), FeedbackConfig(), cfg, RngStream(0), rho0='10')
        self.assertIsInstance(rec.failure, IntegratorFailure)
        self.assertEqual(rec.failure.reason, 'positivity violation')
        self.assertEqual(len(rec.times), 1)

    def test_schemes_agree(self):
        kraus = IntegratorConfig(dt=1e-4, t_end=0.2, record_stride=100)
        euler = IntegratorConfig(dt=1e-4, t_end=0.2, record_stride=100, scheme='euler')
        a = run_trajectory(NOISY, FeedbackConfig(), kraus, RngStream(9))
        b = run_trajectory(NOISY, FeedbackConfig(), euler, RngStream(9))
        self.assertLess(np.max(np.abs(a.fidelity - b.fidelity)), 0.05)
        self.assertLess(np.max(np.abs(a.purity - b.purity)), 0.05)

    def test_euler_survives_pure_states(self):
        cfg = IntegratorConfig(dt=1e-3, t_end=2.0, record_stride=100, scheme='euler')
        for fb in (FeedbackConfig(), FeedbackConfig(strategy='state_estimate', u=1.0),
                   FeedbackConfig(strategy='markovian_direct', u=0.1)):
            for k in range(3):
                rec = run_trajectory(NOISY, fb, cfg, RngStream(4, k))
                self.assertIsNone(rec.failure, fb.strategy)
                self.assertEqual(len(rec.times), cfg.n_samples)
                self.assertLessEqual(np.max(rec.purity), 1.0 + 1e-9)

    def test_euler_tolerance(self):
        euler = IntegratorConfig(dt=1e-3, t_end=1.0, scheme='euler')
        quiet = StepKernel(ModelRates(), FeedbackConfig(), euler)
        self.assertEqual(quiet.euler_tolerance(0.0), euler.positivity_tol)
        kernel = StepKernel(NOISY, FeedbackConfig(), euler)
        self.assertGreater(kernel.euler_tolerance(0.1), kernel.euler_tolerance(0.01))
        coarse = IntegratorConfig(dt=0.5, t_end=1.0, scheme='euler')
        capped = StepKernel(ModelRates(gamma_relax=(10.0, 0.0)), FeedbackConfig(), coarse)
        self.assertAlmostEqual(capped.euler_tolerance(0.0), coarse.positivity_tol + EULER_SLACK_CAP)

    def test_kernel_markovian_flag(self):
        fb = FeedbackConfig(strategy='markovian_direct', u=0.1)
        self.assertTrue(StepKernel(CAPTION, fb, SHORT).markovian)
        self.assertFalse(StepKernel(CAPTION, fb, SHORT, deterministic=True).markovian)


class AnalyticDecayTestCase(unittest.TestCase):
    def _coherence_error(self, dt):
        cfg = IntegratorConfig(dt=dt, t_end=0.1, record_stride=int(round(0.1 / dt)))
        series = lindblad_solve(ModelRates(Gamma_d=1.0), cfg, rho0='Psi_plus')
        self.assertAlmostEqual(series.times[-1], 0.1)
        return abs(series.states[-1][0, 3].real - 0.5 * np.exp(-0.4))

    def test_dephasing_first_order(self):
        e1 = self._coherence_error(1e-3)
        e4 = self._coherence_error(4e-3)
        self.assertLess(e1, 1e-3)
        self.assertTrue(3.0 < e4 / e1 < 5.0)

    def test_relaxation(self):
        r = ModelRates(gamma_relax=(0.5, 0.0))
        for scheme in ('kraus', 'euler'):
            cfg = IntegratorConfig(dt=1e-3, t_end=1.0, record_stride=1000, scheme=scheme)
            series = lindblad_solve(r, cfg, rho0='10')
            self.assertAlmostEqual(series.states[-1][2, 2].real, np.exp(-0.5), delta=1e-3)
            self.assertAlmostEqual(series.states[-1][0, 0].real, 1 - np.exp(-0.5), delta=1e-3)


class SuddenDeathTestCase(unittest.TestCase):
    def test_sudden(self):
        self.assertEqual(detect_sudden_death([0, 1, 2, 3], [0.6, 0.3, 0.0, 0.0]), (2.0, True))

    def test_gradual(self):
        self.assertEqual(detect_sudden_death([0, 1, 2], [0.6, 0.1, 0.0]), (2.0, False))

    def test_never_armed(self):
        self.assertEqual(detect_sudden_death([0, 1], [0.4, 0.0]), (None, False))

    def test_below_floor(self):
        self.assertEqual(detect_sudden_death([0, 1, 2], [0.6, 0.3, 1e-12]), (2.0, True))
        self.assertEqual(detect_sudden_death([0, 1, 2], [0.6, 0.3, 1e-3]), (2.0, True))

    def test_above_floor(self):
        self.assertEqual(detect_sudden_death([0, 1, 2], [0.6, 0.3, 2e-3]), (None, False))

    def test_slow_decline(self):
        times = np.arange(0.0, 6.01, 0.1)
        conc = np.linspace(0.9, 0.0, times.size)
        death, sudden = detect_sudden_death(times, conc)
        self.assertAlmostEqual(death, 6.0)
        self.assertFalse(sudden)

    def test_trajectories_die_without_feedback(self):
        cfg = IntegratorConfig(dt=1e-3, t_end=10.0, record_stride=100)
        recs = [run_trajectory(NOISY, FeedbackConfig(), cfg, RngStream(21, k), rho0='Phi_plus') for k in range(10)]
        deaths = [r for r in recs if r.sudden_death_time is not None]
        self.assertGreater(len(deaths), 0)
        for r in deaths:
            i = int(np.searchsorted(r.times, r.sudden_death_time))
            self.assertLessEqual(r.concurrence[i], 1e-3)


if __name__ == '__main__':
    unittest.main()
