import unittest

import numpy as np

from ..qstate import qubit_op, kron, collective_op
from ..model import ModelRates
from ..sde import RngStream
from ..feedback import (FeedbackConfig, FilterConfig, FilterState, FeedbackController, ControlSignals,
                        ControlQueryError, feedback_operator, normalization, filter_update, control_value)

SX = np.array([[0, 1], [1, 0]], dtype=complex)

DT = 1e-3
GAMMA_M = 2.0


def _filter(gamma_ft=0.006, window_T=2.0, mode='exact'):
    return FilterState(gamma_ft, window_T, DT, GAMMA_M, mode=mode)


class FeedbackOperatorTestCase(unittest.TestCase):
    def test_jx(self):
        self.assertTrue(np.allclose(feedback_operator('Jx'), qubit_op('x', 1) + qubit_op('x', 2)))

    def test_jx_bar(self):
        self.assertTrue(np.allclose(feedback_operator('Jx_bar'), qubit_op('x', 1) - qubit_op('x', 2)))

    def test_weighted(self):
        self.assertTrue(np.allclose(feedback_operator('weighted_x', 1, 0), kron(SX, np.eye(2))))

    def test_hermitian(self):
        for spec in ('Jx', 'Jx_bar'):
            f = feedback_operator(spec)
            self.assertTrue(np.allclose(f, f.conj().T))

    def test_config(self):
        fb = FeedbackConfig(strategy='state_estimate', u=1.0, operator='Jx_bar')
        self.assertTrue(np.allclose(fb.unit_operator, collective_op('Jx_bar')))
        with self.assertRaises(ValueError):
            FeedbackConfig(strategy='bang_bang')
        with self.assertRaises(ValueError):
            FeedbackConfig(u=np.nan)
        with self.assertRaises(ValueError):
            FilterConfig(power_P=0)
        with self.assertRaises(ValueError):
            FilterConfig(window_T=0.0)


class FilterTestCase(unittest.TestCase):
    def test_size(self):
        self.assertEqual(_filter().size, 2000)

    def test_zero_input(self):
        f = _filter()
        for _ in range(100):
            self.assertEqual(filter_update(f, 0.0, DT), 0.0)

    def test_normalization(self):
        self.assertAlmostEqual(normalization(0.006, 2.0, GAMMA_M),
                               2 * np.sqrt(GAMMA_M) * (1 - np.exp(-0.012)) / 0.006)
        self.assertAlmostEqual(normalization(0.0, 2.0, GAMMA_M), 2 * np.sqrt(GAMMA_M) * 2.0)
        with self.assertRaises(ValueError):
            normalization(0.006, 2.0, 0.0)

    def test_pinned_current(self):
        f = _filter()
        d_i = 2 * np.sqrt(GAMMA_M) * DT
        r = 0.0
        for _ in range(3000):
            r = filter_update(f, d_i, DT)
        self.assertTrue(f.warmed_up)
        self.assertAlmostEqual(r, 1.0, delta=2e-5)

    def test_warm_up_monotone(self):
        f = _filter()
        d_i = 2 * np.sqrt(GAMMA_M) * DT
        prev = 0.0
        for _ in range(f.size):
            r = filter_update(f, d_i, DT)
            self.assertGreaterEqual(r, prev - 1e-15)
            prev = r

    def test_impulse_boxcar(self):
        f = _filter(gamma_ft=0.0)
        r = filter_update(f, 1.0, DT)
        self.assertAlmostEqual(r, 1 / f.norm)
        for _ in range(f.size - 1):
            r = filter_update(f, 0.0, DT)
            self.assertAlmostEqual(r, 1 / f.norm)
        self.assertEqual(filter_update(f, 0.0, DT), 0.0)

    def test_linear(self):
        rng = np.random.default_rng(4)
        x1 = rng.normal(size=2500) * np.sqrt(DT)
        x2 = rng.normal(size=2500) * np.sqrt(DT)
        fa, fb, fc = _filter(), _filter(), _filter()
        for a, b in zip(x1, x2):
            ra = filter_update(fa, a, DT)
            rb = filter_update(fb, b, DT)
            rc = filter_update(fc, 0.5 * a - 2.0 * b, DT)
            self.assertAlmostEqual(rc, 0.5 * ra - 2.0 * rb, places=10)

    def test_recursive_matches_exact(self):
        exact, rec = _filter(), _filter(mode='recursive')
        d_i = 2 * np.sqrt(GAMMA_M) * DT
        for k in range(5000):
            x = d_i if k < 3500 else -d_i
            self.assertAlmostEqual(filter_update(rec, x, DT), filter_update(exact, x, DT), delta=1e-6)

    def test_noise_floor(self):
        self.assertAlmostEqual(_filter(gamma_ft=0.0).noise_std, 1 / (2 * np.sqrt(GAMMA_M * 2.0)))
        f = _filter(mode='recursive')
        self.assertAlmostEqual(f.noise_std, 0.25, delta=1e-3)
        d_w = RngStream(17).wiener_increments(200 * f.size, DT)
        samples = []
        for k, x in enumerate(d_w):
            r = filter_update(f, x, DT)
            if (k + 1) % f.size == 0:
                samples.append(r)
        self.assertAlmostEqual(np.std(samples) / f.noise_std, 1.0, delta=0.15)

    def test_dt_mismatch(self):
        with self.assertRaises(ValueError):
            filter_update(_filter(), 0.0, 2 * DT)


class ControlValueTestCase(unittest.TestCase):
    def test_none(self):
        self.assertEqual(control_value(FeedbackConfig(), ControlSignals(0.1, 1.0, 0.5)), 0.0)

    def test_state_estimate_dark(self):
        fb = FeedbackConfig(strategy='state_estimate', u=1.0)
        self.assertEqual(control_value(fb, ControlSignals(None, 0.0, None)), 0.0)
        self.assertEqual(control_value(fb, ControlSignals(None, -1.5, None)), -1.5)

    def test_filtered(self):
        fb = FeedbackConfig(strategy='filtered_current', u=10.0)
        self.assertEqual(control_value(fb, ControlSignals(None, None, 0.0)), 0.0)
        self.assertAlmostEqual(control_value(fb, ControlSignals(None, None, 0.5)), 5.0)

    def test_even_power_keeps_sign(self):
        fb = FeedbackConfig(strategy='filtered_current', u=10.0, filter=FilterConfig(power_P=2))
        self.assertAlmostEqual(control_value(fb, ControlSignals(None, None, -0.5)), -2.5)
        self.assertAlmostEqual(control_value(fb, ControlSignals(None, None, 0.5)), 2.5)

    def test_errors(self):
        with self.assertRaises(ControlQueryError):
            control_value(FeedbackConfig(strategy='markovian_direct', u=0.1), ControlSignals(0.1, 0.0, None))
        with self.assertRaises(ControlQueryError):
            control_value(FeedbackConfig(strategy='state_estimate', u=1.0), ControlSignals(0.1, None, None))
        with self.assertRaises(ControlQueryError):
            control_value(FeedbackConfig(strategy='filtered_current', u=1.0), ControlSignals(0.1, 0.0, None))


class ControllerTestCase(unittest.TestCase):
    rates = ModelRates.from_efficiency(Gamma_d=1.0)

    def test_delayed(self):
        fb = FeedbackConfig(strategy='state_estimate', u=2.0, delayed=True)
        c = FeedbackController(fb, self.rates, DT)
        self.assertEqual(c.advance(1.0, 0.0), 0.0)
        self.assertEqual(c.advance(0.5, 0.0), 2.0)
        self.assertEqual(c.advance(0.0, 0.0), 1.0)

    def test_filtered_controller(self):
        fb = FeedbackConfig(strategy='filtered_current', u=10.0)
        c = FeedbackController(fb, self.rates, DT)
        self.assertIsNotNone(c.filter)
        self.assertEqual(c.advance(0.0, 0.0), 0.0)
        self.assertGreater(c.advance(0.0, 1e-3), 0.0)


if __name__ == '__main__':
    unittest.main()
