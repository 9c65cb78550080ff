"""
Ito integration of a single conditional trajectory.

Two stepping schemes share the same per-step protocol:

 'kraus' (default)  rho' ~ M rho M^+ + sum_k L_k rho L_k^+ dt,  M = 1 - (iH + 1/2 sum L^+L + 1/2 c^+c) dt + c dI
                    with c = (sqrt(Gamma_m)/2) J_z the monitored channel.  Markovian direct feedback is applied
                    afterwards as the unitary exp(-i F dI).  Positivity is preserved by construction; the map agrees
                    with the Ito equation to first order in dt.
 'euler'            Euler-Maruyama on the drift / diffusion superoperators of the model module.

After either update the state is hermitized, renormalized, and checked for positivity: eigenvalues in
[-tol, 0) are clipped, anything lower aborts the trajectory.  The Kraus map uses tol = positivity_tol.  An
Euler step on a pure state leaves a negative eigenvalue of order var(c) dW^2; the Euler tolerance adds the
per-step allowance

    min(EULER_SLACK_CAP, 4 |c|^2 (dW^2 + dt) + 2 (|drift| dt)^2)

built from spectral-norm bounds of the monitored channel and of the drift generator.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .qstate import (DIM, as_matrix, dagger, hermitize, concurrence, fidelity_to, purity, bell_state,
                     DensityMatrix, POSITIVITY_TOL)
from .model import (JZ, qte_drift, qte_diffusion, markovian_fb_terms, feedback_superop, hamiltonian,
                    measurement_operator, jump_operators)
from .feedback import FeedbackController
from .records import TrajectoryRecord, detect_sudden_death

logger = logging.getLogger(__name__)

JZ_DIAG = np.real(np.diag(JZ))

SCHEMES = ('kraus', 'euler')

HAMILTONIAN_STRATEGIES = ('state_estimate', 'filtered_current')

EULER_SLACK_CAP = 0.5


class IntegratorFailure(ArithmeticError):
    """
    A step produced a non-finite state or a positivity violation beyond tolerance
    """
    def __init__(self, reason, t=None, min_eigenvalue=None):
        self.reason = reason
        self.t = t
        self.min_eigenvalue = min_eigenvalue
        super(IntegratorFailure, self).__init__(reason, t, min_eigenvalue)

    def __str__(self):
        if self.min_eigenvalue is None:
            return '%s at t=%s' % (self.reason, self.t)
        return '%s at t=%s (min eigenvalue %.3g)' % (self.reason, self.t, self.min_eigenvalue)


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Times in units of 1/Gamma_d.
    """
    dt: float = 1e-3
    t_end: float = 30.0
    record_stride: int = 100
    positivity_tol: float = POSITIVITY_TOL
    renormalize: bool = True
    hermitize: bool = True
    scheme: str = 'kraus'
    record_current: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError('integrator dt must be positive')
        if not self.t_end >= self.dt:
            raise ValueError('integrator t_end must be at least dt')
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError('integrator record_stride must be a positive integer')
        if not self.positivity_tol >= 0:
            raise ValueError('positivity_tol must be nonnegative')
        if self.scheme not in SCHEMES:
            raise ValueError('integrator scheme must be one of %s' % (SCHEMES,))

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def n_samples(self):
        return self.n_steps // self.record_stride + 1


class RngStream(object):
    """
    Independent, reproducible Gaussian stream for one trajectory.  Streams are children of a SeedSequence keyed by
    (seed, stream_id), so distinct stream ids are statistically independent and a given pair always replays the
    same numbers.
    """
    def __init__(self, seed, stream_id=0):
        self._seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._stream_id = int(stream_id)
        self._gen = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(self._seed, spawn_key=(self._stream_id,))))

    @property
    def seed(self):
        return self._seed

    @property
    def stream_id(self):
        return self._stream_id

    def normal(self, scale, size=None):
        return self._gen.normal(0.0, scale, size=size)

    def wiener_increments(self, n, dt):
        return self.normal(np.sqrt(dt), size=n)


def wiener_increment(rng, dt):
    """
    Gaussian increment with mean 0 and variance dt
    """
    if not dt > 0:
        raise ValueError('dt must be positive')
    return float(rng.normal(np.sqrt(dt)))


def homodyne_increment(rho, r, d_w, dt):
    """
    dI = sqrt(Gamma_m) <J_z>_c dt + dW
    """
    jz = float(np.dot(JZ_DIAG, np.real(np.diag(as_matrix(rho)))))
    return np.sqrt(r.Gamma_m) * jz * dt + d_w


def enforce_state(m, cfg, t=None, tol=None):
    """
    Hermitize, renormalize and positivity-check a freshly stepped state.
    :param m: 4x4 array
    :param cfg: IntegratorConfig
    :param t: time stamp for error reports
    :param tol: [cfg.positivity_tol] most negative eigenvalue that is clipped instead of aborting
    :return: the repaired 4x4 array
    """
    if not np.all(np.isfinite(m)):
        raise IntegratorFailure('non-finite state', t)
    if cfg.hermitize:
        m = hermitize(m)
    if cfg.renormalize:
        tr = np.trace(m).real
        if not tr > 0:
            raise IntegratorFailure('non-positive trace', t)
        m = m / tr
    if tol is None:
        tol = cfg.positivity_tol
    w, v = np.linalg.eigh(hermitize(m))
    if w[0] < -tol:
        raise IntegratorFailure('positivity violation', t, float(w[0]))
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        m = (v * w) @ dagger(v)
        if cfg.renormalize:
            m = m / np.trace(m).real
    return m


def step(rho, drift, diffusion, d_w, cfg, t=None, tol=None):
    """
    Euler-Maruyama update rho + drift dt + diffusion dW, coefficients evaluated at the left endpoint, followed by
    enforce_state.
    """
    m = as_matrix(rho) + as_matrix(drift) * cfg.dt + as_matrix(diffusion) * d_w
    return enforce_state(m, cfg, t, tol)


def _vec_superop(ops):
    """
    Row-major matrix of rho -> sum_k L_k rho L_k^+
    """
    s = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    for op in ops:
        s += np.kron(op, op.conj())
    return s


class StepKernel(object):
    """
    Operators of one equation of motion, precomputed once per trajectory.

    :param rates: ModelRates
    :param fb: FeedbackConfig
    :param cfg: IntegratorConfig
    :param deterministic: [False] drop the measurement record entirely (unconditional master equation)
    """
    def __init__(self, rates, fb, cfg, deterministic=False):
        self._rates = rates
        self._fb = fb
        self._cfg = cfg
        self._deterministic = deterministic
        self._markovian = fb.strategy == 'markovian_direct' and not deterministic

        self._f_unit = fb.unit_operator
        self._identity = np.eye(DIM, dtype=complex)

        if deterministic:
            self._c = np.zeros((DIM, DIM), dtype=complex)
            jumps = jump_operators(rates, monitored=False)
        else:
            self._c = measurement_operator(rates)
            jumps = jump_operators(rates, monitored=True)
        self._jump_super = _vec_superop(jumps)
        self._has_jumps = len(jumps) > 0
        k_eff = 1j * hamiltonian(rates) + 0.5 * dagger(self._c) @ self._c
        for op in jumps:
            k_eff = k_eff + 0.5 * dagger(op) @ op
        self._k_eff = k_eff

        if self._markovian:
            self._f_w, self._f_v = np.linalg.eigh(fb.u * self._f_unit)

        self._f_norm = np.linalg.norm(self._f_unit, 2)
        c_norm = np.linalg.norm(self._c, 2)
        if self._markovian:
            c_norm += abs(fb.u) * self._f_norm
        self._noise_bound = c_norm ** 2
        self._drift_bound = np.linalg.norm(k_eff, 2) + sum(np.linalg.norm(op, 2) ** 2 for op in jumps)
        if self._markovian:
            self._drift_bound += 0.5 * (fb.u * self._f_norm) ** 2

    @property
    def markovian(self):
        return self._markovian

    def euler_tolerance(self, d_w, control=0.0):
        """
        Positivity tolerance of one Euler-Maruyama step with Wiener increment d_w
        """
        dt = self._cfg.dt
        drift = (self._drift_bound + abs(control) * self._f_norm) * dt
        slack = 4.0 * self._noise_bound * (d_w * d_w + dt) + 2.0 * drift * drift
        return self._cfg.positivity_tol + min(EULER_SLACK_CAP, slack)

    def _kraus(self, rho, d_i, control):
        dt = self._cfg.dt
        m = self._identity - self._k_eff * dt + self._c * d_i
        if control:
            m = m - 1j * control * dt * self._f_unit
        out = m @ rho @ dagger(m)
        if self._has_jumps:
            out = out + (self._jump_super @ rho.reshape(-1)).reshape(DIM, DIM) * dt
        if self._markovian:
            u = (self._f_v * np.exp(-1j * self._f_w * d_i)) @ dagger(self._f_v)
            out = u @ out @ dagger(u)
        return out

    def _euler(self, rho, d_w, control, t):
        r = self._rates
        drift = qte_drift(rho, r)
        if self._deterministic:
            diffusion = np.zeros((DIM, DIM), dtype=complex)
        else:
            diffusion = qte_diffusion(rho, r)
        if self._markovian:
            extra = markovian_fb_terms(rho, r, self._fb.u * self._f_unit)
            drift = drift + extra.drift
            diffusion = diffusion + extra.diffusion
        if control:
            drift = drift + control * feedback_superop(self._f_unit, rho)
        return step(rho, drift, diffusion, d_w, self._cfg, t, self.euler_tolerance(d_w, control))

    def advance(self, rho, d_i, d_w, control=0.0, t=None):
        """
        One step of the configured scheme.
        :param rho: 4x4 array at the left endpoint
        :param d_i: homodyne increment
        :param d_w: Wiener increment
        :param control: scalar multiplying the unit feedback operator (Hamiltonian strategies)
        :param t: time at the end of the step, for error reports
        """
        if self._cfg.scheme == 'euler':
            return self._euler(rho, d_w, control, t)
        return enforce_state(self._kraus(rho, d_i, control), self._cfg, t)


def initial_state(rho0=None):
    """
    Default initial state: the separable product (|0>+|1>)(|0>+|1>)/2
    """
    if rho0 is None:
        return DensityMatrix.separable()
    if isinstance(rho0, str):
        return DensityMatrix.named(rho0)
    if isinstance(rho0, DensityMatrix):
        return rho0
    return DensityMatrix(rho0)


def target_ket(target=None):
    if target is None:
        return bell_state('Phi_plus')
    if isinstance(target, str):
        return bell_state(target)
    return np.asarray(target, dtype=complex)


def run_trajectory(model, fb, cfg, rng, rho0=None, target=None, keep_states=False):
    """
    Integrate one conditional trajectory.  Per step: <J_z>_c at the left endpoint, draw dW, form dI, advance the
    controller (filter update and control value), then step the state; metrics are recorded every record_stride
    steps and at t = 0.

    :param model: ModelRates
    :param fb: FeedbackConfig
    :param cfg: IntegratorConfig
    :param rng: RngStream
    :param rho0: [separable] DensityMatrix, array or state name
    :param target: [Phi_plus] Bell-state name or ket used for the fidelity series
    :param keep_states: [False] store the sampled conditional states on the record
    :return: TrajectoryRecord (failure set and series truncated if a step failed)
    """
    rho = np.array(initial_state(rho0), dtype=complex)
    psi = target_ket(target)
    kernel = StepKernel(model, fb, cfg)
    controller = None
    if fb.strategy in HAMILTONIAN_STRATEGIES:
        controller = FeedbackController(fb, model, cfg.dt)

    n = cfg.n_steps
    stride = cfg.record_stride
    dt = cfg.dt
    sqrt_gm = np.sqrt(model.Gamma_m)
    d_ws = rng.wiener_increments(n, dt)

    times = [0.0]
    conc = [concurrence(rho)]
    fid = [fidelity_to(rho, psi)]
    pur = [purity(rho)]
    states = [rho.copy()] if keep_states else None
    current = [0.0] if cfg.record_current else None
    acc_current = 0.0
    failure = None

    for k in range(n):
        jz = float(np.dot(JZ_DIAG, np.real(np.diag(rho))))
        d_w = d_ws[k]
        d_i = sqrt_gm * jz * dt + d_w
        control = 0.0
        if controller is not None:
            control = controller.advance(jz, d_i)
        t = (k + 1) * dt
        try:
            rho = kernel.advance(rho, d_i, d_w, control, t)
        except IntegratorFailure as e:
            logger.debug('stream %d: %s' % (rng.stream_id, e))
            failure = e
            break
        acc_current += d_i
        if (k + 1) % stride == 0:
            times.append(t)
            conc.append(concurrence(rho))
            fid.append(fidelity_to(rho, psi))
            pur.append(purity(rho))
            if keep_states:
                states.append(rho.copy())
            if current is not None:
                current.append(acc_current)
                acc_current = 0.0

    death_time, sudden = detect_sudden_death(times, conc)
    return TrajectoryRecord(rng.stream_id,
                            np.array(times), np.array(conc), np.array(fid), np.array(pur),
                            None if current is None else np.array(current),
                            death_time, sudden, failure,
                            None if states is None else np.array(states))
