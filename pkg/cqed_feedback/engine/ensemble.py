"""
Ensemble driver and reductions.

Trajectories are grouped into fixed blocks of consecutive stream ids.  Each block is integrated by one worker and
reduced to partial sums; partial sums are combined in block order, so the statistics do not depend on the number of
workers.  Mean curves, standard deviations and the mean state are taken over trajectories that completed; a failed
trajectory is counted and excluded.
"""

import logging
import time
from collections import namedtuple
from multiprocessing import Pool

import numpy as np
from scipy.linalg import expm

from .qstate import DIM, concurrence, fidelity_to, purity, hermitize
from .records import StateSeries, death_of
from .sde import RngStream, StepKernel, run_trajectory, initial_state, target_ket
from .feedback import FeedbackConfig
from .model import liouvillian

logger = logging.getLogger(__name__)

BLOCK_SIZE = 25

MAX_FAILURE_FRACTION = 0.01


class EnsembleFailure(RuntimeError):
    """
    Too many trajectories in the ensemble aborted
    """
    def __init__(self, n_failed, n_traj, first_failure=None):
        self.n_failed = n_failed
        self.n_traj = n_traj
        self.first_failure = first_failure
        super(EnsembleFailure, self).__init__('%d of %d trajectories failed (first: %s)' % (n_failed, n_traj,
                                                                                          first_failure))


"""
EnsembleStats.  All series share .times.
.mean_concurrence, .std_concurrence, .mean_fidelity, .std_fidelity, .mean_purity = per-sample trajectory statistics
   (population standard deviation; 0 for a single trajectory)
.concurrence_of_mean_state, .fidelity_of_mean_state, .purity_of_mean_state = metrics of the averaged state
.mean_states = (n_samples, 4, 4) averaged conditional states
.n_traj = number of trajectories requested; .n_ok = number that completed
.failures = tuple of (stream_id, IntegratorFailure)
.deaths = tuple of SuddenDeath for every completed trajectory
.records = tuple of TrajectoryRecord kept for emission (the first emit_limit stream ids)
"""
EnsembleStats = namedtuple('EnsembleStats', ('times', 'mean_concurrence', 'std_concurrence', 'mean_fidelity',
                                             'std_fidelity', 'mean_purity', 'concurrence_of_mean_state',
                                             'fidelity_of_mean_state', 'purity_of_mean_state', 'mean_states',
                                             'n_traj', 'n_ok', 'failures', 'deaths', 'records'))


SuddenDeathSummary = namedtuple('SuddenDeathSummary', ('n_traj', 'n_deaths', 'death_fraction', 'n_sudden',
                                                       'death_times', 'counts', 'edges'))


class _BlockSums(object):
    """
    Partial sums over a run of trajectories
    """
    def __init__(self, n_samples):
        self.n = 0
        self.c = np.zeros(n_samples)
        self.c2 = np.zeros(n_samples)
        self.f = np.zeros(n_samples)
        self.f2 = np.zeros(n_samples)
        self.p = np.zeros(n_samples)
        self.rho = np.zeros((n_samples, DIM, DIM), dtype=complex)
        self.times = None
        self.failures = []
        self.deaths = []
        self.records = []

    def add(self, record, keep=False):
        if record.failure is not None:
            self.failures.append((record.stream_id, record.failure))
            return
        self.n += 1
        self.c += record.concurrence
        self.c2 += record.concurrence ** 2
        self.f += record.fidelity
        self.f2 += record.fidelity ** 2
        self.p += record.purity
        self.rho += record.states
        if self.times is None:
            self.times = record.times
        self.deaths.append(death_of(record))
        if keep:
            self.records.append(record._replace(states=None))

    def merge(self, other):
        self.n += other.n
        self.c += other.c
        self.c2 += other.c2
        self.f += other.f
        self.f2 += other.f2
        self.p += other.p
        self.rho += other.rho
        if self.times is None:
            self.times = other.times
        self.failures.extend(other.failures)
        self.deaths.extend(other.deaths)
        self.records.extend(other.records)


def _run_block(args):
    model, fb, cfg, seed, stream_ids, rho0, target, emit_limit = args
    sums = _BlockSums(cfg.n_samples)
    for sid in stream_ids:
        record = run_trajectory(model, fb, cfg, RngStream(seed, sid), rho0=rho0, target=target, keep_states=True)
        sums.add(record, keep=sid < emit_limit)
    return sums


def stream_blocks(n_traj, block_size=BLOCK_SIZE):
    return [range(k, min(k + block_size, n_traj)) for k in range(0, n_traj, block_size)]


def _population_std(s1, s2, n):
    if n == 1:
        return np.zeros_like(s1)
    var = s2 / n - (s1 / n) ** 2
    return np.sqrt(np.clip(var, 0.0, None))


def reduce_sums(sums, n_traj, target):
    """
    Turn merged partial sums into EnsembleStats
    """
    n = sums.n
    psi = target_ket(target)
    mean_states = sums.rho / n
    mean_states = np.array([hermitize(m) for m in mean_states])
    return EnsembleStats(times=np.array(sums.times),
                         mean_concurrence=sums.c / n,
                         std_concurrence=_population_std(sums.c, sums.c2, n),
                         mean_fidelity=sums.f / n,
                         std_fidelity=_population_std(sums.f, sums.f2, n),
                         mean_purity=sums.p / n,
                         concurrence_of_mean_state=np.array([concurrence(m) for m in mean_states]),
                         fidelity_of_mean_state=np.array([fidelity_to(m, psi) for m in mean_states]),
                         purity_of_mean_state=np.array([purity(m) for m in mean_states]),
                         mean_states=mean_states,
                         n_traj=n_traj, n_ok=n,
                         failures=tuple(sums.failures),
                         deaths=tuple(sums.deaths),
                         records=tuple(sorted(sums.records, key=lambda r: r.stream_id)))


def run_ensemble(model, fb, cfg, n_traj, seed, rho0=None, target=None, workers=1, emit_limit=0,
                 max_failure_fraction=MAX_FAILURE_FRACTION, quiet=True):
    """
    Integrate n_traj trajectories with stream ids 0 .. n_traj-1 and reduce them.

    :param model: ModelRates
    :param fb: FeedbackConfig
    :param cfg: IntegratorConfig
    :param n_traj: number of trajectories, >= 1
    :param seed: master seed
    :param rho0: [separable] initial state
    :param target: [Phi_plus] fidelity target
    :param workers: [1] worker processes; results are identical for any value
    :param emit_limit: [0] keep the records of stream ids below this for output
    :param max_failure_fraction: [0.01] abort if a larger share of trajectories fails
    :param quiet: [True] suppress the progress summary
    :return: EnsembleStats
    """
    if int(n_traj) != n_traj or n_traj < 1:
        raise ValueError('n_traj must be a positive integer')
    if int(workers) != workers or workers < 1:
        raise ValueError('workers must be a positive integer')
    rho0 = initial_state(rho0)
    blocks = stream_blocks(n_traj)
    tasks = [(model, fb, cfg, seed, ids, rho0, target, emit_limit) for ids in blocks]

    t0 = time.time()
    if workers == 1 or len(tasks) == 1:
        partials = [_run_block(task) for task in tasks]
    else:
        with Pool(processes=min(workers, len(tasks))) as pool:
            partials = pool.map(_run_block, tasks)

    total = _BlockSums(cfg.n_samples)
    for part in partials:
        total.merge(part)

    n_failed = len(total.failures)
    if n_failed:
        logger.warning('%d of %d trajectories failed; first: stream %d, %s' % (n_failed, n_traj,
                                                                             total.failures[0][0],
                                                                             total.failures[0][1]))
    if n_failed > max_failure_fraction * n_traj or total.n == 0:
        first = total.failures[0][1] if total.failures else None
        raise EnsembleFailure(n_failed, n_traj, first)

    stats = reduce_sums(total, n_traj, target)
    if not quiet:
        logger.info('Completed %d trajectories (%d failed) in %.3g sec' % (n_traj, n_failed, time.time() - t0))
    if not check_convexity(stats):
        logger.warning('Concurrence of the mean state exceeds the mean concurrence beyond sampling error')
    return stats


def check_convexity(stats, n_sigma=3.0):
    """
    Concurrence is convex, so C(mean state) <= mean C up to sampling error.
    :return: True if satisfied within n_sigma standard errors at every sample
    """
    se = stats.std_concurrence / np.sqrt(max(stats.n_ok, 1))
    return bool(np.all(stats.concurrence_of_mean_state <= stats.mean_concurrence + n_sigma * se + 1e-9))


def sudden_death_stats(deaths, n_traj=None, t_end=None, bins=10):
    """
    Summarize sudden-death events.
    :param deaths: iterable of SuddenDeath (or TrajectoryRecord)
    :param n_traj: [len(deaths)] denominator of the death fraction
    :param t_end: upper edge of the histogram; defaults to the latest death time
    :param bins: [10]
    :return: SuddenDeathSummary
    """
    deaths = list(deaths)
    if n_traj is None:
        n_traj = len(deaths)
    times = np.array([d.sudden_death_time for d in deaths if d.sudden_death_time is not None], dtype=float)
    n_sudden = sum(1 for d in deaths if d.sudden_death_time is not None and d.sudden_jump)
    if t_end is None:
        t_end = float(times.max()) if len(times) else 1.0
    counts, edges = np.histogram(times, bins=bins, range=(0.0, t_end))
    return SuddenDeathSummary(n_traj=n_traj,
                              n_deaths=len(times),
                              death_fraction=len(times) / n_traj if n_traj else 0.0,
                              n_sudden=n_sudden,
                              death_times=times,
                              counts=counts,
                              edges=edges)


def lindblad_solve(model, cfg, rho0=None):
    """
    Integrate the unconditional master equation with the trajectory stepper (no record, no feedback) on the same
    grid and stride as the trajectories.  With scheme 'kraus' this is the map whose noise average the trajectories
    reproduce to O(dt).
    :return: StateSeries
    """
    rho = np.array(initial_state(rho0), dtype=complex)
    kernel = StepKernel(model, FeedbackConfig(), cfg, deterministic=True)
    times = [0.0]
    states = [rho.copy()]
    for k in range(cfg.n_steps):
        t = (k + 1) * cfg.dt
        rho = kernel.advance(rho, 0.0, 0.0, 0.0, t)
        if (k + 1) % cfg.record_stride == 0:
            times.append(t)
            states.append(rho.copy())
    return StateSeries(np.array(times), np.array(states))


def lindblad_propagate(model, times, rho0=None):
    """
    Exact unconditional evolution rho(t) = exp(L t) rho0 by matrix exponential of the 16x16 Liouvillian.
    :param model: ModelRates
    :param times: iterable of nonnegative times
    :param rho0: [separable]
    :return: StateSeries
    """
    gen = liouvillian(model)
    v0 = np.array(initial_state(rho0), dtype=complex).reshape(-1)
    times = np.asarray(times, dtype=float)
    states = np.array([hermitize((expm(gen * t) @ v0).reshape(DIM, DIM)) for t in times])
    return StateSeries(times, states)


def ensemble_metrics(series, target=None):
    """
    Concurrence, fidelity and purity along a StateSeries
    :return: (concurrence, fidelity, purity) arrays
    """
    psi = target_ket(target)
    return (np.array([concurrence(m) for m in series.states]),
            np.array([fidelity_to(m, psi) for m in series.states]),
            np.array([purity(m) for m in series.states]))
