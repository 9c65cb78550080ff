"""
Record types passed between the integrator, the ensemble reduction and the run store.
"""

from collections import namedtuple


DEATH_ARM_THRESHOLD = 0.5
SUDDEN_JUMP_THRESHOLD = 0.2
DEATH_FLOOR = 1e-3
SUDDEN_WINDOW = 1.0


"""
A TrajectoryRecord is the sampled history of one seeded realization. It contains:
.stream_id = trajectory index within its ensemble
.times, .concurrence, .fidelity, .purity = equal-length float arrays, one entry per recorded sample
.current = None, or the homodyne current integrated over each recording stride (first entry 0)
.sudden_death_time = None, or the first sample time at which concurrence is at or below DEATH_FLOOR after
    exceeding 0.5
.sudden_jump = True if concurrence was still above 0.2 less than SUDDEN_WINDOW before that death
.failure = None, or an IntegratorFailure; the series then end at the last valid sample
.states = None, or an (n_samples, 4, 4) array of conditional states
"""
TrajectoryRecord = namedtuple('TrajectoryRecord', ('stream_id', 'times', 'concurrence', 'fidelity', 'purity',
                                                   'current', 'sudden_death_time', 'sudden_jump', 'failure',
                                                   'states'))


SuddenDeath = namedtuple('SuddenDeath', ('stream_id', 'sudden_death_time', 'sudden_jump'))


StateSeries = namedtuple('StateSeries', ('times', 'states'))


def detect_sudden_death(times, concurrence, arm=DEATH_ARM_THRESHOLD, jump=SUDDEN_JUMP_THRESHOLD, floor=DEATH_FLOOR,
                        window=SUDDEN_WINDOW):
    """
    Entanglement is declared dead at the first sample where C <= `floor`, provided C exceeded `arm` earlier.
    The death is 'sudden' when the last sample above `jump` lies within `window` of the death time.
    :param times:
    :param concurrence:
    :param arm: [0.5]
    :param jump: [0.2]
    :param floor: [1e-3]
    :param window: [1.0] time units
    :return: (death_time or None, sudden: bool)
    """
    armed = False
    last_high = None
    for t, c in zip(times, concurrence):
        if c > arm:
            armed = True
        if c > jump:
            last_high = t
        elif armed and c <= floor:
            sudden = last_high is not None and t - last_high <= window
            return float(t), bool(sudden)
    return None, False


def death_of(record):
    return SuddenDeath(record.stream_id, record.sudden_death_time, record.sudden_jump)
