"""
Feedback controllers.

 none              no control
 markovian_direct  H_fb = u I_hom(t) F, folded into the Markovian feedback equation (see model.markovian_fb_terms)
 state_estimate    H_fb = u <J_z>_c F
 filtered_current  H_fb = u sign(R) |R|^P F, with R(t) the exponentially windowed, normalized homodyne current

F is the unit-gain feedback operator (J_x by default).
"""

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .qstate import collective_op

STRATEGIES = ('none', 'markovian_direct', 'state_estimate', 'filtered_current')

OPERATORS = ('Jx', 'Jx_bar', 'weighted_x')

FILTER_MODES = ('exact', 'recursive')


class ControlQueryError(ValueError):
    pass


@dataclass(frozen=True)
class FilterConfig:
    gamma_ft: float = 0.006
    window_T: float = 2.0
    power_P: int = 1
    mode: str = 'exact'

    def __post_init__(self):
        if not self.gamma_ft >= 0:
            raise ValueError('filter gamma_ft must be nonnegative')
        if not self.window_T > 0:
            raise ValueError('filter window_T must be positive')
        if int(self.power_P) != self.power_P or self.power_P < 1:
            raise ValueError('filter power_P must be a positive integer')
        if self.mode not in FILTER_MODES:
            raise ValueError('filter mode must be one of %s' % (FILTER_MODES,))


@dataclass(frozen=True)
class FeedbackConfig:
    """
    :param strategy: one of STRATEGIES
    :param u: gain (units of sqrt(Gamma_d) for the current-multiplying schemes)
    :param operator: 'Jx', 'Jx_bar' or 'weighted_x'
    :param c1, c2: weights for 'weighted_x'
    :param filter: FilterConfig, used by filtered_current
    :param delayed: [False] apply the control value computed on the previous step
    """
    strategy: str = 'none'
    u: float = 0.0
    operator: str = 'Jx'
    c1: float = 1.0
    c2: float = 1.0
    filter: FilterConfig = field(default_factory=FilterConfig)
    delayed: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError('Unknown feedback strategy %s' % self.strategy)
        if self.operator not in OPERATORS:
            raise ValueError('Unknown feedback operator %s' % self.operator)
        if not np.isfinite(self.u):
            raise ValueError('Feedback gain must be finite')

    @property
    def unit_operator(self):
        return feedback_operator(self.operator, self.c1, self.c2)


def feedback_operator(spec, c1=None, c2=None):
    """
    Unit-gain Hermitian feedback operator.
    :param spec: 'Jx' (s1x + s2x), 'Jx_bar' (s1x - s2x) or 'weighted_x' (c1 s1x + c2 s2x)
    """
    if spec == 'weighted_x':
        return collective_op('weighted_x', c1, c2)
    if spec in ('Jx', 'Jx_bar'):
        return collective_op(spec)
    raise ValueError('Unknown feedback operator %s' % spec)


def normalization(gamma_ft, window_T, Gamma_m):
    """
    N = 2 sqrt(Gamma_m) (1 - exp(-gamma_ft T)) / gamma_ft, i.e. the filtered value of the largest noiseless
    signal |<J_z>| = 2, so that R estimates <J_z>_c / 2.  The gamma_ft -> 0 limit is the boxcar 2 sqrt(Gamma_m) T.
    """
    if not Gamma_m > 0:
        raise ValueError('Filtered-current feedback needs Gamma_m > 0')
    if gamma_ft == 0:
        width = window_T
    else:
        width = -np.expm1(-gamma_ft * window_T) / gamma_ft
    return 2.0 * np.sqrt(Gamma_m) * width


class FilterState(object):
    """
    Ring buffer of current increments spanning the last window_T.  The filtered value is the left-endpoint sum

        R = (1/N) sum_k exp(-gamma_ft (t - t_k)) dI_k

    over buffered increments, the newest having zero lag.  Increments older than the window drop out exactly.
    'recursive' mode keeps a running sum with an exact tail correction instead of re-summing the buffer.
    """
    def __init__(self, gamma_ft, window_T, dt, Gamma_m, mode='exact'):
        if not dt > 0:
            raise ValueError('dt must be positive')
        if mode not in FILTER_MODES:
            raise ValueError('Unknown filter mode %s' % mode)
        self._dt = dt
        self._size = max(1, int(np.ceil(window_T / dt - 1e-9)))
        self._weights = np.exp(-gamma_ft * dt * np.arange(self._size))
        self._decay = np.exp(-gamma_ft * dt)
        self._tail = np.exp(-gamma_ft * dt * self._size)
        self._norm = normalization(gamma_ft, window_T, Gamma_m)
        self._mode = mode

        self._buf = np.zeros(self._size)
        self._head = 0  # next slot to write
        self._count = 0
        self._sum = 0.0

    @classmethod
    def from_config(cls, filt, dt, Gamma_m):
        return cls(filt.gamma_ft, filt.window_T, dt, Gamma_m, mode=filt.mode)

    @property
    def dt(self):
        return self._dt

    @property
    def size(self):
        return self._size

    @property
    def norm(self):
        return self._norm

    @property
    def noise_std(self):
        """
        Standard deviation of R for a signal-free current once warmed up, sqrt(dt sum w_k^2) / N
        """
        return float(np.sqrt(self._dt * np.dot(self._weights, self._weights)) / self._norm)

    @property
    def warmed_up(self):
        return self._count >= self._size

    @property
    def value(self):
        return self._sum / self._norm

    def _exact_sum(self):
        h = (self._head - 1) % self._size
        newest = self._buf[h::-1]
        older = self._buf[:h:-1]
        return float(np.dot(self._weights[:h + 1], newest) + np.dot(self._weights[h + 1:], older))

    def update(self, d_i):
        dropped = self._buf[self._head]
        self._buf[self._head] = d_i
        self._head = (self._head + 1) % self._size
        self._count += 1
        if self._mode == 'recursive':
            self._sum = self._decay * self._sum + d_i - self._tail * dropped
        else:
            self._sum = self._exact_sum()
        return self.value


def filter_update(state, d_i, dt):
    """
    Push one current increment into the filter and return the normalized filtered signal R.
    """
    if not dt > 0:
        raise ValueError('dt must be positive')
    if abs(dt - state.dt) > 1e-12 * max(1.0, dt):
        raise ValueError('Filter was built for dt=%g, got %g' % (state.dt, dt))
    return state.update(d_i)


ControlSignals = namedtuple('ControlSignals', ('current', 'jz', 'filtered'))


def control_value(fb, signals):
    """
    Scalar multiplying the unit feedback operator.
    :param fb: FeedbackConfig
    :param signals: ControlSignals(current increment, <J_z>_c, filtered R); unused entries may be None
    :return: float
    """
    if fb.strategy == 'none':
        return 0.0
    if fb.strategy == 'markovian_direct':
        raise ControlQueryError('markovian_direct feedback enters the equation of motion, not a control value')
    if fb.strategy == 'state_estimate':
        if signals.jz is None:
            raise ControlQueryError('state_estimate requires <J_z>_c')
        return fb.u * signals.jz
    if fb.strategy == 'filtered_current':
        if signals.filtered is None:
            raise ControlQueryError('filtered_current requires the filtered signal R')
        r = signals.filtered
        return fb.u * np.sign(r) * abs(r) ** fb.filter.power_P
    raise ControlQueryError('Unknown strategy %s' % fb.strategy)


class FeedbackController(object):
    """
    Per-trajectory controller for the Hamiltonian (non-Markovian-equation) strategies.  Holds the filter state and,
    in delayed mode, the control value of the previous step.  Never shared between trajectories.
    """
    def __init__(self, fb, rates, dt):
        self._fb = fb
        if fb.strategy == 'filtered_current':
            self._filter = FilterState.from_config(fb.filter, dt, rates.Gamma_m)
        else:
            self._filter = None
        self._dt = dt
        self._pending = 0.0

    @property
    def filter(self):
        return self._filter

    def advance(self, jz, d_i):
        """
        :param jz: <J_z>_c at the left endpoint of the step
        :param d_i: homodyne increment of the step
        :return: control value to apply during this step
        """
        filtered = None
        if self._filter is not None:
            filtered = filter_update(self._filter, d_i, self._dt)
        value = control_value(self._fb, ControlSignals(d_i, jz, filtered))
        if self._fb.delayed:
            value, self._pending = self._pending, value
        return value
