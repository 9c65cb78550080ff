"""
Scenario configuration.

A scenario is written as flat dotted keys, one `key = value` per line; `#` starts a comment.  Rates are in units of
Gamma_d and times in units of 1/Gamma_d.  The model is given either through `physical.*` (cavity parameters, from
which rates are derived) or through `rates.*` (rates given directly), never both.

Preset families are expressed as `variant.<label>.<key> = value` entries; each variant is the base scenario with
those keys replaced.
"""

import logging
import numbers
from collections import OrderedDict, namedtuple
from dataclasses import dataclass, field

import numpy as np

from ..engine.qstate import DensityMatrix, bell_state
from ..engine.model import PhysicalParams, ModelRates, PURCELL_SIGNS
from ..engine.feedback import FeedbackConfig, FilterConfig, STRATEGIES, OPERATORS, FILTER_MODES
from ..engine.sde import IntegratorConfig, SCHEMES

logger = logging.getLogger(__name__)

ENV_PREFIX = 'QFB_'

ENV_SHORTCUTS = {
    'QFB_SEED': 'run.seed',
    'QFB_TRAJECTORIES': 'run.n_traj',
    'QFB_WORKERS': 'run.workers',
    'QFB_OUT': 'run.out',
}


class ConfigError(ValueError):
    """
    Carries every violation found, as a list of (key, reason)
    """
    def __init__(self, violations):
        self.violations = list(violations)
        super(ConfigError, self).__init__('; '.join('%s: %s' % v for v in self.violations))


def _to_float(value):
    if isinstance(value, bool):
        raise ValueError('expected a number, got %r' % value)
    return float(value)


def _to_int(value):
    if isinstance(value, bool):
        raise ValueError('expected an integer, got %r' % value)
    if isinstance(value, str):
        return int(value.strip())
    if int(value) != value:
        raise ValueError('expected an integer, got %r' % value)
    return int(value)


_TRUE = ('true', 'yes', 'on', '1')
_FALSE = ('false', 'no', 'off', '0')


def _to_bool(value):
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ValueError('expected true or false, got %r' % value)


def _choice(options):
    def _conv(value):
        v = str(value).strip()
        if v not in options:
            raise ValueError('expected one of %s, got %r' % (', '.join(options), v))
        return v
    return _conv


def _to_str(value):
    return str(value).strip()


Key = namedtuple('Key', ('convert', 'default'))


SCHEMA = OrderedDict([
    ('physical.g', Key(_to_float, None)),
    ('physical.delta', Key(_to_float, None)),
    ('physical.epsilon', Key(_to_float, None)),
    ('physical.kappa', Key(_to_float, None)),
    ('physical.eta', Key(_to_float, 1.0)),
    ('rates.chi_alpha2', Key(_to_float, 0.0)),
    ('rates.Gamma_d', Key(_to_float, 1.0)),
    ('rates.gamma_p', Key(_to_float, 0.0)),
    ('rates.eta', Key(_to_float, 1.0)),
    ('noise.gamma_1', Key(_to_float, 0.0)),
    ('noise.gamma_2', Key(_to_float, 0.0)),
    ('noise.gamma_phi1', Key(_to_float, 0.0)),
    ('noise.gamma_phi2', Key(_to_float, 0.0)),
    ('model.purcell_sign', Key(_choice(PURCELL_SIGNS), 'minus')),
    ('feedback.strategy', Key(_choice(STRATEGIES), 'none')),
    ('feedback.u', Key(_to_float, 0.0)),
    ('feedback.operator', Key(_choice(OPERATORS), 'Jx')),
    ('feedback.c1', Key(_to_float, 1.0)),
    ('feedback.c2', Key(_to_float, 1.0)),
    ('feedback.delayed', Key(_to_bool, False)),
    ('filter.gamma_ft', Key(_to_float, 0.006)),
    ('filter.window_T', Key(_to_float, 2.0)),
    ('filter.power_P', Key(_to_int, 1)),
    ('filter.mode', Key(_choice(FILTER_MODES), 'exact')),
    ('integrator.dt', Key(_to_float, 1e-3)),
    ('integrator.t_end', Key(_to_float, 30.0)),
    ('integrator.record_stride', Key(_to_int, 100)),
    ('integrator.positivity_tol', Key(_to_float, 1e-6)),
    ('integrator.renormalize', Key(_to_bool, True)),
    ('integrator.hermitize', Key(_to_bool, True)),
    ('integrator.scheme', Key(_choice(SCHEMES), 'kraus')),
    ('integrator.record_current', Key(_to_bool, False)),
    ('initial.state', Key(_to_str, 'separable')),
    ('target.state', Key(_to_str, 'Phi_plus')),
    ('run.label', Key(_to_str, 'custom')),
    ('run.n_traj', Key(_to_int, 100)),
    ('run.seed', Key(_to_int, 0)),
    ('run.out', Key(_to_str, 'runs')),
    ('run.emit_trajectories', Key(_to_bool, False)),
    ('run.emit_limit', Key(_to_int, 10)),
    ('run.workers', Key(_to_int, 1)),
    ('run.max_failure_fraction', Key(_to_float, 0.01)),
    ('run.save_states', Key(_to_bool, False)),
])


def format_value(value):
    """
    Canonical text of a config value.  numpy scalars are written as plain Python numbers.
    """
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return repr(float(value))
    return str(value)


@dataclass(frozen=True)
class DirectRates:
    """
    Rates given directly, in units of Gamma_d
    """
    chi_alpha2: float = 0.0
    Gamma_d: float = 1.0
    gamma_p: float = 0.0
    eta: float = 1.0


@dataclass(frozen=True)
class NoiseRates:
    gamma_1: float = 0.0
    gamma_2: float = 0.0
    gamma_phi1: float = 0.0
    gamma_phi2: float = 0.0

    def __post_init__(self):
        if min(self.gamma_1, self.gamma_2, self.gamma_phi1, self.gamma_phi2) < 0:
            raise ValueError('noise rates must be nonnegative')


@dataclass(frozen=True)
class ScenarioConfig:
    """
    A complete, validated scenario.  `source` is either PhysicalParams or DirectRates.
    """
    source: object
    noise: NoiseRates = field(default_factory=NoiseRates)
    purcell_sign: str = 'minus'
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    initial_state: str = 'separable'
    target_state: str = 'Phi_plus'
    label: str = 'custom'
    n_traj: int = 100
    seed: int = 0
    out: str = 'runs'
    emit_trajectories: bool = False
    emit_limit: int = 10
    workers: int = 1
    max_failure_fraction: float = 0.01
    save_states: bool = False
    variants: tuple = ()

    @property
    def physical(self):
        return isinstance(self.source, PhysicalParams)

    @property
    def rates(self):
        relax = (self.noise.gamma_1, self.noise.gamma_2)
        phi = (self.noise.gamma_phi1, self.noise.gamma_phi2)
        if self.physical:
            return ModelRates.from_physical(self.source, gamma_relax=relax, gamma_phi=phi,
                                            purcell_sign=self.purcell_sign)
        s = self.source
        return ModelRates.from_efficiency(chi_alpha2=s.chi_alpha2, Gamma_d=s.Gamma_d, gamma_p=s.gamma_p, eta=s.eta,
                                          gamma_relax=relax, gamma_phi=phi, purcell_sign=self.purcell_sign)

    @property
    def rho0(self):
        return DensityMatrix.named(self.initial_state)

    @property
    def variant_labels(self):
        return tuple(label for label, _ in self.variants)

    def variant(self, label):
        """
        The base scenario with the named variant's keys applied; the result carries the variant label and no
        variants of its own.
        """
        for v_label, overrides in self.variants:
            if v_label == label:
                flat = to_flat(self, with_variants=False)
                flat.update(overrides)
                flat['run.label'] = label
                return from_flat(flat)
        raise KeyError('No variant %s (have %s)' % (label, ', '.join(self.variant_labels)))

    def expand(self):
        """
        :return: list of (label, ScenarioConfig): the base run first, then each variant
        """
        return [(self.label, self)] + [(label, self.variant(label)) for label in self.variant_labels]


def to_flat(cfg, with_variants=True):
    """
    Canonical flat form: every key with its value formatted as text, in schema order
    """
    s = cfg.source
    flat = OrderedDict()
    if cfg.physical:
        flat['physical.g'] = s.g
        flat['physical.delta'] = s.delta
        flat['physical.epsilon'] = s.epsilon
        flat['physical.kappa'] = s.kappa
        flat['physical.eta'] = s.eta
    else:
        flat['rates.chi_alpha2'] = s.chi_alpha2
        flat['rates.Gamma_d'] = s.Gamma_d
        flat['rates.gamma_p'] = s.gamma_p
        flat['rates.eta'] = s.eta
    n = cfg.noise
    flat['noise.gamma_1'] = n.gamma_1
    flat['noise.gamma_2'] = n.gamma_2
    flat['noise.gamma_phi1'] = n.gamma_phi1
    flat['noise.gamma_phi2'] = n.gamma_phi2
    flat['model.purcell_sign'] = cfg.purcell_sign
    fb = cfg.feedback
    flat['feedback.strategy'] = fb.strategy
    flat['feedback.u'] = fb.u
    flat['feedback.operator'] = fb.operator
    flat['feedback.c1'] = fb.c1
    flat['feedback.c2'] = fb.c2
    flat['feedback.delayed'] = fb.delayed
    flat['filter.gamma_ft'] = fb.filter.gamma_ft
    flat['filter.window_T'] = fb.filter.window_T
    flat['filter.power_P'] = fb.filter.power_P
    flat['filter.mode'] = fb.filter.mode
    ic = cfg.integrator
    for k in ('dt', 't_end', 'record_stride', 'positivity_tol', 'renormalize', 'hermitize', 'scheme',
              'record_current'):
        flat['integrator.' + k] = getattr(ic, k)
    flat['initial.state'] = cfg.initial_state
    flat['target.state'] = cfg.target_state
    for k in ('label', 'n_traj', 'seed', 'out', 'emit_trajectories', 'emit_limit', 'workers',
              'max_failure_fraction', 'save_states'):
        flat['run.' + k] = getattr(cfg, k)
    flat = OrderedDict((k, format_value(v)) for k, v in flat.items())
    if with_variants:
        for label, overrides in cfg.variants:
            for k, v in overrides:
                flat['variant.%s.%s' % (label, k)] = v
    return flat


def emit_config(cfg, header=None):
    """
    Render a scenario as flat-key text that parse_config reads back to an equal scenario.
    :param cfg: ScenarioConfig
    :param header: optional iterable of comment lines
    """
    lines = []
    if header:
        lines.extend('# %s' % h for h in header)
    section = None
    for k, v in to_flat(cfg).items():
        sec = k.split('.')[0]
        if sec != section and section is not None:
            lines.append('')
        section = sec
        lines.append('%s = %s' % (k, v))
    return '\n'.join(lines) + '\n'


def read_flat(text):
    """
    Split config text into an ordered key -> raw-string mapping (last occurrence wins).
    :return: (flat, violations)
    """
    flat = OrderedDict()
    violations = []
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            violations.append(('line %d' % n, 'expected key = value'))
            continue
        key, value = line.split('=', 1)
        key = key.strip()
        if not key:
            violations.append(('line %d' % n, 'empty key'))
            continue
        flat[key] = value.strip()
    return flat, violations


def _convert(key, raw, violations):
    try:
        return SCHEMA[key].convert(raw)
    except (TypeError, ValueError) as e:
        violations.append((key, str(e)))


def _split_variant(key):
    parts = key.split('.', 2)
    if len(parts) < 3 or not parts[1]:
        return None, None
    return parts[1], parts[2]


def _build(path, violations, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (TypeError, ValueError, KeyError) as e:
        violations.append((path, str(e).strip("'")))


def from_flat(flat, violations=None):
    """
    Validate a flat key mapping and assemble the ScenarioConfig.  Values may be raw strings or already typed.
    Every problem is collected before ConfigError is raised.
    """
    violations = list(violations or ())
    values = {}
    variants = OrderedDict()
    for key, raw in flat.items():
        if key.startswith('variant.'):
            label, sub = _split_variant(key)
            if label is None:
                violations.append((key, 'expected variant.<label>.<key>'))
            elif sub not in SCHEMA or sub.startswith('variant.'):
                violations.append((key, 'unknown key %s' % sub))
            else:
                v = _convert(sub, raw, violations)
                if v is not None:
                    variants.setdefault(label, OrderedDict())[sub] = format_value(v)
            continue
        if key not in SCHEMA:
            violations.append((key, 'unknown key'))
            continue
        v = _convert(key, raw, violations)
        if v is not None:
            values[key] = v

    def get(k):
        return values.get(k, SCHEMA[k].default)

    has_phys = any(k.startswith('physical.') for k in values)
    has_rates = any(k.startswith('rates.') for k in values)
    source = None
    if has_phys and has_rates:
        violations.append(('physical', 'give either physical.* or rates.*, not both'))
    elif has_phys:
        missing = [k for k in ('physical.g', 'physical.delta', 'physical.epsilon', 'physical.kappa')
                   if k not in values]
        for k in missing:
            violations.append((k, 'required with physical parameters'))
        if not missing:
            source = _build('physical', violations, PhysicalParams, get('physical.g'), get('physical.delta'),
                            get('physical.epsilon'), get('physical.kappa'), eta=get('physical.eta'))
    elif has_rates:
        source = DirectRates(get('rates.chi_alpha2'), get('rates.Gamma_d'), get('rates.gamma_p'), get('rates.eta'))
    else:
        violations.append(('rates', 'one of physical.* or rates.* is required'))

    noise = _build('noise', violations, NoiseRates, get('noise.gamma_1'), get('noise.gamma_2'),
                   get('noise.gamma_phi1'), get('noise.gamma_phi2'))
    filt = _build('filter', violations, FilterConfig, get('filter.gamma_ft'), get('filter.window_T'),
                  get('filter.power_P'), get('filter.mode'))
    fb = None
    if filt is not None:
        fb = _build('feedback', violations, FeedbackConfig, strategy=get('feedback.strategy'), u=get('feedback.u'),
                    operator=get('feedback.operator'), c1=get('feedback.c1'), c2=get('feedback.c2'), filter=filt,
                    delayed=get('feedback.delayed'))
    ic = _build('integrator', violations, IntegratorConfig, **{k.split('.')[1]: get(k) for k in SCHEMA
                                                                if k.startswith('integrator.')})

    _build('initial.state', violations, DensityMatrix.named, get('initial.state'))
    _build('target.state', violations, bell_state, get('target.state'))

    if get('run.n_traj') < 1:
        violations.append(('run.n_traj', 'must be at least 1'))
    if not 0 <= get('run.seed') < 2 ** 64:
        violations.append(('run.seed', 'must be a 64-bit unsigned integer'))
    if get('run.workers') < 1:
        violations.append(('run.workers', 'must be at least 1'))
    if get('run.emit_limit') < 0:
        violations.append(('run.emit_limit', 'must be nonnegative'))
    if not 0 <= get('run.max_failure_fraction') <= 1:
        violations.append(('run.max_failure_fraction', 'must lie in [0, 1]'))
    if not get('run.label') or '/' in get('run.label'):
        violations.append(('run.label', 'must be a non-empty name without path separators'))
    for label in variants:
        if '/' in label:
            violations.append(('variant.%s' % label, 'label must not contain path separators'))

    if violations:
        raise ConfigError(violations)

    cfg = ScenarioConfig(source=source, noise=noise, purcell_sign=get('model.purcell_sign'), feedback=fb,
                         integrator=ic, initial_state=get('initial.state'), target_state=get('target.state'),
                         label=get('run.label'), n_traj=get('run.n_traj'), seed=get('run.seed'), out=get('run.out'),
                         emit_trajectories=get('run.emit_trajectories'), emit_limit=get('run.emit_limit'),
                         workers=get('run.workers'), max_failure_fraction=get('run.max_failure_fraction'),
                         save_states=get('run.save_states'),
                         variants=tuple((label, tuple(ov.items())) for label, ov in variants.items()))
    try:
        r = cfg.rates
    except ValueError as e:
        raise ConfigError([('rates', str(e))])
    if fb.strategy == 'filtered_current' and not r.Gamma_m > 0:
        raise ConfigError([('feedback.strategy', 'filtered_current needs a monitored channel (Gamma_m > 0)')])
    return cfg


def parse_config(text, base=None):
    """
    Parse flat-key text into a validated ScenarioConfig.
    :param text: config text
    :param base: optional flat mapping the text is layered on (e.g. a preset)
    :return: ScenarioConfig
    :raises ConfigError: listing every violation
    """
    flat, violations = read_flat(text)
    merged = OrderedDict(base or ())
    merged.update(flat)
    return from_flat(merged, violations)


def apply_overrides(flat, assignments):
    """
    Apply KEY=VALUE strings in order (last wins).
    :return: a new flat mapping
    """
    out = OrderedDict(flat)
    violations = []
    for a in assignments:
        if '=' not in a:
            violations.append((a, 'expected KEY=VALUE'))
            continue
        k, v = a.split('=', 1)
        out[k.strip()] = v.strip()
    if violations:
        raise ConfigError(violations)
    return out


_KEY_LOOKUP = {k.lower(): k for k in SCHEMA}


def env_overrides(environ):
    """
    Collect QFB_ overrides: the shortcuts QFB_SEED, QFB_TRAJECTORIES, QFB_WORKERS, QFB_OUT, and QFB_<SECTION>__<KEY>
    for any schema key (case-insensitive).
    :return: OrderedDict key -> raw value
    """
    out = OrderedDict()
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        if name in ENV_SHORTCUTS:
            out[ENV_SHORTCUTS[name]] = environ[name]
            continue
        body = name[len(ENV_PREFIX):]
        if '__' not in body:
            logger.warning('Ignoring unrecognized environment override %s' % name)
            continue
        section, key = body.split('__', 1)
        dotted = _KEY_LOOKUP.get('%s.%s' % (section.lower(), key.lower()))
        if dotted is None:
            logger.warning('Ignoring unrecognized environment override %s' % name)
            continue
        out[dotted] = environ[name]
    return out
