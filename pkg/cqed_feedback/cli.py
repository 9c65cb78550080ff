"""
Command-line front end.

    python -m cqed_feedback --preset fig3 --seed 7 --out runs/fig3
    python -m cqed_feedback --config custom.cfg --set feedback.u=5 --set filter.power_P=2

Settings are layered, last wins: preset, --config file, QFB_ environment variables, the dedicated flags, then --set.

Exit codes: 0 success; 1 configuration error; 2 too many trajectories failed; 3 I/O error.
"""

import argparse
import logging
import os
import sys
from collections import OrderedDict

from . import __version__
from .engine.feedback import FilterState
from .engine.ensemble import run_ensemble, sudden_death_stats, EnsembleFailure
from .providers.run_store import RunStore, MANIFEST_FILE
from .scenario import (ConfigError, preset_flat, read_flat, from_flat, apply_overrides, env_overrides,
                       emit_config)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTEGRATION = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError([('arguments', message)])


def build_parser():
    p = _Parser(prog='cqed_feedback', description='Two-qubit entanglement under homodyne feedback: '
                                                  'quantum-trajectory ensembles')
    p.add_argument('--preset', help='named scenario: fig2a, fig2bc, fig3, fig4, eta08')
    p.add_argument('--config', help='flat key = value scenario file')
    p.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                   help='override one key (repeatable, last wins)')
    p.add_argument('--seed', type=int)
    p.add_argument('--trajectories', type=int, metavar='N')
    p.add_argument('--emit-trajectories', action='store_true', default=None)
    p.add_argument('--out', metavar='DIR')
    p.add_argument('--workers', type=int, metavar='N')
    p.add_argument('-q', '--quiet', action='store_true')
    p.add_argument('-v', '--verbose', action='store_true')
    p.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    return p


def manifest_text(scenario):
    return emit_config(scenario, header=('cqed_feedback %s' % __version__, 'seed %d' % scenario.seed))


def _flag_settings(args):
    flat = OrderedDict()
    if args.seed is not None:
        flat['run.seed'] = args.seed
    if args.trajectories is not None:
        flat['run.n_traj'] = args.trajectories
    if args.emit_trajectories:
        flat['run.emit_trajectories'] = True
    if args.out is not None:
        flat['run.out'] = args.out
    if args.workers is not None:
        flat['run.workers'] = args.workers
    return flat


def load_scenario(args, environ=None):
    """
    Layer every configuration source and validate the result.
    :raises ConfigError:
    :raises OSError: config file unreadable
    """
    if environ is None:
        environ = os.environ
    flat = OrderedDict()
    violations = []
    if args.preset:
        flat.update(preset_flat(args.preset))
    if args.config:
        with open(args.config) as fp:
            f, v = read_flat(fp.read())
        flat.update(f)
        violations.extend(v)
    flat.update(env_overrides(environ))
    flat.update(_flag_settings(args))
    flat = apply_overrides(flat, args.set)
    return from_flat(flat, violations)


def run(scenario):
    """
    Execute a scenario and its variants, writing all outputs to scenario.out.
    :param scenario: ScenarioConfig
    :return: exit code
    """
    try:
        runs = scenario.expand()
    except ConfigError as e:
        for key, reason in e.violations:
            logger.error('%s: %s' % (key, reason))
        return EXIT_CONFIG
    try:
        store = RunStore(scenario.out)
        store.write_manifest(manifest_text(scenario))
        results = []
        for label, cfg in runs:
            base = cfg is scenario
            emit = cfg.emit_limit if (base and cfg.emit_trajectories) else 0
            if cfg.feedback.strategy == 'filtered_current':
                floor = FilterState.from_config(cfg.feedback.filter, cfg.integrator.dt, cfg.rates.Gamma_m).noise_std
                logger.info('%s: filtered signal noise floor %.3f (control %.3g)' % (
                    label, floor, abs(cfg.feedback.u) * floor ** cfg.feedback.filter.power_P))
            stats = run_ensemble(cfg.rates, cfg.feedback, cfg.integrator, cfg.n_traj, cfg.seed, rho0=cfg.rho0,
                                 target=cfg.target_state, workers=cfg.workers, emit_limit=emit,
                                 max_failure_fraction=cfg.max_failure_fraction, quiet=False)
            file_label = None if base else label
            store.write_ensemble(stats, file_label)
            for record in stats.records:
                store.write_trajectory(record, file_label)
            if cfg.save_states:
                store.write_states(stats, file_label)
            summary = sudden_death_stats(stats.deaths, n_traj=stats.n_ok, t_end=cfg.integrator.t_end)
            logger.info('%s: mean concurrence %.4f at t=%g; death fraction %.3f (%d sudden)' % (
                label, stats.mean_concurrence[-1], stats.times[-1], summary.death_fraction, summary.n_sudden))
            results.append((label, stats))
        store.write_sudden_death(results)
    except EnsembleFailure as e:
        logger.error(str(e))
        return EXIT_INTEGRATION
    except OSError as e:
        logger.error('I/O error: %s' % e)
        return EXIT_IO
    logger.info('Outputs in %s (%s)' % (scenario.out, MANIFEST_FILE))
    return EXIT_OK


def main(argv=None, environ=None):
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return EXIT_CONFIG

    level = logging.INFO
    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')

    try:
        scenario = load_scenario(args, environ)
    except ConfigError as e:
        for key, reason in e.violations:
            logger.error('%s: %s' % (key, reason))
        return EXIT_CONFIG
    except OSError as e:
        logger.error('Cannot read config: %s' % e)
        return EXIT_IO
    return run(scenario)
