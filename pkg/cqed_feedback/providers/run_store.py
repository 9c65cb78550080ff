"""
Run store: the output directory of one scenario run.

 ensemble.csv / ensemble_<label>.csv   ensemble statistics, one row per recorded sample
 traj_<id>.csv / traj_<label>_<id>.csv  single-trajectory series
 sudden_death.csv                       first-death events per trajectory
 manifest.cfg                           the scenario as flat-key text; re-running it reproduces the CSVs
 states.mat / states_<label>.mat        optional ensemble-averaged states (MATLAB format)

Numbers are written with repr(), so CSVs are locale-free and reload to the same floats.
"""

import csv
import os

import numpy as np
from scipy.io import savemat, loadmat

ENSEMBLE_COLUMNS = ('t', 'mean_concurrence', 'std_concurrence', 'mean_fidelity', 'std_fidelity',
                    'concurrence_of_mean_state', 'fidelity_of_mean_state', 'purity_of_mean_state')

TRAJECTORY_COLUMNS = ('t', 'concurrence', 'fidelity', 'purity')

SUDDEN_DEATH_COLUMNS = ('label', 'stream_id', 'death_time', 'sudden')

MANIFEST_FILE = 'manifest.cfg'


def _num(x):
    return repr(float(x))


def _suffix(label):
    return '' if label is None else '_%s' % label


class RunStore(object):
    def __init__(self, directory):
        self._dir = directory
        os.makedirs(directory, exist_ok=True)

    @property
    def directory(self):
        return self._dir

    def path(self, name):
        return os.path.join(self._dir, name)

    def _write_rows(self, name, header, rows):
        fn = self.path(name)
        with open(fn, 'w', newline='') as fp:
            w = csv.writer(fp)
            w.writerow(header)
            w.writerows(rows)
        return fn

    def write_ensemble(self, stats, label=None):
        """
        :param stats: EnsembleStats
        :param label: None for the base run, else the variant label
        :return: path written
        """
        cols = (stats.times, stats.mean_concurrence, stats.std_concurrence, stats.mean_fidelity,
                stats.std_fidelity, stats.concurrence_of_mean_state, stats.fidelity_of_mean_state,
                stats.purity_of_mean_state)
        rows = ([_num(c[i]) for c in cols] for i in range(len(stats.times)))
        return self._write_rows('ensemble%s.csv' % _suffix(label), ENSEMBLE_COLUMNS, rows)

    def write_trajectory(self, record, label=None):
        header = TRAJECTORY_COLUMNS
        cols = [record.times, record.concurrence, record.fidelity, record.purity]
        if record.current is not None:
            header = header + ('current', )
            cols.append(record.current)
        rows = ([_num(c[i]) for c in cols] for i in range(len(record.times)))
        return self._write_rows('traj%s_%d.csv' % (_suffix(label), record.stream_id), header, rows)

    def write_sudden_death(self, runs):
        """
        :param runs: iterable of (label, EnsembleStats)
        """
        def _rows():
            for label, stats in runs:
                for d in stats.deaths:
                    yield (label, d.stream_id,
                           '' if d.sudden_death_time is None else _num(d.sudden_death_time),
                           'true' if d.sudden_jump else 'false')
        return self._write_rows('sudden_death.csv', SUDDEN_DEATH_COLUMNS, _rows())

    def write_states(self, stats, label=None):
        fn = self.path('states%s.mat' % _suffix(label))
        savemat(fn, {'t': np.asarray(stats.times), 'rho': np.asarray(stats.mean_states)})
        return fn

    def write_manifest(self, text):
        fn = self.path(MANIFEST_FILE)
        with open(fn, 'w') as fp:
            fp.write(text)
        return fn


def read_csv(filename):
    """
    :return: (header tuple, list of row tuples of strings)
    """
    with open(filename, newline='') as fp:
        r = csv.reader(fp)
        header = tuple(next(r))
        return header, [tuple(row) for row in r]


def load_states(filename):
    """
    :return: (times, states) as stored by RunStore.write_states
    """
    d = loadmat(filename)
    return d['t'].ravel(), d['rho']


def load_manifest(filename):
    with open(filename) as fp:
        return fp.read()
