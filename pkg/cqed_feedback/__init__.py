"""
Quantum-trajectory simulation of two-qubit entanglement generated and stabilized by homodyne-measurement feedback
in the dispersive circuit-QED regime.

The engine subpackage integrates the conditional master equation trajectory by trajectory and reduces ensembles;
scenario holds the flat-key configuration and the named presets; providers writes run outputs.
"""

__version__ = '0.1.0'

from .engine import (DensityMatrix, ModelRates, PhysicalParams, FeedbackConfig, FilterConfig, IntegratorConfig,
                     RngStream, run_trajectory, run_ensemble, lindblad_solve, lindblad_propagate, sudden_death_stats)
from .scenario import ScenarioConfig, parse_config, emit_config, preset


__all__ = ['simulate', 'DensityMatrix', 'ModelRates', 'PhysicalParams', 'FeedbackConfig', 'FilterConfig',
           'IntegratorConfig', 'RngStream', 'run_trajectory', 'run_ensemble', 'lindblad_solve', 'lindblad_propagate',
           'sudden_death_stats', 'ScenarioConfig', 'parse_config', 'emit_config', 'preset']


def simulate(scenario, label=None, quiet=True):
    """
    Run one ensemble of a scenario without writing anything.
    :param scenario: ScenarioConfig, or the name of a preset
    :param label: [None] a variant label; None runs the base scenario
    :param quiet: passed to run_ensemble
    :return: EnsembleStats
    """
    if isinstance(scenario, str):
        scenario = preset(scenario)
    cfg = scenario if label is None else scenario.variant(label)
    return run_ensemble(cfg.rates, cfg.feedback, cfg.integrator, cfg.n_traj, cfg.seed, rho0=cfg.rho0,
                        target=cfg.target_state, workers=cfg.workers,
                        max_failure_fraction=cfg.max_failure_fraction, quiet=quiet)
