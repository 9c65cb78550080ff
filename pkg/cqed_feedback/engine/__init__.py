"""
Numerical core: two-qubit states and metrics, the dispersive model, feedback controllers, the trajectory
integrator and the ensemble driver.

Basis order is |00>, |01>, |10>, |11> with qubit 1 the left tensor factor.  Bell states follow the convention
Psi_+- = (|00> +- |11>)/sqrt2 and Phi_+- = (|01> +- |10>)/sqrt2, which is swapped relative to common usage.
"""

from .qstate import DensityMatrix, bell_state, concurrence, fidelity_to, purity
from .model import ModelRates, PhysicalParams, derive_rates
from .feedback import FeedbackConfig, FilterConfig
from .sde import IntegratorConfig, RngStream, run_trajectory, IntegratorFailure
from .ensemble import (run_ensemble, sudden_death_stats, lindblad_solve, lindblad_propagate, EnsembleStats,
                       EnsembleFailure)
