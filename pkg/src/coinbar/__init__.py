"""Multi-agent El Farol bar simulator with collective-intelligence reward design.

Agents repeatedly choose a night to attend; the world reward sums a
congestion-shaped reward over nights.  Agents learn from the world reward
(G), an even split of their night's reward (UD) or their wonderful-life
marginal contribution (WL).
"""

from .analysis import (
    ConvergenceMeasure,
    FactoredVerdict,
    LearnabilityReport,
    convergence_time,
    factoredness_check,
    learnability_estimate,
    learnability_report,
    optimal_allocation,
    sample_perturbations,
    theorem2_ratio,
)
from .env import SimConfig, SimResult, run_simulation, run_week, simulate_batch
from .errors import CoinbarError
from .experiments import ExperimentRecord, Scenario, emit_csv, emit_plot_data, preset, run_scenario, run_sweep
from .learner import LearnerParams, LearnerState
from .state import CLAMPED, JointState, Trajectory, WorldParams, clamp, effect_set
from .utilities import PhiKind, RewardKind, reward, world_reward, world_utility, wlu

__version__ = "0.1.0"
