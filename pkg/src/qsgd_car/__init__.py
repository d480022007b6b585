"""Quasi-stochastic gradient descent for sign-feedback Mountain Car policies."""

from .energy import EnergyParams, Theta, analytic_feedback, policy_action, total_energy
from .env import EnvParams, State, StepOutcome, step
from .experiment import (ExperimentConfig, HistogramReport, InitialConditionSet, generalization_test,
                         histogram_experiment, holdout_ics, train_partitioned, train_uniform,
                         training_ics)
from .kernels import BACKEND
from .objective import CostConfig, EpisodeResult, cost_to_go, gamma, gamma_bullet, rollout
from .partition import PartitionedTheta, RegionPartition, partitioned_action, region_of
from .probing import ProbingConfig, SinusoidMixture, probe_value, sample_probing_config
from .qsgd import QsgdConfig, QsgdTrace, qsgd_update, run_qsgd, step_size

__version__ = "0.1.0"
