"""Bayesian optimisation over sampling distributions on finite domains."""

__version__ = "0.1.0"

from .acquisition import AcquisitionSpec, BetaSchedule, beta_at, score_thetas, select_theta, ucb_values
from .dist import GridNormalFamily, MutagenesisFamily, TabularFamily, point_mass_family
from .domain import GridDomain, SequenceDomain, argmax_truth
from .gp import GaussianProcess, empirical_info_gain, mean_gradient_max
from .kernels import KernelSpec, default_kernel
from .metrics import aggregate, bound_report, sublinearity_check
from .objectives import ObjectiveSpec, build_seq_oracle, evaluate, fitness_landscape_stats
from .optimizer import RunConfig, RunTrace, compute_regrets, run_batch, run_sequential
from .penalty import batch_scores, local_penalty, update_penalty_state

__all__ = [
    "AcquisitionSpec",
    "BetaSchedule",
    "GaussianProcess",
    "GridDomain",
    "GridNormalFamily",
    "KernelSpec",
    "MutagenesisFamily",
    "ObjectiveSpec",
    "RunConfig",
    "RunTrace",
    "SequenceDomain",
    "TabularFamily",
    "aggregate",
    "argmax_truth",
    "batch_scores",
    "beta_at",
    "bound_report",
    "build_seq_oracle",
    "compute_regrets",
    "default_kernel",
    "empirical_info_gain",
    "evaluate",
    "fitness_landscape_stats",
    "local_penalty",
    "mean_gradient_max",
    "point_mass_family",
    "run_batch",
    "run_sequential",
    "score_thetas",
    "select_theta",
    "sublinearity_check",
    "ucb_values",
    "update_penalty_state",
]
