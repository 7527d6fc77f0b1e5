"""Corruption-tolerant Gaussian-process bandit optimization.

Robust phased elimination with rare switching and count-averaged reward
estimates, UCB baselines (plain and corruption-enlarged), a budgeted
adversary suite, a linear-bandit reduction through a greedy interpolation
basis, and a seeded CSV-emitting benchmark harness.
"""

__version__ = "0.1.0"

from ._backend import BACKEND_NAME
from .adversary import AlgorithmView, AttackLedger, corrupt
from .algorithms import (
    BetaSchedule,
    ConfidenceConfig,
    UcbSchedule,
    gamma_surrogate,
    run_gp_ucb,
    run_rgp_pe,
    run_rgp_ucb,
    run_uniform,
)
from .environment import (
    Environment,
    GroundTruth,
    RegretTrace,
    observe,
    run_trials,
    sample_gp_function,
)
from .kernels import Domain, KernelSpec, gram_matrix, grid_domain, kernel_eval
from .linred import NewtonBasis, RpeConfig, embed, newton_basis, run_rpe_linear
from .posterior import (
    AggregatedDataset,
    info_gain,
    posterior_mean_var,
    robust_mean,
    switch_test,
)

__all__ = [
    "__version__",
    "BACKEND_NAME",
    "AlgorithmView",
    "AttackLedger",
    "corrupt",
    "BetaSchedule",
    "ConfidenceConfig",
    "UcbSchedule",
    "gamma_surrogate",
    "run_gp_ucb",
    "run_rgp_pe",
    "run_rgp_ucb",
    "run_uniform",
    "Environment",
    "GroundTruth",
    "RegretTrace",
    "observe",
    "run_trials",
    "sample_gp_function",
    "Domain",
    "KernelSpec",
    "gram_matrix",
    "grid_domain",
    "kernel_eval",
    "NewtonBasis",
    "RpeConfig",
    "embed",
    "newton_basis",
    "run_rpe_linear",
    "AggregatedDataset",
    "info_gain",
    "posterior_mean_var",
    "robust_mean",
    "switch_test",
]
