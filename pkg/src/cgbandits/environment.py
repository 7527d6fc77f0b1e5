"""Ground-truth functions, noisy+corrupted observations, regret traces,
and the seeded multi-trial runner.

Randomness discipline: every stream is a numpy PCG64 generator seeded by
SeedSequence(entropy=base_seed, spawn_key=(trial_index, role)), with roles
noise / gp_sample / ties.  Trials therefore never share state and are
bit-reproducible regardless of execution order or thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adversary import AlgorithmView, AttackLedger, corrupt
from .kernels import Domain, KernelSpec, gram_matrix
from .posterior import chol_solve_jittered

__all__ = [
    "ROLE_NOISE",
    "ROLE_GP",
    "ROLE_TIES",
    "stream",
    "GroundTruth",
    "sample_gp_function",
    "bump_function",
    "Environment",
    "observe",
    "observe_parts",
    "EpochMark",
    "RegretTrace",
    "TrialResult",
    "ExperimentResult",
    "run_trials",
]

ROLE_NOISE, ROLE_GP, ROLE_TIES = 0, 1, 2


def stream(base_seed: int, trial: int, role: int) -> np.random.Generator:
    """Independent per-(trial, role) generator derived from one base seed."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=base_seed, spawn_key=(trial, role))
    )


@dataclass(frozen=True)
class GroundTruth:
    """Reward table over a finite domain with its argmax precomputed."""

    kind: str  # "gp_sample" | "analytic" | "table"
    values: np.ndarray
    argmax_index: int = field(init=False)
    f_max: float = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("ground truth needs a nonempty 1-d value table")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "argmax_index", int(np.argmax(vals)))  # lowest-index tie
        object.__setattr__(self, "f_max", float(vals.max()))


def sample_gp_function(kernel: KernelSpec, domain: Domain, seed) -> GroundTruth:
    """One zero-mean GP draw over the domain (deterministic per seed)."""
    if len(domain) > 10_000:
        raise ValueError("GP sampling is limited to domains of at most 10^4 points")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cov = gram_matrix(kernel, domain.points)
    cov[np.diag_indices_from(cov)] += 1e-10
    chol = chol_solve_jittered(cov)
    values = chol @ rng.standard_normal(len(domain))
    return GroundTruth("gp_sample", values)


def bump_function(
    domain: Domain, centers: np.ndarray, weights: np.ndarray, lengthscale: float
) -> tuple[GroundTruth, float]:
    """Analytic sum-of-SE-bumps reward with its exact function-space norm.

    Stands in for external simulators: the argmax is known and the norm
    bound needed by the finite-domain confidence schedule is computable as
    sqrt(w^T K w) over the bump centers.
    """
    spec = KernelSpec("se", lengthscale)
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64).ravel()
    from .kernels import cross_gram

    vals = cross_gram(spec, domain.points, centers) @ weights
    norm = float(math.sqrt(weights @ gram_matrix(spec, centers) @ weights))
    return GroundTruth("analytic", vals), norm


@dataclass
class Environment:
    domain: Domain
    truth: GroundTruth
    sigma: float = 0.02

    def __post_init__(self):
        if len(self.truth.values) != len(self.domain):
            raise ValueError("truth table and domain size mismatch")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def f(self, idx: int) -> float:
        return float(self.truth.values[idx])


def observe_parts(
    env: Environment,
    ledger: AttackLedger,
    idx: int,
    rng: np.random.Generator,
    view: AlgorithmView,
    t: int = 0,
) -> tuple[float, float]:
    """One observation, returned as (noisy reward, corruption)."""
    f_x = env.f(idx)
    y = f_x + env.sigma * rng.standard_normal()
    c = corrupt(ledger, idx, f_x, y, view, t)
    return y, c


def observe(env, ledger, idx, rng, view=None, t: int = 0) -> tuple[float, float]:
    """One corrupted observation (y_tilde, c)."""
    if view is None:
        view = AlgorithmView(algo="none", n_actions=len(env.domain))
    y, c = observe_parts(env, ledger, idx, rng, view, t)
    return y + c, c


@dataclass(frozen=True)
class EpochMark:
    h: int
    t_start: int
    active_size: int
    support_size: int
    epoch_len: int


@dataclass
class RegretTrace:
    """Per-round record of one trial.

    y holds the noisy but uncorrupted reward; the learner observed y + c.
    """

    algorithm: str
    trial: int
    seed: int
    action: np.ndarray
    y: np.ndarray
    c: np.ndarray
    instant_regret: np.ndarray
    cum_regret: np.ndarray
    epoch_marks: list[EpochMark] = field(default_factory=list)
    final_active: np.ndarray | None = None

    def __len__(self):
        return len(self.action)

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, len(self.action) + 1)


@dataclass
class TrialResult:
    trace: RegretTrace
    ledger: AttackLedger
    truth: GroundTruth
    active_history: list[np.ndarray] = field(default_factory=list)


@dataclass
class ExperimentResult:
    trials: list[TrialResult]
    mean_cum_regret: np.ndarray
    std_cum_regret: np.ndarray

    @property
    def traces(self) -> list[RegretTrace]:
        return [tr.trace for tr in self.trials]


def _aggregate(traces: list[RegretTrace]) -> tuple[np.ndarray, np.ndarray]:
    cum = np.stack([tr.cum_regret for tr in traces])
    return cum.mean(axis=0), cum.std(axis=0)


def run_trials(config) -> ExperimentResult:
    """Run config.trials independent seeded trials and aggregate regret.

    Per-trial seeds derive from config.seed + trial index; permuting or
    parallelizing trials cannot change any individual trace.  CGB_THREADS
    caps the worker count (default: one worker per trial).
    """
    from .runner import run_single_trial  # late import: runner needs algorithms

    n = config.trials
    workers = n
    env_threads = os.environ.get("CGB_THREADS", "").strip()
    if env_threads:
        workers = max(1, min(n, int(env_threads)))
    if workers == 1:
        results = [run_single_trial(config, i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: run_single_trial(config, i), range(n)))
    mean, std = _aggregate([r.trace for r in results])
    return ExperimentResult(results, mean, std)
