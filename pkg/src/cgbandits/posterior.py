"""GP posterior on aggregated (count-weighted) observations.

Long runs replay the same actions thousands of times, so the posterior is
computed from per-action play counts and reward sums instead of the raw
observation list.  With distinct-point Gram matrix K, counts matrix
U = diag(u) and averaged rewards ybar = S / u:

    mean(q) = k(q)^T (K + lam * U^-1)^-1 ybar
    var(q)  = k(q, q) - k(q)^T (K + lam * U^-1)^-1 k(q)

which is mathematically identical to the textbook formulas on the expanded
dataset (m repeats of a point with noise lam equal one observation of their
average with noise lam / m).  The expanded form survives only as a test
oracle.

The robust corrupted-reward estimator averages rewards of identical actions
before regressing; on aggregated data that is literally the same formula
applied to ybar, and it also coincides with the plain posterior mean on the
raw corrupted vector (the averaging is absorbed by the regression weights).
Robustness enters through the analysis, not through a numerical difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, cross_gram, diag_gram, gram_matrix

__all__ = [
    "AggregatedDataset",
    "PosteriorQueryResult",
    "SingularSystemError",
    "posterior_mean_var",
    "posterior_mean_var_many",
    "robust_mean",
    "info_gain",
    "switch_test",
    "chol_solve_jittered",
]

_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


class SingularSystemError(RuntimeError):
    """Cholesky failed even after jitter escalation (degenerate system)."""


def chol_solve_jittered(mat: np.ndarray) -> np.ndarray:
    """Cholesky factor of a PSD matrix, adding jitter by decades up to 1e-6."""
    for jit in _JITTERS:
        try:
            return np.linalg.cholesky(mat + jit * np.eye(mat.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise SingularSystemError(
        f"Cholesky failed after jitter escalation up to {_JITTERS[-1]}"
    )


@dataclass(frozen=True)
class PosteriorQueryResult:
    mean: float
    variance: float


@dataclass
class AggregatedDataset:
    """Distinct actions with play counts and reward sums.

    actions      (m, d) distinct points
    counts       (m,) positive ints, plays per action
    reward_sums  (m,) sum of observed rewards per action
    lam          regularizer (modeled noise variance)
    """

    kernel: KernelSpec
    actions: np.ndarray
    counts: np.ndarray
    reward_sums: np.ndarray
    lam: float = 1.0
    _chol: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        acts = np.asarray(self.actions, dtype=np.float64)
        if acts.ndim == 1:
            acts = acts.reshape(-1, 1) if acts.size else acts.reshape(0, 1)
        counts = np.asarray(self.counts, dtype=np.int64).ravel()
        sums = np.asarray(self.reward_sums, dtype=np.float64).ravel()
        if not (acts.shape[0] == counts.shape[0] == sums.shape[0]):
            raise ValueError("actions, counts and reward_sums must align")
        if acts.shape[0] and np.unique(acts, axis=0).shape[0] != acts.shape[0]:
            raise ValueError("actions must be pairwise distinct")
        if np.any(counts < 1):
            raise ValueError("counts must be >= 1")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        self.actions = acts
        self.counts = counts
        self.reward_sums = sums

    def __len__(self):
        return self.actions.shape[0]

    @classmethod
    def empty(cls, kernel: KernelSpec, dim: int, lam: float = 1.0) -> "AggregatedDataset":
        return cls(kernel, np.zeros((0, dim)), np.zeros(0, dtype=np.int64), np.zeros(0), lam)

    @property
    def n_raw(self) -> int:
        """Number of raw observations this dataset summarizes."""
        return int(self.counts.sum())

    def _factor(self) -> np.ndarray:
        # lazy Cholesky of K + lam * U^-1; benign to race (idempotent)
        if self._chol is None:
            mat = gram_matrix(self.kernel, self.actions) + np.diag(
                self.lam / self.counts.astype(np.float64)
            )
            self._chol = chol_solve_jittered(mat)
        return self._chol


def _empty_prior(data: AggregatedDataset, queries: np.ndarray):
    return np.zeros(queries.shape[0]), diag_gram(data.kernel, queries)


def posterior_mean_var_many(
    data: AggregatedDataset, queries: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at a batch of query points."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if len(data) == 0:
        return _empty_prior(data, queries)
    if queries.shape[1] != data.actions.shape[1]:
        raise ValueError("query dimension mismatch")
    chol = data._factor()
    kq = cross_gram(data.kernel, data.actions, queries)  # (m, q)
    ybar = data.reward_sums / data.counts
    alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, ybar))
    mean = kq.T @ alpha
    w = np.linalg.solve(chol, kq)
    var = diag_gram(data.kernel, queries) - np.sum(w * w, axis=0)
    np.maximum(var, 0.0, out=var)
    return mean, var


def posterior_mean_var(data: AggregatedDataset, query) -> PosteriorQueryResult:
    """Posterior (mean, variance) at one query point."""
    mean, var = posterior_mean_var_many(data, np.asarray(query, dtype=np.float64)[None, :])
    return PosteriorQueryResult(float(mean[0]), float(var[0]))


def robust_mean(data: AggregatedDataset, query) -> float:
    """Corruption-averaging mean estimate at a query point.

    Rewards of repeated actions are averaged before regression; in the
    aggregated representation that is exactly the posterior mean on ybar.
    """
    return posterior_mean_var(data, query).mean


def info_gain(data: AggregatedDataset) -> float:
    """Realized information gain 0.5 * logdet(I + K_expanded / lam).

    Computed through the aggregated identity
    logdet(I + U^(1/2) K U^(1/2) / lam) without ever forming the expanded
    matrix or a raw determinant.
    """
    if len(data) == 0:
        return 0.0
    root_u = np.sqrt(data.counts.astype(np.float64))
    mat = gram_matrix(data.kernel, data.actions) * np.outer(root_u, root_u) / data.lam
    mat[np.diag_indices_from(mat)] += 1.0
    chol = chol_solve_jittered(mat)
    return float(np.sum(np.log(np.diagonal(chol))))


SWITCH_ROUNDOFF_GUARD = 1e-12


def switch_test(current: AggregatedDataset, anchor_logdet: float, eta: float) -> bool:
    """Rare-switching trigger: has the determinant grown by a factor eta?

    anchor_logdet is logdet(I + K/lam) recorded at the previous switch
    (0.0 for an empty anchor).  Compared strictly in log space, with an
    absolute 1e-12 guard so exact-boundary growth (one point, lam = 1,
    eta = 2) never switches on roundoff.
    """
    if not eta > 1.0:
        raise ValueError("eta must exceed 1")
    return 2.0 * info_gain(current) > math.log(eta) + anchor_logdet + SWITCH_ROUNDOFF_GUARD
