"""Runtime-checked invariants of the phased-elimination run.

Each named invariant compares a realized quantity (lhs) against its proved
bound (rhs); the audit runner records one row per check.  The
switch-variance check recomputes posterior deviations through the
aggregated-Cholesky path, independently of the incremental backend that
produced the run, so it doubles as a cross-validation of the fast path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .posterior import AggregatedDataset, posterior_mean_var_many

__all__ = [
    "INV_EPOCH_COUNT",
    "INV_EPOCH_LENGTH",
    "INV_SWITCH_RATIO",
    "INV_SUPPORT_SIZE",
    "INV_MAX_VARIANCE",
    "INV_SUM_STD",
    "InvariantRecord",
    "AuditLog",
    "recompute_selection_sigmas",
]

INV_EPOCH_COUNT = "epoch_count"
INV_EPOCH_LENGTH = "epoch_length"
INV_SWITCH_RATIO = "switch_variance_ratio"
INV_SUPPORT_SIZE = "support_size"
INV_MAX_VARIANCE = "max_variance"
INV_SUM_STD = "sum_of_std"

SWITCH_RATIO_TOL = 1e-8


@dataclass(frozen=True)
class InvariantRecord:
    h: int  # epoch index; -1 for run-level checks
    invariant: str
    lhs: float
    rhs: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs


@dataclass
class AuditLog:
    records: list[InvariantRecord] = field(default_factory=list)

    def add(self, h: int, invariant: str, lhs: float, rhs: float) -> InvariantRecord:
        rec = InvariantRecord(h, invariant, float(lhs), float(rhs))
        self.records.append(rec)
        return rec

    @property
    def failures(self) -> list[InvariantRecord]:
        return [r for r in self.records if not r.passed]

    def check_epoch(
        self,
        h: int,
        *,
        l_h: int,
        psi: float,
        lam: float,
        eta: float,
        u_planned: int,
        support_size: int,
        sel_logdet: float,
        sigma_at_pick: np.ndarray,
        sigma_post: np.ndarray | None,
    ) -> None:
        """Per-epoch bounds on length, support, post-epoch variance, and
        the running-deviation sum of the selection phase."""
        gain = 0.5 * sel_logdet
        self.add(h, INV_EPOCH_LENGTH, u_planned, l_h * (2.0 + psi * support_size))
        self.add(h, INV_SUPPORT_SIZE, support_size, (2.0 / math.log(eta)) * gain)
        self.add(
            h,
            INV_SUM_STD,
            float(np.sum(sigma_at_pick)),
            math.sqrt((2.0 * lam + 1.0) * l_h * gain),
        )
        if sigma_post is not None:
            self.add(
                h,
                INV_MAX_VARIANCE,
                float(np.max(sigma_post)),
                math.sqrt(eta * (2.0 * lam + 1.0) * gain / l_h),
            )

    def check_switch_ratio(
        self,
        h: int,
        *,
        eta: float,
        sel_local: np.ndarray,
        switch_rounds: np.ndarray,
        sigmas_by_round: list[np.ndarray],
    ) -> None:
        """Between switches the frozen deviations stay within sqrt(eta) of
        the current ones, for every active action.

        sigmas_by_round[t] is the (independently recomputed) posterior std
        over the active set given the first t selections; index 0 is the
        prior.  Rounds where the switch fired are exactly the rounds where
        the determinant condition failed, so they are skipped.
        """
        switch_set = set(int(s) for s in switch_rounds)
        worst = -math.inf
        anchor = 0
        for t in range(1, len(sel_local) + 1):
            if t not in switch_set:
                gap = float(
                    np.max(sigmas_by_round[anchor] - math.sqrt(eta) * sigmas_by_round[t])
                )
                worst = max(worst, gap)
            else:
                anchor = t
        if worst == -math.inf:
            worst = 0.0  # every round switched; nothing to compare
        self.add(h, INV_SWITCH_RATIO, worst, SWITCH_RATIO_TOL)

    def check_epoch_count(self, n_epochs: int, T: int) -> None:
        self.add(-1, INV_EPOCH_COUNT, n_epochs, math.log2(T))

    def check_run_sum_std(self, sigma_at_pick: np.ndarray, lam: float) -> None:
        """Whole-run deviation sum for fully sequential algorithms."""
        s2 = np.asarray(sigma_at_pick) ** 2
        gain = 0.5 * float(np.sum(np.log1p(s2 / lam)))
        self.add(
            -1,
            INV_SUM_STD,
            float(np.sum(sigma_at_pick)),
            math.sqrt((2.0 * lam + 1.0) * len(s2) * gain),
        )


def recompute_selection_sigmas(
    kernel, active_points: np.ndarray, sel_local: np.ndarray, lam: float
) -> list[np.ndarray]:
    """Posterior std over the active set after each selection prefix.

    Uses the aggregated count-weighted solve, so it shares no code with the
    incremental covariance updates that drove the selection.
    """
    from .kernels import diag_gram

    n = active_points.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    out = [np.sqrt(diag_gram(kernel, active_points))]
    for j in sel_local:
        counts[int(j)] += 1
        mask = counts > 0
        data = AggregatedDataset(
            kernel,
            active_points[mask],
            counts[mask],
            np.zeros(int(mask.sum())),
            lam,
        )
        _, var = posterior_mean_var_many(data, active_points)
        out.append(np.sqrt(var))
    return out
