"""Budgeted reward-corruption policies with exact budget accounting.

Attacks are defined against the true reward table (the adversary knows f and
sees the played action before corrupting).  Clipping and aggressive
subtraction perturb the underlying function, so their corruption is the
function-value shift and stochastic noise passes through; flip and top-K
dictate the observed outcome, so their corruption is derived from the noisy
reward.  Every attack debits |c_t| from a shared budget and is clamped, not
skipped, on the exhausting round.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AttackLedger",
    "AlgorithmView",
    "corrupt",
    "clipping_target",
    "topk_set",
    "later_trigger_check",
]

_POLICIES = ("none", "clipping", "aggsub", "topk", "flip")


@dataclass
class AlgorithmView:
    """What the adversary is allowed to see of the running algorithm."""

    algo: str = "gp_ucb"
    n_actions: int = 0
    active: np.ndarray | None = None  # current active indices (elimination algos)
    eliminated_any: bool = False
    ucb: np.ndarray | None = None
    lcb: np.ndarray | None = None
    cache_key: int = 0  # bumped whenever `active` changes


@dataclass
class AttackLedger:
    """Single-trial corruption state: policy, budget, trigger, and log.

    log records the (t, c_t) pairs of every nonzero applied corruption;
    rounds the attack left alone contribute nothing to the budget and are
    reconstructible from the trace.  desired_total accumulates |c| the
    active policy wanted before clamping, so spent == min(budget,
    desired_total) exactly on every finished run.
    """

    policy: str = "none"
    budget: float = 0.0
    f_values: np.ndarray | None = None
    region_mask: np.ndarray | None = None  # True where the attack leaves f alone
    delta: float = 0.5
    h_max: float = 1.0
    k: int = 3
    trigger: str = "immediate"
    active: bool = field(init=False)
    budget_remaining: float = field(init=False)
    desired_total: float = field(init=False, default=0.0)
    log: list = field(init=False, default_factory=list)
    _topk_cache: tuple | None = field(init=False, default=None, repr=False)

    def __post_init__(self):
        if self.policy not in _POLICIES:
            raise ValueError(f"unknown attack policy {self.policy!r}")
        if self.trigger not in ("immediate", "later"):
            raise ValueError(f"unknown trigger {self.trigger!r}")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if self.policy in ("clipping", "aggsub"):
            if self.region_mask is None or not np.any(self.region_mask):
                raise ValueError(f"{self.policy} attack needs a nonempty target region")
            if self.f_values is None:
                raise ValueError(f"{self.policy} attack needs the reward table")
        if self.policy == "topk":
            if self.k < 1:
                raise ValueError("topk attack needs K >= 1")
            if self.f_values is None:
                raise ValueError("topk attack needs the reward table")
        self.active = self.policy != "none" and self.trigger == "immediate"
        self.budget_remaining = float(self.budget)

    @property
    def spent(self) -> float:
        return float(self.budget) - self.budget_remaining


def clipping_target(f_values: np.ndarray, region_mask: np.ndarray, delta: float, idx: int) -> float:
    """Perturbed reward value under the clipping attack.

    Inside the target region f is untouched; outside, the value is clipped
    to at most (max of f over the region) - delta, so the perturbed optimum
    moves into the region.
    """
    region_mask = np.asarray(region_mask, dtype=bool)
    if not np.any(region_mask):
        raise ValueError("clipping attack needs a nonempty target region")
    if region_mask[idx]:
        return float(f_values[idx])
    f_region_best = float(np.max(np.asarray(f_values)[region_mask]))
    return min(float(f_values[idx]), f_region_best - delta)


def topk_set(f_values: np.ndarray, remaining, k: int) -> np.ndarray:
    """Indices of the K remaining actions with the highest true reward.

    Ties go to the lower domain index; if fewer than K actions remain they
    are all returned.
    """
    remaining = np.asarray(sorted(remaining), dtype=np.int64)
    if remaining.size <= k:
        return remaining
    vals = np.asarray(f_values)[remaining]
    order = np.argsort(-vals, kind="stable")  # stable keeps lower index first on ties
    return np.sort(remaining[order[:k]])


def _topk_for_view(ledger: AttackLedger, view: AlgorithmView) -> np.ndarray:
    if view.algo in ("rgp_pe", "rpe_linear") and view.active is not None:
        remaining = view.active
    else:
        remaining = np.arange(view.n_actions if view.n_actions else len(ledger.f_values))
    key = (view.algo, view.cache_key, len(remaining))
    if ledger._topk_cache is None or ledger._topk_cache[0] != key:
        ledger._topk_cache = (key, topk_set(ledger.f_values, remaining, ledger.k))
    return ledger._topk_cache[1]


def _desired(ledger: AttackLedger, idx: int, f_x: float, y: float, view: AlgorithmView) -> float:
    if ledger.policy == "clipping":
        return clipping_target(ledger.f_values, ledger.region_mask, ledger.delta, idx) - f_x
    if ledger.policy == "aggsub":
        return 0.0 if ledger.region_mask[idx] else -ledger.h_max
    if ledger.policy == "topk":
        if idx in _topk_for_view(ledger, view):
            return -1.0 - y
        return 0.0
    if ledger.policy == "flip":
        return -f_x - y
    return 0.0


def corrupt(
    ledger: AttackLedger,
    idx: int,
    f_x: float,
    y: float,
    view: AlgorithmView,
    t: int = 0,
) -> float:
    """Corruption c_t for one observation; debits |c_t| from the budget.

    The desired corruption is clamped so the debit never exceeds the
    remaining budget (partial corruption on the exhausting round); returns
    0 when the policy is inactive, exhausted, or leaves this action alone.
    """
    if not ledger.active or ledger.policy == "none":
        return 0.0
    desired = _desired(ledger, idx, f_x, y, view)
    if desired == 0.0:
        return 0.0
    ledger.desired_total += abs(desired)
    if ledger.budget_remaining <= 0.0:
        return 0.0
    mag = min(abs(desired), ledger.budget_remaining)
    c = mag if desired > 0 else -mag
    ledger.budget_remaining -= mag
    ledger.log.append((t, c))
    return c


def later_trigger_check(ledger: AttackLedger, view: AlgorithmView) -> None:
    """Arm a dormant later-trigger attack once the learner first commits.

    For phased elimination that is the first eliminated action; for the
    enlarged-confidence UCB it is the first round where some action's UCB
    falls strictly below the best LCB.  Idempotent; non-robust algorithms
    never arm it.
    """
    if ledger.trigger != "later" or ledger.active or ledger.policy == "none":
        return
    if view.algo in ("rgp_pe", "rpe_linear"):
        if view.eliminated_any:
            ledger.active = True
    elif view.algo == "rgp_ucb":
        if view.ucb is not None and view.lcb is not None:
            if np.any(view.ucb < np.max(view.lcb)):
                ledger.active = True
