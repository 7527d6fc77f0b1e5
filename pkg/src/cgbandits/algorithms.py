"""Bandit algorithms: robust phased elimination with rare switching, the
UCB baselines (plain and enlarged-confidence), and a uniform-random control.

All tie-breaking resolves to the lowest domain index, and identical
variance caches give identical picks across rounds, so every run is a
deterministic function of (config, seeds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend as backend
from .adversary import AlgorithmView, AttackLedger, later_trigger_check
from .audit import AuditLog, recompute_selection_sigmas
from .environment import Environment, EpochMark, RegretTrace, TrialResult, observe_parts
from .kernels import KernelSpec, gram_matrix
from .posterior import AggregatedDataset, posterior_mean_var_many

__all__ = [
    "BetaSchedule",
    "ConfidenceConfig",
    "UcbSchedule",
    "EpochState",
    "select_batch",
    "allocate_plays",
    "elimination_width",
    "eliminate",
    "run_rgp_pe",
    "run_gp_ucb",
    "run_rgp_ucb",
    "run_uniform",
    "gamma_surrogate",
    "psi_from_gamma",
    "ucb_enlargement",
]


@dataclass(frozen=True)
class BetaSchedule:
    """Per-epoch confidence multiplier for phased elimination.

    constant       beta_h = value (the experimental choice)
    finite_domain  beta_h = B + (sigma/sqrt(lam)) * sqrt(2 ln(n/delta_h))
    adaptive       beta_h = B + sigma * sqrt(2 (gamma_bound + 1 + ln(1/delta_h)))
                   (conservative; gamma_bound is an info-gain upper bound)

    with delta_h = 6 delta / ((h+1)^2 pi^2) so the union over epochs stays
    below delta.
    """

    mode: str = "constant"
    value: float = 4.0
    B: float = 1.0
    sigma: float = 0.02
    lam: float = 1.0
    delta: float = 0.1
    n_domain: int = 1
    gamma_bound: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant", "finite_domain", "adaptive"):
            raise ValueError(f"unknown beta mode {self.mode!r}")

    def beta(self, h: int) -> float:
        if self.mode == "constant":
            return self.value
        delta_h = 6.0 * self.delta / ((h + 1) ** 2 * math.pi**2)
        if self.mode == "finite_domain":
            return self.B + (self.sigma / math.sqrt(self.lam)) * math.sqrt(
                2.0 * math.log(self.n_domain / delta_h)
            )
        return self.B + self.sigma * math.sqrt(
            2.0 * (self.gamma_bound + 1.0 + math.log(1.0 / delta_h))
        )


@dataclass(frozen=True)
class ConfidenceConfig:
    """Everything the elimination rule needs to know."""

    beta: BetaSchedule = BetaSchedule()
    width_mode: str = "practical"  # "theoretical" | "practical"
    b: float = 0.1
    C: float = 0.0
    psi: float = 0.5
    eta: float = 2.0
    lam: float = 1.0

    def __post_init__(self):
        if self.width_mode not in ("theoretical", "practical"):
            raise ValueError(f"unknown width mode {self.width_mode!r}")
        if not self.eta > 1.0:
            raise ValueError("eta must exceed 1")
        if not self.psi > 0.0:
            raise ValueError("psi must be positive")
        if not self.lam > 0.0:
            raise ValueError("lam must be positive")
        if not 0.0 < self.b <= 1.0:
            raise ValueError("b must lie in (0, 1]")
        if self.C < 0.0:
            raise ValueError("C must be nonnegative")


@dataclass
class EpochState:
    """Bookkeeping for one phased-elimination epoch."""

    h: int
    l_h: int
    active: np.ndarray  # domain indices, ascending
    selection_seq: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    support: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    xi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    u_alloc: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    switch_rounds: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sigma_at_pick: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sel_logdet: float = 0.0
    _sel_local: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64), repr=False)
    _support_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64), repr=False)

    @property
    def u_total(self) -> int:
        return int(self.u_alloc.sum())


def select_batch(state: EpochState, K_active: np.ndarray, lam: float, eta: float) -> EpochState:
    """Run the l_h-round rare-switching selection loop over the active set.

    Each round plays argmax of the variance cache frozen at the last switch
    (ties to the lowest index, stable between switches); the cache refreshes
    only when the selected multiset's determinant grows past the previous
    anchor by a strict factor eta.  Fills the selection fields of `state`.
    """
    sel_local, switches, sigma_at_pick, logdet = backend.select_epoch(
        K_active, lam, eta, state.l_h
    )
    state.selection_seq = state.active[sel_local]
    state.support, counts = np.unique(state.selection_seq, return_counts=True)
    state.xi = counts / state.l_h
    state.switch_rounds = switches
    state.sigma_at_pick = sigma_at_pick
    state.sel_logdet = float(logdet)
    state._sel_local = sel_local
    state._support_counts = counts
    return state


def allocate_plays(state: EpochState, psi: float) -> np.ndarray:
    """Plays per supported action: ceil(l_h * max(xi, psi)).

    The xi branch is exact integer arithmetic (xi = count / l_h), so no
    ceiling slop can creep in from the division.
    """
    counts = state._support_counts
    floor_plays = math.ceil(state.l_h * psi)
    state.u_alloc = np.maximum(counts, floor_plays).astype(np.int64)
    return state.u_alloc


def elimination_width(cfg: ConfidenceConfig, h: int, u_h: int, l_h: int) -> float:
    """Confidence-width multiplier for the elimination rule.

    theoretical: beta_h + C sqrt(u_h) / (l_h psi lam)
    practical:   beta_h + b C / sqrt(u_h)
    """
    beta_h = cfg.beta.beta(h)
    if cfg.width_mode == "theoretical":
        return beta_h + cfg.C * math.sqrt(u_h) / (l_h * cfg.psi * cfg.lam)
    return beta_h + cfg.b * cfg.C / math.sqrt(u_h)


def eliminate(
    active: np.ndarray, mu: np.ndarray, sigma: np.ndarray, width: float
) -> np.ndarray:
    """Keep x iff mu(x) + w sigma(x) >= max over x' of (mu(x') - w sigma(x')).

    The maximizer of the lower bound always survives, so the result is
    never empty.
    """
    lcb_max = np.max(mu - width * sigma)
    keep = mu + width * sigma >= lcb_max
    return active[keep]


def psi_from_gamma(eta: float, gamma: float) -> float:
    """Truncation parameter from the switching parameter and an info-gain level."""
    return math.log(eta) / (2.0 * gamma)


def gamma_surrogate(kernel: KernelSpec, domain, lam: float, T: int) -> float:
    """Greedy stand-in for the maximal information gain.

    Picks duplicate-free max-variance points (the classic near-optimal
    greedy for the submodular log-det objective) for min(T, |domain|)
    steps and returns the realized gain of that set.
    """
    pts = domain.points if hasattr(domain, "points") else np.atleast_2d(domain)
    n = pts.shape[0]
    cov = gram_matrix(kernel, pts)
    var = np.ascontiguousarray(np.diag(cov)).copy()
    picked = np.zeros(n, dtype=bool)
    gain = 0.0
    for _ in range(min(T, n)):
        masked = np.where(picked, -np.inf, var)
        j = int(np.argmax(masked))
        s2 = max(var[j], 0.0)
        gain += 0.5 * math.log1p(s2 / lam)
        backend.variance_update(cov, var, j, lam)
        picked[j] = True
    return gain


def _new_trace(algorithm: str, trial: int, seed: int, T: int) -> RegretTrace:
    return RegretTrace(
        algorithm=algorithm,
        trial=trial,
        seed=seed,
        action=np.zeros(T, dtype=np.int64),
        y=np.zeros(T),
        c=np.zeros(T),
        instant_regret=np.zeros(T),
        cum_regret=np.zeros(T),
    )


def run_rgp_pe(
    cfg: ConfidenceConfig,
    kernel: KernelSpec,
    env: Environment,
    ledger: AttackLedger,
    T: int,
    rng: np.random.Generator,
    *,
    trial: int = 0,
    seed: int = 0,
    audit: AuditLog | None = None,
) -> TrialResult:
    """Phased elimination with rare switching and robust averaged estimates.

    Epochs double in nominal length l_h.  Each epoch selects a small support
    by rare switching, plays every supported action at least ceil(l_h psi)
    times, refits the posterior from this epoch's (possibly corrupted)
    rewards only, and eliminates actions whose enlarged UCB falls below the
    best enlarged LCB.  Play order within an epoch is ascending index; the
    run truncates mid-epoch once T total plays are reached.
    """
    if T < 2:
        raise ValueError("T must be at least 2")
    n = len(env.domain)
    K = gram_matrix(kernel, env.domain.points)
    pts = env.domain.points
    f = env.truth.values
    f_max = env.truth.f_max

    trace = _new_trace("rgp_pe", trial, seed, T)
    view = AlgorithmView(algo="rgp_pe", n_actions=n, active=np.arange(n), cache_key=0)
    active = np.arange(n)
    active_history = [active]
    l_h = 2
    h = 0
    done = 0
    eliminated_any = False

    while done < T:
        state = EpochState(h=h, l_h=l_h, active=active)
        select_batch(state, K[np.ix_(active, active)], cfg.lam, cfg.eta)
        allocate_plays(state, cfg.psi)

        t_start = done + 1
        counts_obs = np.zeros(len(state.support), dtype=np.int64)
        sums_obs = np.zeros(len(state.support))
        truncated = False
        for i, (x, u) in enumerate(zip(state.support, state.u_alloc)):
            x = int(x)
            m = min(int(u), T - done)
            gap = f_max - f[x]
            for _ in range(m):
                y, c = observe_parts(env, ledger, x, rng, view, done + 1)
                trace.action[done] = x
                trace.y[done] = y
                trace.c[done] = c
                trace.instant_regret[done] = gap
                done += 1
            counts_obs[i] = m
            sums_obs[i] = np.sum(trace.y[done - m : done] + trace.c[done - m : done])
            if m < u:
                truncated = True
                break
        trace.epoch_marks.append(
            EpochMark(h, t_start, len(active), len(state.support), done - t_start + 1)
        )

        if audit is not None:
            sigmas_by_round = recompute_selection_sigmas(
                kernel, pts[active], state._sel_local, cfg.lam
            )
            audit.check_switch_ratio(
                h,
                eta=cfg.eta,
                sel_local=state._sel_local,
                switch_rounds=state.switch_rounds,
                sigmas_by_round=sigmas_by_round,
            )

        if truncated:
            if audit is not None:
                audit.check_epoch(
                    h,
                    l_h=l_h,
                    psi=cfg.psi,
                    lam=cfg.lam,
                    eta=cfg.eta,
                    u_planned=state.u_total,
                    support_size=len(state.support),
                    sel_logdet=state.sel_logdet,
                    sigma_at_pick=state.sigma_at_pick,
                    sigma_post=None,
                )
            break

        data = AggregatedDataset(kernel, pts[state.support], counts_obs, sums_obs, cfg.lam)
        mu, var = posterior_mean_var_many(data, pts[active])
        sigma = np.sqrt(var)
        width = elimination_width(cfg, h, state.u_total, l_h)
        new_active = eliminate(active, mu, sigma, width)

        if audit is not None:
            audit.check_epoch(
                h,
                l_h=l_h,
                psi=cfg.psi,
                lam=cfg.lam,
                eta=cfg.eta,
                u_planned=state.u_total,
                support_size=len(state.support),
                sel_logdet=state.sel_logdet,
                sigma_at_pick=state.sigma_at_pick,
                sigma_post=sigma,
            )

        if len(new_active) < len(active):
            eliminated_any = True
        active = new_active
        active_history.append(active)
        view.active = active
        view.eliminated_any = eliminated_any
        view.cache_key = h + 1
        later_trigger_check(ledger, view)
        l_h *= 2
        h += 1

    np.cumsum(trace.instant_regret, out=trace.cum_regret)
    trace.final_active = active
    if audit is not None:
        audit.check_epoch_count(len(trace.epoch_marks), T)
    return TrialResult(trace, ledger, env.truth, active_history)


@dataclass(frozen=True)
class UcbSchedule:
    """Round-indexed confidence multiplier for the sequential algorithms.

    sqrt_log: beta_t = scale * sqrt(ln t), floored at its t = 2 value
    (ln 1 = 0 would make the first round purely greedy on a flat prior).
    """

    mode: str = "sqrt_log"
    scale: float = 0.5
    value: float = 2.0

    def __post_init__(self):
        if self.mode not in ("sqrt_log", "constant"):
            raise ValueError(f"unknown ucb beta mode {self.mode!r}")

    def beta(self, t: int) -> float:
        if self.mode == "constant":
            return self.value
        return self.scale * math.sqrt(math.log(max(t, 2)))


def _run_ucb(
    algo: str,
    schedule: UcbSchedule,
    kernel: KernelSpec,
    env: Environment,
    ledger: AttackLedger,
    T: int,
    rng: np.random.Generator,
    *,
    lam: float = 1.0,
    robust_bonus: float = 0.0,
    trial: int = 0,
    seed: int = 0,
    audit: AuditLog | None = None,
) -> TrialResult:
    n = len(env.domain)
    f = env.truth.values
    f_max = env.truth.f_max
    cov = gram_matrix(kernel, env.domain.points)
    var = np.ascontiguousarray(np.diag(cov)).copy()
    mean = np.zeros(n)
    view = AlgorithmView(algo=algo, n_actions=n)
    trace = _new_trace(algo, trial, seed, T)
    sigma_at_pick = np.zeros(T) if audit is not None else None

    for t in range(1, T + 1):
        coef = schedule.beta(t) + robust_bonus
        sd = np.sqrt(np.maximum(var, 0.0))
        ucb = mean + coef * sd
        if algo == "rgp_ucb" and ledger.trigger == "later" and not ledger.active:
            view.ucb = ucb
            view.lcb = mean - coef * sd
            later_trigger_check(ledger, view)
        x = int(np.argmax(ucb))
        if sigma_at_pick is not None:
            sigma_at_pick[t - 1] = sd[x]
        y, c = observe_parts(env, ledger, x, rng, view, t)
        backend.condition_update(cov, var, mean, x, y + c, lam)
        trace.action[t - 1] = x
        trace.y[t - 1] = y
        trace.c[t - 1] = c
        trace.instant_regret[t - 1] = f_max - f[x]

    np.cumsum(trace.instant_regret, out=trace.cum_regret)
    if audit is not None:
        audit.check_run_sum_std(sigma_at_pick, lam)
    return TrialResult(trace, ledger, env.truth, [])


def run_gp_ucb(
    schedule: UcbSchedule,
    kernel: KernelSpec,
    env: Environment,
    ledger: AttackLedger,
    T: int,
    rng: np.random.Generator,
    *,
    lam: float = 1.0,
    trial: int = 0,
    seed: int = 0,
    audit: AuditLog | None = None,
) -> TrialResult:
    """Fully sequential UCB on the posterior over all past corrupted rewards."""
    return _run_ucb(
        "gp_ucb", schedule, kernel, env, ledger, T, rng,
        lam=lam, robust_bonus=0.0, trial=trial, seed=seed, audit=audit,
    )


def ucb_enlargement(C: float, b: float, lam: float, width_mode: str = "practical") -> float:
    """Constant added to the UCB coefficient to absorb corruption.

    practical: b C / sqrt(lam); theoretical: C / sqrt(lam).
    """
    return (C if width_mode == "theoretical" else b * C) / math.sqrt(lam)


def run_rgp_ucb(
    schedule: UcbSchedule,
    kernel: KernelSpec,
    env: Environment,
    ledger: AttackLedger,
    T: int,
    rng: np.random.Generator,
    *,
    lam: float = 1.0,
    C: float = 0.0,
    b: float = 0.1,
    width_mode: str = "practical",
    trial: int = 0,
    seed: int = 0,
    audit: AuditLog | None = None,
) -> TrialResult:
    """UCB with the corruption-enlarged coefficient beta_t + b C / sqrt(lam).

    With C = 0 the coefficient degenerates to beta_t and the trace is
    seed-identical to the plain UCB run.
    """
    bonus = ucb_enlargement(C, b, lam, width_mode)
    return _run_ucb(
        "rgp_ucb", schedule, kernel, env, ledger, T, rng,
        lam=lam, robust_bonus=bonus, trial=trial, seed=seed, audit=audit,
    )


def run_uniform(
    env: Environment,
    ledger: AttackLedger,
    T: int,
    rng: np.random.Generator,
    rng_policy: np.random.Generator,
    *,
    trial: int = 0,
    seed: int = 0,
) -> TrialResult:
    """Uniform-random control policy (regret yardstick for the baselines)."""
    n = len(env.domain)
    f = env.truth.values
    f_max = env.truth.f_max
    view = AlgorithmView(algo="uniform", n_actions=n)
    trace = _new_trace("uniform", trial, seed, T)
    actions = rng_policy.integers(0, n, size=T)
    for t in range(1, T + 1):
        x = int(actions[t - 1])
        y, c = observe_parts(env, ledger, x, rng, view, t)
        trace.action[t - 1] = x
        trace.y[t - 1] = y
        trace.c[t - 1] = c
        trace.instant_regret[t - 1] = f_max - f[x]
    np.cumsum(trace.instant_regret, out=trace.cum_regret)
    return TrialResult(trace, ledger, env.truth, [])
