"""Reduction of the kernelized problem to a finite-dimensional linear one.

A greedy Newton-basis construction (pivoted-Cholesky style) picks centers
until the power function -- the pointwise interpolation-error bound -- drops
below an admissible error e everywhere on the domain.  Actions embed as
their basis coordinates, any bounded-norm reward function is within
e * ||f|| of a linear function of the embedding, and a robust phased
elimination for linear bandits runs on the embedded actions with a
G-optimal exploration design computed by Frank-Wolfe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adversary import AlgorithmView, AttackLedger, later_trigger_check
from .environment import Environment, EpochMark, RegretTrace, TrialResult, observe_parts
from .kernels import Domain, KernelSpec, cross_gram, diag_gram

__all__ = [
    "NewtonBasis",
    "LinearPhaseState",
    "RpeConfig",
    "DesignError",
    "SingularDesignError",
    "newton_basis",
    "embed",
    "embed_all",
    "project_rkhs_combination",
    "approx_design",
    "design_norms",
    "initial_budget",
    "rpe_threshold",
    "rpe_estimate",
    "rpe_eliminate",
    "run_rpe_linear",
]

# power function below this is indistinguishable from interpolation roundoff
_P2_FLOOR = 1e-12


class DesignError(RuntimeError):
    """Frank-Wolfe could not certify the design bound (degenerate actions)."""


class SingularDesignError(RuntimeError):
    """An active action escaped the span of the exploration design."""


@dataclass
class NewtonBasis:
    """Greedy interpolation basis with triangular kernel-column coefficients.

    N_i(x) = sum_{j <= i} coeffs[i, j] * k(x, s_j); the basis is orthonormal
    in the function space, N_i(s_j) = 0 for j < i, and the power function
    P2(x) = k(x, x) - sum_i N_i(x)^2 is below e^2 on the whole domain at
    termination.
    """

    kernel: KernelSpec
    center_indices: np.ndarray  # (D,) domain indices, selection order
    centers: np.ndarray  # (D, d) points
    coeffs: np.ndarray  # (D, D) lower triangular
    admissible_error: float
    p2_history: list[tuple[int, int, float]] = field(default_factory=list)
    # rows (iteration, center_index, max residual power after adding it)

    @property
    def dim(self) -> int:
        return len(self.center_indices)


def newton_basis(kernel: KernelSpec, domain: Domain, e: float) -> NewtonBasis:
    """Select centers greedily at the power-function maximum until it is < e^2.

    Ties go to the lowest domain index.  Stops early once the residual hits
    interpolation roundoff (~1e-12) or every domain point is a center, so
    e = 0 asks for full interpolation rather than an infinite loop.
    """
    if e < 0:
        raise ValueError("admissible error must be nonnegative")
    pts = domain.points
    n = len(domain)
    kdiag = diag_gram(kernel, pts)
    e2 = e * e

    s1 = int(np.argmax(kdiag))
    root = math.sqrt(kdiag[s1])
    n_vals = [cross_gram(kernel, pts, pts[s1][None, :])[:, 0] / root]
    rows = [np.array([1.0 / root])]
    centers = [s1]
    p2 = kdiag - n_vals[0] ** 2
    np.maximum(p2, 0.0, out=p2)
    history = [(1, s1, float(np.max(p2)))]

    while True:
        p2max = float(np.max(p2))
        if p2max < e2 or p2max <= _P2_FLOOR or len(centers) == n:
            break
        s_new = int(np.argmax(p2))
        k_new = cross_gram(kernel, pts, pts[s_new][None, :])[:, 0]
        proj = np.zeros(n)
        coeff_new = np.zeros(len(centers) + 1)
        coeff_new[len(centers)] = 1.0
        for i, nv in enumerate(n_vals):
            w = nv[s_new]
            proj += w * nv
            coeff_new[: len(rows[i])] -= w * rows[i]
        u = k_new - proj
        root = math.sqrt(p2[s_new])
        n_vals.append(u / root)
        rows.append(coeff_new / root)
        centers.append(s_new)
        p2 = p2 - n_vals[-1] ** 2
        np.maximum(p2, 0.0, out=p2)
        history.append((len(centers), s_new, float(np.max(p2))))

    D = len(centers)
    coeffs = np.zeros((D, D))
    for i, row in enumerate(rows):
        coeffs[i, : len(row)] = row
    return NewtonBasis(
        kernel=kernel,
        center_indices=np.asarray(centers, dtype=np.int64),
        centers=pts[np.asarray(centers)],
        coeffs=coeffs,
        admissible_error=e,
        p2_history=history,
    )


def embed(basis: NewtonBasis, x) -> np.ndarray:
    """Basis coordinates of one point; squared norm is k(x,x) - P2(x) <= 1."""
    return embed_all(basis, np.asarray(x, dtype=np.float64)[None, :])[0]


def embed_all(basis: NewtonBasis, pts) -> np.ndarray:
    """(n, D) embedding of a point set."""
    kcols = cross_gram(basis.kernel, np.atleast_2d(pts), basis.centers)
    return kcols @ basis.coeffs.T


def project_rkhs_combination(basis: NewtonBasis, combo_points, combo_weights) -> np.ndarray:
    """Basis coefficients of f = sum_j a_j k(., z_j) (its best approximation)."""
    emb = embed_all(basis, combo_points)
    return emb.T @ np.asarray(combo_weights, dtype=np.float64).ravel()


def initial_budget(D: int) -> int:
    """Support cap and epoch-0 budget m_0 = ceil(4 D (max(ln ln D, 0) + 18)).

    The inner log is clamped at zero: ln ln D is undefined or negative for
    D <= 2, where the formula's intent is just the constant part.
    """
    loglog = math.log(math.log(D)) if D >= 3 else 0.0
    return math.ceil(4.0 * D * (max(loglog, 0.0) + 18.0))


def design_norms(actions: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Design-weighted leverage ||x||^2_{Gamma(zeta)^+} for every action."""
    gamma = actions.T @ (zeta[:, None] * actions)
    ginv = np.linalg.pinv(gamma, hermitian=True)
    return np.einsum("ij,jk,ik->i", actions, ginv, actions)


def approx_design(actions: np.ndarray, D: int, m0: int | None = None, max_iter: int = 10_000) -> np.ndarray:
    """Frank-Wolfe exploration design with leverage at most 2D, support <= m0.

    Starts uniform, takes exact line-search steps toward the worst-leverage
    vertex until max ||x||^2_{Gamma^-1} <= 2D, then prunes negligible and
    smallest weights down to the support cap and re-verifies the bound.
    Raises DesignError if the bound cannot be met or survives pruning.
    """
    actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    m = actions.shape[0]
    if m == 0:
        raise ValueError("approx_design needs at least one action")
    if m0 is None:
        m0 = initial_budget(D)
    rank = int(np.linalg.matrix_rank(actions))
    zeta = np.full(m, 1.0 / m)
    bound = 2.0 * D

    for _ in range(max_iter):
        g = design_norms(actions, zeta)
        gmax = float(np.max(g))
        if gmax <= bound:
            break
        i_star = int(np.argmax(g))
        step = (gmax / rank - 1.0) / (gmax - 1.0)
        zeta *= 1.0 - step
        zeta[i_star] += step
    else:
        raise DesignError(
            f"design bound {bound} unmet after {max_iter} Frank-Wolfe iterations"
        )

    zeta[zeta < 1e-6] = 0.0
    support = np.nonzero(zeta)[0]
    if len(support) > m0:
        order = np.argsort(zeta[support], kind="stable")
        zeta[support[order[: len(support) - m0]]] = 0.0
    total = zeta.sum()
    if total <= 0:
        raise DesignError("design support vanished during pruning")
    zeta /= total
    if float(np.max(design_norms(actions, zeta))) > bound * (1.0 + 1e-9):
        raise DesignError("pruned design violates the leverage bound")
    return zeta


def rpe_threshold(
    D: int, m0: int, m_h: int, alpha: float, conf_delta: float, big_delta: float, C: float
) -> float:
    """Elimination threshold: approximation + noise + corruption terms."""
    span = math.sqrt(D * (1.0 + alpha * m0))
    return (
        4.0 * big_delta * span
        + 4.0 * math.sqrt((D / m_h) * math.log(1.0 / conf_delta))
        + (4.0 * C / (alpha * m_h)) * span
    )


def rpe_estimate(
    support_emb: np.ndarray,
    u_alloc: np.ndarray,
    reward_sums: np.ndarray,
    active_emb: np.ndarray | None = None,
) -> np.ndarray:
    """Averaged least-squares estimate on the epoch's plays.

    Gamma = sum_x u(x) x x^T is unregularized; the solve lives on the span
    of the played actions.  If some active action leaves that span the
    estimate cannot score it and SingularDesignError is raised.
    """
    support_emb = np.atleast_2d(support_emb)
    gamma = support_emb.T @ (u_alloc[:, None] * support_emb)
    ginv = np.linalg.pinv(gamma, hermitian=True)
    if active_emb is not None:
        resid = active_emb - active_emb @ ginv @ gamma
        norms = np.linalg.norm(active_emb, axis=1)
        if np.any(np.linalg.norm(resid, axis=1) > 1e-6 * np.maximum(norms, 1.0)):
            raise SingularDesignError("active action outside the design span")
    return ginv @ (support_emb.T @ reward_sums)


def rpe_eliminate(active_emb: np.ndarray, theta: np.ndarray, threshold: float) -> np.ndarray:
    """Keep actions within `threshold` of the empirical best inner product."""
    scores = active_emb @ theta
    keep = scores >= np.max(scores) - threshold
    return keep


@dataclass(frozen=True)
class RpeConfig:
    """Parameters of the linearized robust phased elimination."""

    big_delta: float | str = "auto"  # "auto" -> 1/sqrt(T); "matern" -> T^(-nu/(d+nu))
    alpha: float = 0.05
    conf_delta: float = 0.1
    B: float = 1.0
    C_known: float | None = None  # None: trust the ledger's budget

    def resolve_delta(self, T: int, kernel: KernelSpec, dim: int) -> float:
        if isinstance(self.big_delta, str):
            if self.big_delta == "auto":
                return 1.0 / math.sqrt(T)
            if self.big_delta == "matern":
                return T ** (-kernel.nu / (dim + kernel.nu))
            raise ValueError(f"unknown big_delta mode {self.big_delta!r}")
        return float(self.big_delta)


@dataclass
class LinearPhaseState:
    h: int
    m_h: int
    active: np.ndarray  # domain indices
    zeta: np.ndarray | None = None
    u_alloc: np.ndarray | None = None
    theta: np.ndarray | None = None


def run_rpe_linear(
    cfg: RpeConfig,
    kernel: KernelSpec,
    env: Environment,
    ledger: AttackLedger,
    T: int,
    rng: np.random.Generator,
    *,
    trial: int = 0,
    seed: int = 0,
    basis: NewtonBasis | None = None,
) -> TrialResult:
    """Phased elimination on the embedded actions against the same adversary.

    The basis is built with admissible error e = Delta / B unless supplied;
    each epoch plays a G-optimal design (budget m_h, doubling), estimates the
    linear parameter by averaged least squares, and keeps actions within the
    corruption-aware threshold of the empirical best.
    """
    if T < 2:
        raise ValueError("T must be at least 2")
    n = len(env.domain)
    f = env.truth.values
    f_max = env.truth.f_max
    big_delta = cfg.resolve_delta(T, kernel, env.domain.dim)
    if basis is None:
        basis = newton_basis(kernel, env.domain, big_delta / cfg.B)
    emb = embed_all(basis, env.domain.points)
    D = basis.dim
    m0 = initial_budget(D)

    trace = _new_linear_trace(trial, seed, T)
    view = AlgorithmView(algo="rpe_linear", n_actions=n, active=np.arange(n), cache_key=0)
    active = np.arange(n)
    active_history = [active]
    m_h = m0
    h = 0
    done = 0
    eliminated_any = False

    while done < T:
        A = emb[active]
        zeta = approx_design(A, D, m0)
        support_local = np.nonzero(zeta)[0]
        u_alloc = np.ceil(m_h * np.maximum(zeta[support_local], cfg.alpha)).astype(np.int64)

        t_start = done + 1
        sums = np.zeros(len(support_local))
        truncated = False
        for i, loc in enumerate(support_local):
            x = int(active[loc])
            m = min(int(u_alloc[i]), T - done)
            gap = f_max - f[x]
            for _ in range(m):
                y, c = observe_parts(env, ledger, x, rng, view, done + 1)
                trace.action[done] = x
                trace.y[done] = y
                trace.c[done] = c
                trace.instant_regret[done] = gap
                done += 1
            sums[i] = np.sum(
                trace.y[done - m : done] + trace.c[done - m : done]
            )
            if m < u_alloc[i]:
                truncated = True
                break
        trace.epoch_marks.append(
            EpochMark(h, t_start, len(active), len(support_local), done - t_start + 1)
        )
        if truncated:
            break

        theta = rpe_estimate(A[support_local], u_alloc, sums, active_emb=A)
        c_known = ledger.budget if cfg.C_known is None else cfg.C_known
        thr = rpe_threshold(D, m0, m_h, cfg.alpha, cfg.conf_delta, big_delta, c_known)
        keep = rpe_eliminate(A, theta, thr)
        new_active = active[keep]
        if len(new_active) < len(active):
            eliminated_any = True
        active = new_active
        active_history.append(active)
        view.active = active
        view.eliminated_any = eliminated_any
        view.cache_key = h + 1
        later_trigger_check(ledger, view)
        m_h *= 2
        h += 1

    np.cumsum(trace.instant_regret, out=trace.cum_regret)
    trace.final_active = active
    return TrialResult(trace, ledger, env.truth, active_history)


def _new_linear_trace(trial: int, seed: int, T: int) -> RegretTrace:
    return RegretTrace(
        algorithm="rpe_linear",
        trial=trial,
        seed=seed,
        action=np.zeros(T, dtype=np.int64),
        y=np.zeros(T),
        c=np.zeros(T),
        instant_regret=np.zeros(T),
        cum_regret=np.zeros(T),
    )
