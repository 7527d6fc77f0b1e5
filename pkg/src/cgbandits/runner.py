"""Turn a validated config into seeded single-trial runs.

Per-trial seed = base seed + trial index; the noise / function-draw / policy
streams for a trial are disjoint substreams of that seed, so any subset of
trials can be re-run in isolation and reproduce byte-identical traces.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import algorithms as alg
from . import linred
from .adversary import AttackLedger
from .audit import AuditLog
from .config import ConfigError, ExperimentConfig, resolve_region
from .environment import (
    ROLE_GP,
    ROLE_NOISE,
    ROLE_TIES,
    Environment,
    GroundTruth,
    TrialResult,
    sample_gp_function,
    stream,
)
from .kernels import Domain, KernelSpec, grid_domain

__all__ = ["build_domain", "build_kernel", "build_truth", "build_ledger", "run_single_trial"]


def build_domain(cfg: ExperimentConfig) -> Domain:
    if cfg["domain.kind"] == "grid":
        return grid_domain(cfg["domain.low"], cfg["domain.high"], cfg["domain.res"], cfg["domain.dim"])
    pts = np.loadtxt(Path(cfg["domain.file"]), delimiter=",", ndmin=2)
    return Domain(pts, name=str(cfg["domain.file"]))


def build_kernel(cfg: ExperimentConfig) -> KernelSpec:
    return KernelSpec(cfg["kernel.family"], cfg["kernel.lengthscale"], cfg["kernel.nu"])


def build_truth(cfg: ExperimentConfig, kernel: KernelSpec, domain: Domain, trial: int) -> GroundTruth:
    if cfg["function.kind"] == "table":
        vals = np.loadtxt(Path(cfg["function.file"]), delimiter=",").ravel()
        if len(vals) != len(domain):
            raise ConfigError("function table length does not match the domain")
        return GroundTruth("table", vals)
    fn_seed = cfg.values.get("function.seed")
    if fn_seed is not None:
        rng_gp = stream(fn_seed, 0, ROLE_GP)  # one draw shared by all trials
    else:
        rng_gp = stream(cfg.seed, trial, ROLE_GP)
    return sample_gp_function(kernel, domain, rng_gp)


def build_ledger(cfg: ExperimentConfig, truth: GroundTruth, domain: Domain) -> AttackLedger:
    region = None
    if cfg.values.get("attack.region"):
        region = resolve_region(cfg["attack.region"], domain.points)
    return AttackLedger(
        policy=cfg["attack.type"],
        budget=cfg["attack.C"],
        f_values=truth.values,
        region_mask=region,
        delta=cfg["attack.delta"],
        h_max=cfg["attack.hmax"],
        k=cfg["attack.K"],
        trigger=cfg["attack.trigger"],
    )


def _c_known(cfg: ExperimentConfig) -> float:
    c = cfg.values.get("C_known")
    return cfg["attack.C"] if c is None else c


def _beta_schedule(cfg: ExperimentConfig, kernel, domain) -> alg.BetaSchedule:
    mode = cfg["beta.mode"]
    gamma_bound = 0.0
    if mode == "adaptive":
        gamma_bound = alg.gamma_surrogate(kernel, domain, cfg["lambda"], cfg.T)
    return alg.BetaSchedule(
        mode=mode,
        value=cfg["beta.value"],
        B=cfg["beta.B"],
        sigma=cfg["noise.sigma"],
        lam=cfg["lambda"],
        delta=cfg["beta.delta"],
        n_domain=len(domain),
        gamma_bound=gamma_bound,
    )


def run_single_trial(
    cfg: ExperimentConfig, trial: int, audit: AuditLog | None = None
) -> TrialResult:
    domain = build_domain(cfg)
    kernel = build_kernel(cfg)
    truth = build_truth(cfg, kernel, domain, trial)
    env = Environment(domain, truth, cfg["noise.sigma"])
    ledger = build_ledger(cfg, truth, domain)
    trial_seed = cfg.seed + trial
    rng_noise = stream(cfg.seed, trial, ROLE_NOISE)
    lam = cfg["lambda"]
    T = cfg.T
    algo = cfg.algo

    if algo == "rgp_pe":
        psi = cfg["psi"]
        if psi == "auto":
            gamma = alg.gamma_surrogate(kernel, domain, lam, T)
            psi = alg.psi_from_gamma(cfg["eta"], gamma)
        conf = alg.ConfidenceConfig(
            beta=_beta_schedule(cfg, kernel, domain),
            width_mode=cfg["width.mode"],
            b=cfg["b"],
            C=_c_known(cfg),
            psi=psi,
            eta=cfg["eta"],
            lam=lam,
        )
        return alg.run_rgp_pe(
            conf, kernel, env, ledger, T, rng_noise,
            trial=trial, seed=trial_seed, audit=audit,
        )

    if algo in ("gp_ucb", "rgp_ucb"):
        schedule = alg.UcbSchedule(
            mode=cfg["ucb.beta.mode"], scale=cfg["ucb.beta.scale"], value=cfg["ucb.beta.value"]
        )
        if algo == "gp_ucb":
            return alg.run_gp_ucb(
                schedule, kernel, env, ledger, T, rng_noise,
                lam=lam, trial=trial, seed=trial_seed, audit=audit,
            )
        return alg.run_rgp_ucb(
            schedule, kernel, env, ledger, T, rng_noise,
            lam=lam, C=_c_known(cfg), b=cfg["b"], width_mode=cfg["width.mode"],
            trial=trial, seed=trial_seed, audit=audit,
        )

    if algo == "uniform":
        rng_policy = stream(cfg.seed, trial, ROLE_TIES)
        return alg.run_uniform(
            env, ledger, T, rng_noise, rng_policy, trial=trial, seed=trial_seed
        )

    if algo == "rpe_linear":
        rpe_cfg = linred.RpeConfig(
            big_delta=cfg["rpe.delta"],
            alpha=cfg["rpe.alpha"],
            conf_delta=cfg["rpe.conf_delta"],
            B=cfg["rpe.B"],
            C_known=_c_known(cfg),
        )
        return linred.run_rpe_linear(
            rpe_cfg, kernel, env, ledger, T, rng_noise, trial=trial, seed=trial_seed
        )

    raise ConfigError(f"unknown algo {algo!r}")
