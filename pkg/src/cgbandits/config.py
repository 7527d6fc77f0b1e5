"""Experiment configuration: a flat dotted-key text format.

One `key = value` pair per line, '#' starts a comment, unknown keys are
errors.  The format is deliberately dependency-free and bit-exactly
documented so that configs archived next to result CSVs stay readable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config", "resolve_region"]


class ConfigError(ValueError):
    """Invalid, unknown, or inconsistent configuration keys."""


def _as_bool_choice(allowed):
    def cast(raw: str):
        if raw not in allowed:
            raise ConfigError(f"expected one of {allowed}, got {raw!r}")
        return raw

    return cast


def _as_int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {raw!r}") from exc


def _as_float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {raw!r}") from exc


def _as_str(raw: str) -> str:
    return raw


def _as_psi(raw: str):
    return "auto" if raw == "auto" else _as_float(raw)


def _as_rpe_delta(raw: str):
    return raw if raw in ("auto", "matern") else _as_float(raw)


# key -> (caster, default); None default means "unset"
_SCHEMA = {
    "algo": (_as_bool_choice(("rgp_pe", "gp_ucb", "rgp_ucb", "uniform", "rpe_linear")), None),
    "T": (_as_int, None),
    "trials": (_as_int, 1),
    "seed": (_as_int, 0),
    "domain.kind": (_as_bool_choice(("grid", "file")), "grid"),
    "domain.low": (_as_float, -5.0),
    "domain.high": (_as_float, 5.0),
    "domain.res": (_as_int, 10),
    "domain.dim": (_as_int, 2),
    "domain.file": (_as_str, None),
    "kernel.family": (_as_bool_choice(("se", "linear", "matern")), "se"),
    "kernel.lengthscale": (_as_float, 0.5),
    "kernel.nu": (_as_float, 2.5),
    "function.kind": (_as_bool_choice(("gp_sample", "table")), "gp_sample"),
    "function.seed": (_as_int, None),
    "function.file": (_as_str, None),
    "noise.sigma": (_as_float, 0.02),
    "lambda": (_as_float, 1.0),
    "beta.mode": (_as_bool_choice(("constant", "finite_domain", "adaptive")), "constant"),
    "beta.value": (_as_float, 4.0),
    "beta.B": (_as_float, 1.0),
    "beta.delta": (_as_float, 0.1),
    "ucb.beta.mode": (_as_bool_choice(("sqrt_log", "constant")), "sqrt_log"),
    "ucb.beta.scale": (_as_float, 0.5),
    "ucb.beta.value": (_as_float, 2.0),
    "width.mode": (_as_bool_choice(("theoretical", "practical")), "practical"),
    "b": (_as_float, 0.1),
    "psi": (_as_psi, 0.5),
    "eta": (_as_float, 2.0),
    "C_known": (_as_float, None),
    "attack.type": (_as_bool_choice(("none", "clipping", "aggsub", "topk", "flip")), "none"),
    "attack.C": (_as_float, 0.0),
    "attack.delta": (_as_float, 0.5),
    "attack.hmax": (_as_float, 1.0),
    "attack.K": (_as_int, 3),
    "attack.region": (_as_str, None),
    "attack.trigger": (_as_bool_choice(("immediate", "later")), "immediate"),
    "rpe.delta": (_as_rpe_delta, "auto"),
    "rpe.alpha": (_as_float, 0.05),
    "rpe.conf_delta": (_as_float, 0.1),
    "rpe.B": (_as_float, 1.0),
    "newton.e": (_as_float, 0.1),
}


@dataclass
class ExperimentConfig:
    """Resolved, validated experiment settings (attribute per schema key)."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        val = self.values.get(key, default)
        return default if val is None else val

    @property
    def algo(self) -> str:
        return self.values["algo"]

    @property
    def T(self) -> int:
        return self.values["T"]

    @property
    def trials(self) -> int:
        return self.values["trials"]

    @property
    def seed(self) -> int:
        return self.values["seed"]

    def as_dict(self) -> dict:
        return dict(self.values)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate the flat-key format; unknown keys are errors."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    values: dict = {}
    for key, value in raw.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        caster = _SCHEMA[key][0]
        try:
            values[key] = caster(value)
        except ConfigError as exc:
            raise ConfigError(f"key {key!r}: {exc}") from exc
    for key, (_, default) in _SCHEMA.items():
        values.setdefault(key, default)
    if overrides:
        values.update(overrides)

    _validate(values)
    return ExperimentConfig(values)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), overrides)


def _validate(v: dict) -> None:
    if v["algo"] is None:
        raise ConfigError("algo is required")
    if v["T"] is None:
        raise ConfigError("T is required")
    if v["T"] < 2:
        raise ConfigError("T must be at least 2")
    if v["trials"] < 1:
        raise ConfigError("trials must be at least 1")
    if not v["eta"] > 1.0:
        raise ConfigError("eta must exceed 1")
    if v["psi"] != "auto" and not v["psi"] > 0:
        raise ConfigError("psi must be positive (or 'auto')")
    if not v["lambda"] > 0:
        raise ConfigError("lambda must be positive")
    if v["noise.sigma"] < 0:
        raise ConfigError("noise.sigma must be nonnegative")
    if not 0 < v["b"] <= 1:
        raise ConfigError("b must lie in (0, 1]")
    if v["attack.C"] < 0:
        raise ConfigError("attack.C must be nonnegative")
    if v["attack.type"] in ("clipping", "aggsub") and not v["attack.region"]:
        raise ConfigError(f"attack.type={v['attack.type']} requires attack.region")
    if v["attack.type"] == "topk" and v["attack.K"] < 1:
        raise ConfigError("attack.K must be at least 1")
    if v["domain.kind"] == "file" and not v["domain.file"]:
        raise ConfigError("domain.kind=file requires domain.file")
    if v["function.kind"] == "table" and not v["function.file"]:
        raise ConfigError("function.kind=table requires function.file")
    if v["kernel.family"] != "linear" and not v["kernel.lengthscale"] > 0:
        raise ConfigError("kernel.lengthscale must be positive")
    if not v["newton.e"] >= 0:
        raise ConfigError("newton.e must be nonnegative")


_REGION_CMP = re.compile(
    r"^x(?P<i>\d+)\s*(?P<op>(<=|>=|<|>))\s*(?P<rhs>x\d+|[-+]?[0-9.eE]+)$"
)


def resolve_region(expr: str, points: np.ndarray) -> np.ndarray:
    """Boolean mask over domain indices from a region expression.

    Supported forms:
      indices:0,3,9          explicit index list
      x0 <= x1               coordinate comparison
      x1 >= 0.5              coordinate vs constant
    """
    expr = expr.strip()
    if expr.startswith("indices:"):
        try:
            idx = [int(tok) for tok in expr[len("indices:") :].split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad index list in region {expr!r}") from exc
        mask = np.zeros(len(points), dtype=bool)
        for i in idx:
            if not 0 <= i < len(points):
                raise ConfigError(f"region index {i} out of range")
            mask[i] = True
        return mask
    m = _REGION_CMP.match(expr.replace(" ", ""))
    if not m:
        raise ConfigError(f"cannot parse region expression {expr!r}")
    i = int(m.group("i"))
    if i >= points.shape[1]:
        raise ConfigError(f"region coordinate x{i} out of range")
    lhs = points[:, i]
    rhs_tok = m.group("rhs")
    if rhs_tok.startswith("x"):
        j = int(rhs_tok[1:])
        if j >= points.shape[1]:
            raise ConfigError(f"region coordinate {rhs_tok} out of range")
        rhs = points[:, j]
    else:
        rhs = float(rhs_tok)
    op = m.group("op")
    if op == "<=":
        return lhs <= rhs
    if op == ">=":
        return lhs >= rhs
    if op == "<":
        return lhs < rhs
    return lhs > rhs
