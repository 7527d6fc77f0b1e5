"""Kernel functions, Gram matrices, and finite domains.

Every kernel here is normalized so that k(x, x') <= 1; the posterior and
bandit layers rely on that bound.  The linear kernel does not normalize by
itself, so callers must keep linear inputs inside the unit ball (asserted,
never rescaled).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelSpec",
    "Domain",
    "kernel_eval",
    "gram_matrix",
    "cross_gram",
    "diag_gram",
    "grid_domain",
]

_FAMILIES = ("linear", "se", "matern")
_SUPPORTED_NU = (0.5, 1.5, 2.5)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    family      one of "linear", "se", "matern"
    lengthscale positive lengthscale (ignored for "linear")
    nu          Matern smoothness; only 1/2, 3/2, 5/2 have the closed forms
                implemented here
    """

    family: str
    lengthscale: float = 1.0
    nu: float = 2.5

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family != "linear" and not self.lengthscale > 0:
            raise ValueError("lengthscale must be positive")
        if self.family == "matern" and self.nu not in _SUPPORTED_NU:
            raise ValueError(f"unsupported matern nu={self.nu}; use one of {_SUPPORTED_NU}")


@dataclass(frozen=True)
class Domain:
    """Finite, ordered action set.

    Point order is fixed for the lifetime of a run: every tie-break in the
    bandit layer resolves to the lowest index, so reordering points changes
    traces.
    """

    points: np.ndarray  # (n, d) float64
    name: str = "domain"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("domain needs a nonempty (n, d) point array")
        uniq = np.unique(pts, axis=0)
        if uniq.shape[0] != pts.shape[0]:
            raise ValueError("domain points must be pairwise distinct")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def grid_domain(low: float, high: float, res: int, dim: int) -> Domain:
    """Evenly split [low, high]^dim into a res-per-axis grid (endpoints included)."""
    if res < 1 or dim < 1:
        raise ValueError("res and dim must be >= 1")
    axes = [np.linspace(low, high, res) for _ in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return Domain(pts, name=f"grid{res}^{dim}[{low},{high}]")


def _check_dims(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y


def _matern_of_r(r: np.ndarray, ell: float, nu: float) -> np.ndarray:
    # closed forms for half-integer smoothness
    if nu == 0.5:
        return np.exp(-r / ell)
    if nu == 1.5:
        s = math.sqrt(3.0) * r / ell
        return (1.0 + s) * np.exp(-s)
    if nu == 2.5:
        s = math.sqrt(5.0) * r / ell
        return (1.0 + s + s * s / 3.0) * np.exp(-s)
    raise ValueError(f"unsupported matern nu={nu}")


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for a single pair of points."""
    x, y = _check_dims(x, y)
    if spec.family == "linear":
        nx, ny = np.linalg.norm(x), np.linalg.norm(y)
        if nx > 1.0 + 1e-9 or ny > 1.0 + 1e-9:
            raise ValueError("linear-kernel inputs must lie in the unit ball")
        return float(x @ y)
    r = float(np.linalg.norm(x - y))
    if spec.family == "se":
        return float(math.exp(-(r * r) / (2.0 * spec.lengthscale**2)))
    return float(_matern_of_r(np.asarray(r), spec.lengthscale, spec.nu))


def gram_matrix(spec: KernelSpec, pts) -> np.ndarray:
    """n x n kernel matrix over a point list (symmetric, PSD up to roundoff)."""
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise ValueError("gram_matrix needs at least one point")
    return cross_gram(spec, pts, pts)


def diag_gram(spec: KernelSpec, pts) -> np.ndarray:
    """Vector of k(x, x) over a point list (all ones except the linear kernel)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    if spec.family == "linear":
        sq = np.sum(pts * pts, axis=1)
        if sq.size and sq.max() > 1.0 + 1e-9:
            raise ValueError("linear-kernel inputs must lie in the unit ball")
        return sq
    return np.ones(pts.shape[0])


def cross_gram(spec: KernelSpec, a, b) -> np.ndarray:
    """Rectangular kernel matrix K[i, j] = k(a_i, b_j)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if spec.family == "linear":
        norms = max(np.linalg.norm(a, axis=1).max(), np.linalg.norm(b, axis=1).max())
        if norms > 1.0 + 1e-9:
            raise ValueError("linear-kernel inputs must lie in the unit ball")
        return a @ b.T
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    if spec.family == "se":
        return np.exp(-sq / (2.0 * spec.lengthscale**2))
    return _matern_of_r(np.sqrt(sq), spec.lengthscale, spec.nu)
