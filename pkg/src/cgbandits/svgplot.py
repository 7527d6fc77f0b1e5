"""Dependency-free SVG regret plots.

Renders mean cumulative regret per series with a translucent one-standard-
deviation band, in the self-contained text format so diffs and checksums
stay meaningful.  Output is a pure function of the input series.
"""

from __future__ import annotations

import numpy as np

__all__ = ["render_regret_svg"]

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 50
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def _fmt_tick(v: float) -> str:
    return f"{v:g}"


def render_regret_svg(series: list[tuple[str, np.ndarray, np.ndarray, np.ndarray]]) -> str:
    """series: (label, t, mean, std) tuples; returns the SVG document text."""
    if not series:
        raise ValueError("no series to plot")
    x_max = max(float(t[-1]) for _, t, _, _ in series)
    x_min = min(float(t[0]) for _, t, _, _ in series)
    y_max = max(float(np.max(m + s)) for _, _, m, s in series)
    y_min = min(0.0, min(float(np.min(m - s)) for _, _, m, s in series))
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0

    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def sx(x):
        return _ML + pw * (x - x_min) / (x_max - x_min)

    def sy(y):
        return _MT + ph * (1.0 - (y - y_min) / (y_max - y_min))

    def pts(t, v):
        return " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(t, v))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_ML}" y1="{_MT + ph}" x2="{_ML + pw}" y2="{_MT + ph}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ph}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_min + frac * (x_max - x_min)
        yv = y_min + frac * (y_max - y_min)
        out.append(
            f'<text x="{sx(xv):.2f}" y="{_MT + ph + 18}" font-size="11" '
            f'text-anchor="middle">{_fmt_tick(xv)}</text>'
        )
        out.append(
            f'<text x="{_ML - 6}" y="{sy(yv):.2f}" font-size="11" '
            f'text-anchor="end" dominant-baseline="middle">{_fmt_tick(yv)}</text>'
        )
    out.append(
        f'<text x="{_ML + pw / 2:.2f}" y="{_H - 12}" font-size="12" '
        f'text-anchor="middle">t</text>'
    )
    out.append(
        f'<text x="16" y="{_MT + ph / 2:.2f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {_MT + ph / 2:.2f})">cumulative regret</text>'
    )

    for i, (label, t, mean, std) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        if np.any(std > 0):
            upper = pts(t, mean + std)
            lower = " ".join(
                f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(t[::-1], (mean - std)[::-1])
            )
            out.append(
                f'<polygon points="{upper} {lower}" fill="{color}" opacity="0.15" stroke="none"/>'
            )
        out.append(
            f'<polyline points="{pts(t, mean)}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = _MT + 16 + 16 * i
        out.append(f'<line x1="{_ML + 10}" y1="{ly}" x2="{_ML + 34}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_ML + 40}" y="{ly + 4}" font-size="12">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
