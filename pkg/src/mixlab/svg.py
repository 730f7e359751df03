"""Minimal SVG histogram with an overlaid normal density."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

_W, _H = 480, 320
_ML, _MR, _MT, _MB = 56, 16, 28, 40


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [float(t) for t in np.arange(start, hi + 0.5 * step, step) if lo - 1e-12 <= t <= hi + 1e-12]


def histogram_svg(counts, edges, mean: float, std: float, title: str = "") -> str:
    """Density-scaled histogram bars plus the ``N(mean, std^2)`` curve."""
    counts = np.asarray(counts, dtype=float)
    edges = np.asarray(edges, dtype=float)
    total = counts.sum()
    widths = np.diff(edges)
    dens = counts / (total * widths) if total > 0 else np.zeros_like(counts)

    x0, x1 = float(edges[0]), float(edges[-1])
    if x1 <= x0:
        x1 = x0 + 1.0
    grid = np.linspace(x0, x1, 200)
    curve = np.zeros_like(grid)
    if std > 0:
        curve = np.exp(-0.5 * ((grid - mean) / std) ** 2) / (std * math.sqrt(2 * math.pi))
    y1 = max(float(dens.max(initial=0.0)), float(curve.max(initial=0.0))) * 1.08 or 1.0

    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def sx(x):
        return _ML + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return _MT + ph - y / y1 * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{_W / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for d, a, b in zip(dens, edges[:-1], edges[1:]):
        if d <= 0:
            continue
        out.append(
            f'<rect x="{sx(a):.2f}" y="{sy(d):.2f}" width="{max(sx(b) - sx(a), 0.5):.2f}" '
            f'height="{sy(0) - sy(d):.2f}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>'
        )
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(grid, curve))
    out.append(f'<polyline points="{pts}" fill="none" stroke="#d62728" stroke-width="1.5"/>')

    # axes
    out.append(f'<line x1="{_ML}" y1="{sy(0):.2f}" x2="{_W - _MR}" y2="{sy(0):.2f}" stroke="black"/>')
    out.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{sy(0):.2f}" stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{sy(0):.2f}" x2="{sx(t):.2f}" y2="{sy(0) + 4:.2f}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{sy(0) + 16:.2f}" text-anchor="middle" font-size="10">{t:g}</text>')
    for t in _ticks(0.0, y1):
        out.append(f'<line x1="{_ML - 4}" y1="{sy(t):.2f}" x2="{_ML}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 6}" y="{sy(t) + 3:.2f}" text-anchor="end" font-size="10">{t:.3g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
