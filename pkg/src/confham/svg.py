"""Minimal static SVG emitter: polylines with axes, heatmaps, level diagrams.

Coordinates are written with six significant digits so output files are
byte-stable across runs.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT, MARGIN = 480, 400, 50


def _f(v: float) -> str:
    return format(float(v), ".6g")


def _frame(title: str, body: list[str], xlabel: str = "", ylabel: str = "") -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    if xlabel:
        head.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    if ylabel:
        head.append(
            f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>'
        )
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _scale(lo: float, hi: float, a: float, b: float):
    if not hi > lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _axes(x_lo, x_hi, y_lo, y_hi) -> list[str]:
    box = (
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" height="{HEIGHT - 2 * MARGIN}" '
        'fill="none" stroke="black"/>'
    )
    ticks = [
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 15}" font-size="10">{_f(x_lo)}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 15}" font-size="10" text-anchor="end">{_f(x_hi)}</text>',
        f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" font-size="10" text-anchor="end">{_f(y_lo)}</text>',
        f'<text x="{MARGIN - 4}" y="{MARGIN + 8}" font-size="10" text-anchor="end">{_f(y_hi)}</text>',
    ]
    return [box, *ticks]


def polyline(xs: Sequence[float], ys: Sequence[float], title: str = "", xlabel: str = "x_1",
             ylabel: str = "x_2", max_points: int = 4000) -> str:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size > max_points:
        idx = np.linspace(0, xs.size - 1, max_points).round().astype(int)
        xs, ys = xs[idx], ys[idx]
    lo_x, hi_x = float(xs.min()), float(xs.max())
    lo_y, hi_y = float(ys.min()), float(ys.max())
    sx = _scale(lo_x, hi_x, MARGIN, WIDTH - MARGIN)
    sy = _scale(lo_y, hi_y, HEIGHT - MARGIN, MARGIN)
    pts = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(xs, ys))
    body = _axes(lo_x, hi_x, lo_y, hi_y)
    body.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1" points="{pts}"/>')
    return _frame(title, body, xlabel, ylabel)


def _color(v: float) -> str:
    if not math.isfinite(v):
        return "#bbbbbb"
    v = min(max(v, 0.0), 1.0)
    r = int(round(255 * (1 - v)))
    g = int(round(80 + 120 * v))
    b = int(round(255 * v))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(k_grid: Sequence[float], s_grid: Sequence[float], values: np.ndarray, title: str = "") -> str:
    """Cells ``values[i, j]`` in [0, 1] for ``(k_grid[i], s_grid[j])``; NaN is grey."""
    values = np.asarray(values, dtype=float)
    nk, ns = len(k_grid), len(s_grid)
    cw = (WIDTH - 2 * MARGIN) / nk
    ch = (HEIGHT - 2 * MARGIN) / ns
    body = []
    for i in range(nk):
        for j in range(ns):
            x = MARGIN + i * cw
            y = HEIGHT - MARGIN - (j + 1) * ch
            v = values[i, j]
            body.append(
                f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(cw)}" height="{_f(ch)}" fill="{_color(v)}" stroke="white"/>'
            )
            label = "nan" if not math.isfinite(v) else f"{v:.2f}"
            body.append(
                f'<text x="{_f(x + cw / 2)}" y="{_f(y + ch / 2 + 4)}" font-size="10" text-anchor="middle">{label}</text>'
            )
    for i, k in enumerate(k_grid):
        body.append(f'<text x="{_f(MARGIN + (i + 0.5) * cw)}" y="{HEIGHT - MARGIN + 15}" font-size="10" '
                    f'text-anchor="middle">{_f(k)}</text>')
    for j, s in enumerate(s_grid):
        body.append(f'<text x="{MARGIN - 4}" y="{_f(HEIGHT - MARGIN - (j + 0.5) * ch + 4)}" font-size="10" '
                    f'text-anchor="end">{_f(s)}</text>')
    return _frame(title, body, "k", "s")


def level_diagram(eigenvalues: Sequence[float], clusters: Sequence[tuple[float, int]], title: str = "") -> str:
    """Horizontal bars per cluster; bar length grows with multiplicity."""
    vals = np.asarray(eigenvalues, dtype=float)
    lo, hi = float(vals.min()), float(vals.max())
    sy = _scale(lo, hi, HEIGHT - MARGIN, MARGIN)
    body = _axes(0, max((m for _, m in clusters), default=1), lo, hi)
    span = WIDTH - 2 * MARGIN
    top = max((m for _, m in clusters), default=1)
    for value, mult in clusters:
        y = sy(value)
        body.append(
            f'<line x1="{MARGIN + 10}" y1="{_f(y)}" x2="{_f(MARGIN + 10 + (span - 20) * mult / top)}" y2="{_f(y)}" '
            'stroke="darkred" stroke-width="2"/>'
        )
        body.append(f'<text x="{WIDTH - MARGIN + 4}" y="{_f(y + 4)}" font-size="10">x{mult}</text>')
    return _frame(title, body, "multiplicity", "E")
