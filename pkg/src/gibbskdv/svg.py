"""Minimal native SVG line plots.

Presentation-only output for the command-line surface: fixed-size line
charts with axes, tick labels, and an optional legend.  No external
plotting dependency; every figure is a single self-contained SVG string.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["line_plot", "write_line_plot"]

_WIDTH, _HEIGHT = 640, 400
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 28, 44
_COLORS = ("#1f6fb2", "#c44e52", "#55a868", "#8172b2", "#ccb974", "#64b5cd")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return [0.0]
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks or [lo]


def _fmt(v: float) -> str:
    if v == 0.0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.2e}"
    return f"{v:.4g}"


def line_plot(series: list[tuple[np.ndarray, np.ndarray, str]],
              title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Render (x, y, label) series to an SVG document string."""
    if not series:
        raise ValueError("need at least one series")
    xs = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    finite = np.isfinite(xs) & np.isfinite(ys)
    if not finite.any():
        raise ValueError("no finite data to plot")
    x_lo, x_hi = float(xs[finite].min()), float(xs[finite].max())
    y_lo, y_hi = float(ys[finite].min()), float(ys[finite].max())
    if x_hi <= x_lo:
        x_lo, x_hi = x_lo - 0.5, x_lo + 0.5
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 0.5, y_lo + 0.5
    pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#444" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_WIDTH / 2:.1f}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>')

    for t in _nice_ticks(x_lo, x_hi):
        if not x_lo <= t <= x_hi:
            continue
        x = px(t)
        parts.append(f'<line x1="{x:.2f}" y1="{_MARGIN_T + plot_h}" '
                     f'x2="{x:.2f}" y2="{_MARGIN_T + plot_h + 5}" stroke="#444"/>')
        parts.append(f'<text x="{x:.2f}" y="{_MARGIN_T + plot_h + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{_fmt(t)}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        if not y_lo <= t <= y_hi:
            continue
        y = py(t)
        parts.append(f'<line x1="{_MARGIN_L - 5}" y1="{y:.2f}" '
                     f'x2="{_MARGIN_L}" y2="{y:.2f}" stroke="#444"/>')
        parts.append(f'<text x="{_MARGIN_L - 8}" y="{y + 4:.2f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{_fmt(t)}</text>')
    if xlabel:
        parts.append(f'<text x="{_MARGIN_L + plot_w / 2:.1f}" '
                     f'y="{_HEIGHT - 8}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">{xlabel}</text>')
    if ylabel:
        cy = _MARGIN_T + plot_h / 2
        parts.append(f'<text x="14" y="{cy:.1f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12" '
                     f'transform="rotate(-90 14 {cy:.1f})">{ylabel}</text>')

    for idx, (x, y, label) in enumerate(series):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        color = _COLORS[idx % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y)
                       if math.isfinite(a) and math.isfinite(b))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        if label:
            ly = _MARGIN_T + 16 + 16 * idx
            lx = _MARGIN_L + plot_w - 130
            parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" '
                         f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
            parts.append(f'<text x="{lx + 28}" y="{ly}" '
                         f'font-family="sans-serif" font-size="11">{label}</text>')

    parts.append("</svg>")
    return "\n".join(parts)


def write_line_plot(path, series, title: str = "", xlabel: str = "",
                    ylabel: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(line_plot(series, title=title, xlabel=xlabel, ylabel=ylabel))
