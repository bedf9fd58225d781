"""Minimal SVG line and heatmap plots for sweep output."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_W, _H, _PAD = 480, 360, 50
_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def _fmt(v):
    return f"{v:.3g}"


def _frame(title, xlabel, ylabel, lo_x, hi_x, lo_y, hi_y):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" font-family="sans-serif" font-size="11">',
        f'<rect x="{_PAD}" y="{_PAD // 2}" width="{_W - 1.5 * _PAD}" height="{_H - 1.5 * _PAD}" fill="none" stroke="black"/>',
        f'<text x="{_W / 2}" y="14" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{_W / 2}" y="{_H - 6}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="12" y="{_H / 2}" text-anchor="middle" transform="rotate(-90 12 {_H / 2})">{escape(ylabel)}</text>',
        f'<text x="{_PAD}" y="{_H - _PAD + 14}" text-anchor="middle">{_fmt(lo_x)}</text>',
        f'<text x="{_W - _PAD / 2}" y="{_H - _PAD + 14}" text-anchor="middle">{_fmt(hi_x)}</text>',
        f'<text x="{_PAD - 4}" y="{_H - _PAD}" text-anchor="end">{_fmt(lo_y)}</text>',
        f'<text x="{_PAD - 4}" y="{_PAD // 2 + 8}" text-anchor="end">{_fmt(hi_y)}</text>',
    ]
    return parts


def _span(values):
    lo, hi = float(np.nanmin(values)), float(np.nanmax(values))
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def line_plot(x, series: dict, title="", xlabel="", ylabel="") -> str:
    """Render named series against a common abscissa.

    Args:
        x: Abscissa values.
        series: Mapping from label to ordinate values.
        title: Plot title.
        xlabel: Abscissa label.
        ylabel: Ordinate label.

    Returns:
        SVG document text.
    """
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    lo_x, hi_x = _span(x)
    lo_y, hi_y = _span(np.concatenate(list(ys.values())))
    x0, x1 = _PAD, _W - _PAD / 2
    y0, y1 = _H - _PAD, _PAD / 2
    parts = _frame(title, xlabel, ylabel, lo_x, hi_x, lo_y, hi_y)
    for i, (label, y) in enumerate(ys.items()):
        px = x0 + (x - lo_x) / (hi_x - lo_x) * (x1 - x0)
        py = y0 + (y - lo_y) / (hi_y - lo_y) * (y1 - y0)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py) if np.isfinite(b))
        color = _COLORS[i % len(_COLORS)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{x1 - 4}" y="{y1 + 14 * (i + 1)}" text-anchor="end" fill="{color}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def heatmap(x, y, z, title="", xlabel="", ylabel="") -> str:
    """Render a matrix as a grayscale heatmap, ``z[i, j]`` at ``(x[j], y[i])``.

    Args:
        x: Column coordinates.
        y: Row coordinates.
        z: Values, shape ``(len(y), len(x))``.
        title: Plot title.
        xlabel: Abscissa label.
        ylabel: Ordinate label.

    Returns:
        SVG document text.
    """
    z = np.asarray(z, dtype=float)
    lo, hi = _span(z)
    x0, x1 = _PAD, _W - _PAD / 2
    y0, y1 = _H - _PAD, _PAD / 2
    ny, nx = z.shape
    cw, ch = (x1 - x0) / nx, (y0 - y1) / ny
    parts = _frame(title, xlabel, ylabel, x[0], x[-1], y[0], y[-1])
    for i in range(ny):
        for j in range(nx):
            g = int(round(255 * (1.0 - (z[i, j] - lo) / (hi - lo))))
            parts.append(
                f'<rect x="{x0 + j * cw:.2f}" y="{y0 - (i + 1) * ch:.2f}" width="{cw + 0.05:.2f}" '
                f'height="{ch + 0.05:.2f}" fill="rgb({g},{g},{g})"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
