"""Minimal hand-written SVG output: annulus heat maps with overlaid curves, and line plots."""

from __future__ import annotations

from html import escape

import numpy as np

from .geometry import ScalarField

SIZE = 480
SCALE = SIZE / 4.4  # |x| <= 2.2 fits the canvas


def _xy(p):
    return SIZE / 2 + SCALE * p[..., 0], SIZE / 2 - SCALE * p[..., 1]


def _color(v, vmax):
    """Diverging blue-white-red map on [-vmax, vmax]."""
    a = 0.0 if vmax <= 0 else float(np.clip(v / vmax, -1.0, 1.0))
    if a >= 0:
        rgb = (255, int(255 * (1 - a)), int(255 * (1 - a)))
    else:
        rgb = (int(255 * (1 + a)), int(255 * (1 + a)), 255)
    return "#%02x%02x%02x" % rgb


def annulus_svg(field: ScalarField | None, curves=(), title: str = "", max_cells=(32, 128)) -> str:
    """Annulus snapshot: vorticity on polar cells plus polylines (``(N, 2)`` arrays)."""
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
    ]
    if field is not None:
        g = field.grid
        sr = max(1, int(np.ceil(g.n_r / max_cells[0])))
        st = max(1, int(np.ceil(g.n_theta / max_cells[1])))
        vals = field.values[::sr, ::st]
        r = g.r[::sr]
        th = g.theta[::st]
        vmax = float(np.max(np.abs(field.values)))
        r_edges = np.concatenate([[1.0], 0.5 * (r[1:] + r[:-1]), [2.0]])
        dth = th[1] - th[0] if th.size > 1 else 2 * np.pi
        for i in range(r.size):
            for j in range(th.size):
                a0, a1 = th[j] - dth / 2, th[j] + dth / 2
                r0, r1 = r_edges[i], r_edges[i + 1]
                pts = np.array(
                    [[r0 * np.cos(a0), r0 * np.sin(a0)], [r1 * np.cos(a0), r1 * np.sin(a0)],
                     [r1 * np.cos(a1), r1 * np.sin(a1)], [r0 * np.cos(a1), r0 * np.sin(a1)]]
                )
                x, y = _xy(pts)
                d = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x, y))
                parts.append(f'<polygon points="{d}" fill="{_color(vals[i, j], vmax)}" stroke="none"/>')
    c = SIZE / 2
    for rad in (1.0, 2.0):
        parts.append(f'<circle cx="{c}" cy="{c}" r="{SCALE * rad:.2f}" fill="none" stroke="black" stroke-width="1"/>')
    for curve in curves:
        p = np.asarray(curve, dtype=float)
        x, y = _xy(p)
        d = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline points="{d}" fill="none" stroke="black" stroke-width="1.2"/>')
    if title:
        parts.append(f'<text x="8" y="18" font-family="sans-serif" font-size="13">{escape(title)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def line_plot_svg(series: dict, xlabel: str = "", ylabel: str = "", title: str = "", log_y: bool = False) -> str:
    """Plot ``{label: (x, y)}`` curves on shared axes."""
    w, h, m = 560, 380, 50
    xs = np.concatenate([np.asarray(v[0], float) for v in series.values()])
    ys = np.concatenate([np.asarray(v[1], float) for v in series.values()])
    if log_y:
        ys = np.log10(np.maximum(ys, 1e-300))
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<rect x="{m}" y="{m // 2}" width="{w - 1.5 * m}" height="{h - 1.5 * m}" fill="none" stroke="black"/>',
    ]

    def px(x, y):
        return m + (x - x0) / (x1 - x0) * (w - 1.5 * m), m // 2 + (1 - (y - y0) / (y1 - y0)) * (h - 1.5 * m)

    for k, (label, (x, y)) in enumerate(series.items()):
        y = np.asarray(y, float)
        if log_y:
            y = np.log10(np.maximum(y, 1e-300))
        pts = " ".join("%.2f,%.2f" % px(a, b) for a, b in zip(np.asarray(x, float), y))
        col = colors[k % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        parts.append(f'<text x="{w - m - 110}" y="{m + 16 * k}" font-family="sans-serif" font-size="12" fill="{col}">{escape(str(label))}</text>')
    ylab = f"log10 {ylabel}" if log_y else ylabel
    parts += [
        f'<text x="{w / 2}" y="{h - 8}" font-family="sans-serif" font-size="12" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="12" y="{h / 2}" font-family="sans-serif" font-size="12" transform="rotate(-90 12 {h / 2})" text-anchor="middle">{escape(ylab)}</text>',
        f'<text x="{m}" y="{h - 28}" font-family="sans-serif" font-size="10">{x0:.3g}</text>',
        f'<text x="{w - m}" y="{h - 28}" font-family="sans-serif" font-size="10" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{m - 4}" y="{h - m}" font-family="sans-serif" font-size="10" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{m - 4}" y="{m // 2 + 10}" font-family="sans-serif" font-size="10" text-anchor="end">{y1:.3g}</text>',
    ]
    if title:
        parts.append(f'<text x="{m}" y="16" font-family="sans-serif" font-size="13">{escape(title)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
