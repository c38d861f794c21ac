"""Minimal self-contained SVG line plots for exponent-fit figures.

Batch runs need portable pictures without a plotting stack; this writes a
single <svg> with axes, tick labels, polylines, and an optional reference
slope line.  Log-log is the default since every fit here is a power law.
"""

from __future__ import annotations

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, count=5):
    raw = np.linspace(lo, hi, count)
    return raw


def svg_line_plot(path, series, *, title="", xlabel="", ylabel="",
                  loglog=True, width=640, height=440, reference_slope=None):
    """Write a line plot; ``series`` is a list of (label, xs, ys).

    ``reference_slope``: optional (slope, anchor_x, anchor_y) straight line in
    log-log coordinates for comparing fitted exponents against a target.
    """
    margin = 64
    inner_w, inner_h = width - 2 * margin, height - 2 * margin
    tx = (lambda v: np.log10(v)) if loglog else (lambda v: np.asarray(v, float))
    all_x = np.concatenate([tx(np.asarray(xs, float)) for _, xs, _ in series])
    all_y = np.concatenate([tx(np.asarray(ys, float)) for _, _, ys in series])
    if reference_slope is not None:
        slope, ax, ay = reference_slope
        ref_x = np.array([all_x.min(), all_x.max()])
        ref_y = tx(ay) + slope * (ref_x - tx(ax))
        all_y = np.concatenate([all_y, ref_y])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    x_pad = 0.05 * (x_hi - x_lo or 1.0)
    y_pad = 0.05 * (y_hi - y_lo or 1.0)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def px(v):
        return margin + (v - x_lo) / (x_hi - x_lo) * inner_w

    def py(v):
        return height - margin - (v - y_lo) / (y_hi - y_lo) * inner_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{margin}" y="{margin}" width="{inner_w}" height="{inner_h}" '
        'fill="none" stroke="#333"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        X = px(t)
        label = f"1e{t:.1f}" if loglog else f"{t:.3g}"
        parts.append(f'<line x1="{X:.1f}" y1="{height-margin}" x2="{X:.1f}" '
                     f'y2="{height-margin+5}" stroke="#333"/>')
        parts.append(f'<text x="{X:.1f}" y="{height-margin+18}" '
                     f'text-anchor="middle">{label}</text>')
    for t in _ticks(y_lo, y_hi):
        Y = py(t)
        label = f"1e{t:.1f}" if loglog else f"{t:.3g}"
        parts.append(f'<line x1="{margin-5}" y1="{Y:.1f}" x2="{margin}" '
                     f'y2="{Y:.1f}" stroke="#333"/>')
        parts.append(f'<text x="{margin-8}" y="{Y+4:.1f}" text-anchor="end">{label}</text>')
    parts.append(f'<text x="{width/2:.1f}" y="{height-12}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{height/2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {height/2:.1f})">{ylabel}</text>')
    if reference_slope is not None:
        slope, axv, ayv = reference_slope
        xs = np.array([x_lo + x_pad, x_hi - x_pad])
        ys = tx(ayv) + slope * (xs - tx(axv))
        parts.append(
            f'<polyline points="{px(xs[0]):.1f},{py(ys[0]):.1f} {px(xs[1]):.1f},{py(ys[1]):.1f}" '
            'fill="none" stroke="#999" stroke-dasharray="6,4"/>'
        )
        parts.append(f'<text x="{px(xs[1])-4:.1f}" y="{py(ys[1])-6:.1f}" text-anchor="end" '
                     f'fill="#777">slope {slope:+.3g}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        X = px(tx(np.asarray(xs, float)))
        Y = py(tx(np.asarray(ys, float)))
        pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(X, Y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(X, Y):
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{width-margin-6}" y="{margin+16+14*i}" text-anchor="end" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
