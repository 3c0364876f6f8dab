"""Dependency-free SVG rendering of line charts and angle heatmaps.

Plots are a viewing convenience; the CSV datasets remain the contract.
"""

from __future__ import annotations

import math

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _ticks(lo, hi, n=6):
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s for s in (mag, 2 * mag, 5 * mag, 10 * mag) if s >= raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(v)
        v += step
    return out


def _fmt_tick(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:g}"


def line_chart(series, path, title="", xlabel="", ylabel="", log_y=False):
    """Write a multi-series line chart.

    ``series`` maps label -> (x values, y values).  Non-finite y values
    break the polyline.  ``log_y`` plots log10 of positive values.
    """
    xs_all, ys_all = [], []
    for xs, ys in series.values():
        for x, y in zip(xs, ys):
            if math.isfinite(x):
                xs_all.append(x)
            if math.isfinite(y) and (not log_y or y > 0):
                ys_all.append(math.log10(y) if log_y else y)
    if not xs_all or not ys_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return _MT + ph - (y - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2}" y="22" text-anchor="middle" font-size="15">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{px(tx):.1f}" y1="{_MT+ph}" x2="{px(tx):.1f}" y2="{_MT+ph+4}" stroke="#333"/>')
        parts.append(
            f'<text x="{px(tx):.1f}" y="{_MT+ph+18}" text-anchor="middle" font-size="11">{_fmt_tick(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        label = _fmt_tick(10**ty) if log_y else _fmt_tick(ty)
        parts.append(f'<line x1="{_ML-4}" y1="{py(ty):.1f}" x2="{_ML}" y2="{py(ty):.1f}" stroke="#333"/>')
        parts.append(
            f'<text x="{_ML-8}" y="{py(ty)+4:.1f}" text-anchor="end" font-size="11">{label}</text>'
        )
    parts.append(f'<text x="{_W/2}" y="{_H-10}" text-anchor="middle" font-size="13">{xlabel}</text>')
    parts.append(
        f'<text x="16" y="{_MT+ph/2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {_MT+ph/2})">{ylabel}</text>'
    )
    for i, (label, (xs, ys)) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        segs, seg = [], []
        for x, y in zip(xs, ys):
            yy = math.log10(y) if (log_y and y > 0) else y
            if math.isfinite(x) and math.isfinite(yy) and (not log_y or y > 0):
                seg.append(f"{px(x):.1f},{py(yy):.1f}")
            elif seg:
                segs.append(seg)
                seg = []
        if seg:
            segs.append(seg)
        for seg in segs:
            parts.append(f'<polyline points="{" ".join(seg)}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = _MT + 16 + 16 * i
        parts.append(f'<line x1="{_ML+10}" y1="{ly}" x2="{_ML+34}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_ML+40}" y="{ly+4}" font-size="12">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def _heat_color(t):
    # dark blue -> cyan -> yellow ramp
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:
        u = t / 0.5
        r, g, b = 0, int(60 + 180 * u), int(120 + 120 * u)
    else:
        u = (t - 0.5) / 0.5
        r, g, b = int(255 * u), int(240 - 20 * u), int(240 - 200 * u)
    return f"rgb({r},{g},{b})"


def heatmap(x_values, y_values, grid, path, title="", xlabel="", ylabel=""):
    """Write a heatmap of ``grid[i][j]`` over y_values[i] x x_values[j]."""
    ny, nx = len(y_values), len(x_values)
    finite = [v for row in grid for v in row if math.isfinite(v)]
    lo = min(finite) if finite else 0.0
    hi = max(finite) if finite else 1.0
    span = hi - lo if hi > lo else 1.0
    pw, ph = _W - _ML - _MR, _H - _MT - _MB
    cw, ch = pw / nx, ph / ny
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2}" y="22" text-anchor="middle" font-size="15">{title}</text>',
    ]
    for i in range(ny):
        for j in range(nx):
            v = grid[i][j]
            t = (v - lo) / span if math.isfinite(v) else 1.0
            parts.append(
                f'<rect x="{_ML+j*cw:.2f}" y="{_MT+(ny-1-i)*ch:.2f}" width="{cw+0.5:.2f}" '
                f'height="{ch+0.5:.2f}" fill="{_heat_color(t)}"/>'
            )
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')
    parts.append(f'<text x="{_W/2}" y="{_H-10}" text-anchor="middle" font-size="13">{xlabel}</text>')
    parts.append(
        f'<text x="16" y="{_MT+ph/2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {_MT+ph/2})">{ylabel}</text>'
    )
    parts.append(
        f'<text x="{_W-_MR-160}" y="{_MT-8}" font-size="11">range [{_fmt_tick(lo)}, {_fmt_tick(hi)}]</text>'
    )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
