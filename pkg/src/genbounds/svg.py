"""Deterministic standalone SVG line charts.

Pure string assembly from the input data: no timestamps, library version
strings, or float formatting that could vary between runs, so identical
inputs yield byte-identical files.  Missing values (None) break the series
into visible gaps.
"""

from __future__ import annotations

import math

__all__ = ["render_line_chart"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

WIDTH, HEIGHT = 840, 560
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 30, 30, 55


def _nice_step(span: float, target: int = 6) -> float:
    if span <= 0:
        return 1.0
    raw = span / target
    power = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * power:
            return mult * power
    return 10.0 * power


def _ticks(lo: float, hi: float) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_line_chart(series, x_label: str, y_label: str) -> str:
    """Render named (x, y) series to an SVG document string.

    ``series`` is an ordered list of (name, points) with points a list of
    (x, y) pairs; y may be None to break the line at that x.
    """
    if not series or all(not pts for _, pts in series):
        raise ValueError("nothing to plot")
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts if y is not None and math.isfinite(y)]
    if not ys:
        raise ValueError("no finite values to plot")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    inner_w = WIDTH - MARGIN_L - MARGIN_R
    inner_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * inner_w

    def sy(y: float) -> float:
        return MARGIN_T + (y_hi - y) / (y_hi - y_lo) * inner_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    axis_style = 'stroke="#333333" stroke-width="1"'
    out.append(f'<line x1="{MARGIN_L}" y1="{HEIGHT - MARGIN_B}" '
               f'x2="{WIDTH - MARGIN_R}" y2="{HEIGHT - MARGIN_B}" {axis_style}/>')
    out.append(f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" '
               f'x2="{MARGIN_L}" y2="{HEIGHT - MARGIN_B}" {axis_style}/>')

    text = 'font-family="sans-serif" font-size="12" fill="#333333"'
    for t in _ticks(x_lo, x_hi):
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{HEIGHT - MARGIN_B}" '
                   f'x2="{px:.2f}" y2="{HEIGHT - MARGIN_B + 5}" {axis_style}/>')
        out.append(f'<text x="{px:.2f}" y="{HEIGHT - MARGIN_B + 20}" '
                   f'text-anchor="middle" {text}>{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        py = sy(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{py:.2f}" '
                   f'x2="{MARGIN_L}" y2="{py:.2f}" {axis_style}/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{py + 4:.2f}" '
                   f'text-anchor="end" {text}>{_fmt(t)}</text>')

    out.append(f'<text x="{MARGIN_L + inner_w / 2:.2f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle" {text}>{x_label}</text>')
    out.append(f'<text x="18" y="{MARGIN_T + inner_h / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN_T + inner_h / 2:.2f})" {text}>'
               f'{y_label}</text>')

    for k, (name, pts) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        path = []
        pen_down = False
        for x, y in pts:
            if y is None or not math.isfinite(y):
                pen_down = False
                continue
            cmd = "L" if pen_down else "M"
            path.append(f"{cmd}{sx(x):.2f},{sy(y):.2f}")
            pen_down = True
        if path:
            out.append(f'<path d="{" ".join(path)}" fill="none" stroke="{color}" '
                       f'stroke-width="1.8"/>')
        ly = MARGIN_T + 16 + 18 * k
        lx = WIDTH - MARGIN_R - 170
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.8"/>')
        out.append(f'<text x="{lx + 30}" y="{ly}" {text}>{name}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
