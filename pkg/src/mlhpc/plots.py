"""Minimal SVG rendering: log-log scatter panels and stacked bars.

Presentation only; the numbers live in the CSV outputs.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

W, H = 480, 400
ML, MR, MT, MB = 70, 20, 40, 55
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
BAR_COLORS = {"staging": "#2ca02c", "train": "#1f77b4", "eval": "#ff7f0e", "extra": "#bbbbbb"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _decades(lo: float, hi: float):
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if a == b:
        b += 1
    return a, b


class LogAxes:
    def __init__(self, xs, ys):
        self.xd = _decades(min(xs), max(xs))
        self.yd = _decades(min(ys), max(ys))

    def px(self, x: float) -> float:
        a, b = self.xd
        return ML + (math.log10(x) - a) / (b - a) * (W - ML - MR)

    def py(self, y: float) -> float:
        a, b = self.yd
        return H - MB - (math.log10(y) - a) / (b - a) * (H - MT - MB)

    def in_range(self, x, y) -> bool:
        return (10 ** self.xd[0] <= x <= 10 ** self.xd[1]) and (10 ** self.yd[0] <= y <= 10 ** self.yd[1])


def _frame(ax: LogAxes, title: str, xlabel: str, ylabel: str) -> list:
    out = [f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" fill="none" stroke="#000"/>']
    for d in range(ax.xd[0], ax.xd[1] + 1):
        x = _fmt(ax.px(10.0 ** d))
        out.append(f'<line x1="{x}" y1="{H - MB}" x2="{x}" y2="{H - MB + 5}" stroke="#000"/>')
        out.append(f'<text x="{x}" y="{H - MB + 18}" font-size="11" text-anchor="middle">1e{d}</text>')
    for d in range(ax.yd[0], ax.yd[1] + 1):
        y = _fmt(ax.py(10.0 ** d))
        out.append(f'<line x1="{ML - 5}" y1="{y}" x2="{ML}" y2="{y}" stroke="#000"/>')
        out.append(f'<text x="{ML - 8}" y="{y}" font-size="11" text-anchor="end" dy="4">1e{d}</text>')
    out.append(f'<text x="{W / 2:.1f}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<text x="{(ML + W - MR) / 2:.1f}" y="{H - 12}" font-size="12" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    cy = (MT + H - MB) / 2
    out.append(f'<text x="16" y="{cy:.1f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {cy:.1f})">{escape(ylabel)}</text>')
    return out


def _doc(body: list) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">\n' + "\n".join(body) + "\n</svg>\n")


def loglog_scatter(points, title, xlabel, ylabel, lines=(), ellipses=()) -> str:
    """points: (x, y, label); lines: ((x0, y0), (x1, y1), label) in data
    coordinates; ellipses: (mean, components, radii) in log10 coordinates."""
    pts = [(x, y, lab) for x, y, lab in points if x > 0 and y > 0]
    if not pts:
        return _doc([f'<text x="10" y="20">{escape(title)}: no data</text>'])
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    ax = LogAxes(xs, ys)
    body = _frame(ax, title, xlabel, ylabel)
    body.append(f'<clipPath id="plot"><rect x="{ML}" y="{MT}" width="{W - ML - MR}" '
                f'height="{H - MT - MB}"/></clipPath>')
    for (x0, y0), (x1, y1), lab in lines:
        if min(x0, y0, x1, y1) <= 0:
            continue
        body.append(f'<line x1="{_fmt(ax.px(x0))}" y1="{_fmt(ax.py(y0))}" x2="{_fmt(ax.px(x1))}" '
                    f'y2="{_fmt(ax.py(y1))}" stroke="#999" stroke-dasharray="4 3" clip-path="url(#plot)">'
                    f'<title>{escape(str(lab))}</title></line>')
    for (mx, my), comps, radii in ellipses:
        (ux, uy), _ = comps
        # convert one log-decade into pixels along each axis
        sx = ax.px(10 ** (mx + 1)) - ax.px(10 ** mx)
        sy = ax.py(10 ** my) - ax.py(10 ** (my + 1))
        angle = -math.degrees(math.atan2(uy * sy, ux * sx))
        cx, cy = ax.px(10 ** mx), ax.py(10 ** my)
        body.append(f'<ellipse cx="{_fmt(cx)}" cy="{_fmt(cy)}" rx="{_fmt(max(radii[0] * sx, 0.5))}" '
                    f'ry="{_fmt(max(radii[1] * sy, 0.5))}" transform="rotate({angle:.2f} {_fmt(cx)} {_fmt(cy)})" '
                    f'fill="none" stroke="#444"/>')
    labels = sorted({p[2] for p in pts})
    color = {lab: PALETTE[i % len(PALETTE)] for i, lab in enumerate(labels)}
    for x, y, lab in pts:
        body.append(f'<circle cx="{_fmt(ax.px(x))}" cy="{_fmt(ax.py(y))}" r="4" fill="{color[lab]}">'
                    f'<title>{escape(lab)}</title></circle>')
    for i, lab in enumerate(labels):
        y = MT + 14 + 14 * i
        body.append(f'<circle cx="{ML + 10}" cy="{y - 4}" r="4" fill="{color[lab]}"/>')
        body.append(f'<text x="{ML + 18}" y="{y}" font-size="10">{escape(lab)}</text>')
    return _doc(body)


def iso_lines(ax_points, make_line, levels):
    """Segments of ``make_line(level, x) -> y`` across the x-range of the points."""
    xs = [p[0] for p in ax_points if p[0] > 0]
    if not xs:
        return []
    a, b = _decades(min(xs), max(xs))
    x0, x1 = 10.0 ** a, 10.0 ** b
    return [((x0, make_line(lv, x0)), (x1, make_line(lv, x1)), lv) for lv in levels]


def decade_levels(values, pad: int = 1):
    vals = [v for v in values if v > 0]
    if not vals:
        return []
    a = math.floor(math.log10(min(vals))) - pad
    b = math.ceil(math.log10(max(vals))) + pad
    return [10.0 ** d for d in range(a, b + 1)]


def stacked_bars(rows, title: str) -> str:
    """rows: (label, {category: fraction}) drawn as horizontal bars in [0, 1]."""
    height = MT + 30 * max(len(rows), 1) + MB
    left, right = 200, W - MR
    body = [f'<text x="{W / 2:.1f}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>']
    for i, (label, parts) in enumerate(rows):
        y = MT + 30 * i
        x = float(left)
        for cat in ("staging", "train", "eval", "extra"):
            w = parts.get(cat, 0.0) * (right - left)
            if w > 0:
                body.append(f'<rect x="{_fmt(x)}" y="{y}" width="{_fmt(w)}" height="22" '
                            f'fill="{BAR_COLORS[cat]}"><title>{cat} {parts[cat]:.3f}</title></rect>')
            x += w
        body.append(f'<text x="{left - 6}" y="{y + 15}" font-size="11" text-anchor="end">{escape(label)}</text>')
    ly = height - 20
    for j, cat in enumerate(("staging", "train", "eval", "extra")):
        lx = left + 70 * j
        body.append(f'<rect x="{lx}" y="{ly - 10}" width="10" height="10" fill="{BAR_COLORS[cat]}"/>')
        body.append(f'<text x="{lx + 14}" y="{ly}" font-size="11">{cat}</text>')
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" '
            f'viewBox="0 0 {W} {height}">\n' + "\n".join(body) + "\n</svg>\n")
