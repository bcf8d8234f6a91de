"""Minimal hand-written SVG line charts (no plotting dependency)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2")

WIDTH, PANEL_H = 640, 260
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 30, 40


def _finite(values, log):
    out = []
    for v in values:
        if v is None or not math.isfinite(v) or (log and v <= 0):
            out.append(None)
        else:
            out.append(math.log10(v) if log else v)
    return out


def _range(vals):
    vals = [v for v in vals if v is not None]
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def _fmt(v, log):
    return f"1e{v:.0f}" if log else f"{v:.3g}"


class Panel:
    """One chart: several named series sharing x and y axes."""

    def __init__(self, title, xlabel, ylabel, log_y=True):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.log_y = log_y
        self.series = []
        self.vlines = []

    def add(self, label, xs, ys):
        self.series.append((label, list(xs), list(ys)))
        return self

    def add_vlines(self, xs):
        self.vlines.extend(xs)
        return self

    def render(self, top):
        x0, x1 = MARGIN_L, WIDTH - MARGIN_R
        y0, y1 = top + MARGIN_T, top + PANEL_H - MARGIN_B
        xs_all = [x for _, xs, _ in self.series for x in xs] + list(self.vlines)
        ys_t = [_finite(ys, self.log_y) for _, _, ys in self.series]
        xlo, xhi = _range(xs_all)
        ylo, yhi = _range([v for ys in ys_t for v in ys])
        if self.log_y:
            ylo, yhi = math.floor(ylo), math.ceil(yhi)
            if yhi == ylo:
                yhi = ylo + 1

        def px(x):
            return x0 + (x - xlo) / (xhi - xlo) * (x1 - x0)

        def py(y):
            return y1 - (y - ylo) / (yhi - ylo) * (y1 - y0)

        parts = [
            f'<text x="{WIDTH / 2:.1f}" y="{top + 18}" text-anchor="middle" '
            f'font-size="14">{escape(self.title)}</text>',
            f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" '
            f'fill="none" stroke="#444"/>',
        ]
        if self.log_y:
            ticks = range(int(ylo), int(yhi) + 1)
        else:
            ticks = [ylo + i * (yhi - ylo) / 4 for i in range(5)]
        for t in ticks:
            parts.append(f'<line x1="{x0}" x2="{x1}" y1="{py(t):.1f}" y2="{py(t):.1f}" '
                         f'stroke="#ddd"/>')
            parts.append(f'<text x="{x0 - 6}" y="{py(t) + 4:.1f}" text-anchor="end" '
                         f'font-size="10">{_fmt(t, self.log_y)}</text>')
        for t in (xlo, (xlo + xhi) / 2, xhi):
            parts.append(f'<text x="{px(t):.1f}" y="{y1 + 14}" text-anchor="middle" '
                         f'font-size="10">{t:.4g}</text>')
        parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{y1 + 30}" text-anchor="middle" '
                     f'font-size="11">{escape(self.xlabel)}</text>')
        parts.append(f'<text x="14" y="{(y0 + y1) / 2:.1f}" font-size="11" text-anchor="middle" '
                     f'transform="rotate(-90 14 {(y0 + y1) / 2:.1f})">{escape(self.ylabel)}</text>')
        for v in self.vlines:
            parts.append(f'<line x1="{px(v):.1f}" x2="{px(v):.1f}" y1="{y0}" y2="{y1}" '
                         f'stroke="#2ca02c" stroke-dasharray="4 3"/>')
        for i, ((label, xs, _), ys) in enumerate(zip(self.series, ys_t)):
            color = PALETTE[i % len(PALETTE)]
            # break the polyline at missing points
            runs, cur = [], []
            for x, y in zip(xs, ys):
                if y is None:
                    if cur:
                        runs.append(cur)
                    cur = []
                else:
                    cur.append(f"{px(x):.1f},{py(y):.1f}")
            if cur:
                runs.append(cur)
            for run in runs:
                if len(run) == 1:
                    cx, cy = run[0].split(",")
                    parts.append(f'<circle cx="{cx}" cy="{cy}" r="2" fill="{color}"/>')
                else:
                    parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                                 f'points="{" ".join(run)}"/>')
            if len(self.series) > 1:
                ly = y0 + 14 + 14 * i
                parts.append(f'<line x1="{x1 - 120}" x2="{x1 - 100}" y1="{ly - 4}" y2="{ly - 4}" '
                             f'stroke="{color}" stroke-width="2"/>')
                parts.append(f'<text x="{x1 - 96}" y="{ly}" font-size="10">{escape(label)}</text>')
        return parts


def render(panels):
    """SVG document with the panels stacked vertically."""
    height = PANEL_H * len(panels)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
             f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">',
             f'<rect width="{WIDTH}" height="{height}" fill="white"/>']
    for i, panel in enumerate(panels):
        parts.extend(panel.render(i * PANEL_H))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
