"""Static SVG plots.

The markup is assembled by hand so plots need nothing beyond the
standard library and are stable under diff.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

W, H = 640, 400
ML, MR, MT, MB = 70, 20, 30, 50


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class _Axes:
    def __init__(self, xlim, ylim, title, xlabel, ylabel):
        self.x0, self.x1 = _widen(*xlim)
        self.y0, self.y1 = _widen(*ylim)
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
            f'<g class="axes" stroke="black" fill="none">'
            f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}"/>'
            f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}"/></g>',
            f'<text x="{(ML + W - MR) / 2}" y="{H - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
            f'<text x="16" y="{(MT + H - MB) / 2}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 16 {(MT + H - MB) / 2})">{escape(ylabel)}</text>',
        ]
        self._ticks()

    def X(self, x):
        return ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)

    def Y(self, y):
        return H - MB - (y - self.y0) / (self.y1 - self.y0) * (H - MT - MB)

    def _ticks(self):
        g = ['<g class="ticks" font-size="10">']
        for i in range(5):
            x = self.x0 + i * (self.x1 - self.x0) / 4
            y = self.y0 + i * (self.y1 - self.y0) / 4
            g.append(f'<text x="{self.X(x):.2f}" y="{H - MB + 14}" text-anchor="middle">{_fmt(x)}</text>')
            g.append(f'<text x="{ML - 4}" y="{self.Y(y) + 3:.2f}" text-anchor="end">{_fmt(y)}</text>')
        g.append("</g>")
        self.parts.extend(g)

    def polyline(self, xs, ys, cls="curve", color="steelblue"):
        if len(xs) == 0:
            return
        pts = " ".join(f"{self.X(x):.2f},{self.Y(y):.2f}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline class="{cls}" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')

    def markers(self, xs, ys, cls="marker", color="crimson", r=3):
        g = [f'<g class="{cls}" fill="{color}">']
        g += [f'<circle cx="{self.X(x):.2f}" cy="{self.Y(y):.2f}" r="{r}"/>' for x, y in zip(xs, ys)]
        g.append("</g>")
        self.parts.extend(g)

    def vlines(self, xs, cls, color, y0=None, y1=None):
        a = self.Y(self.y0 if y0 is None else y0)
        b = self.Y(self.y1 if y1 is None else y1)
        g = [f'<g class="{cls}" stroke="{color}">']
        g += [f'<line x1="{self.X(x):.2f}" y1="{a:.2f}" x2="{self.X(x):.2f}" y2="{b:.2f}"/>' for x in xs]
        g.append("</g>")
        self.parts.extend(g)

    def svg(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _widen(lo, hi):
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, 1.0
    if hi <= lo:
        pad = abs(lo) * 0.05 or 0.5
        return lo - pad, hi + pad
    return lo, hi


def _lim(vals, default=(0.0, 1.0)):
    vals = [float(v) for v in vals]
    return (min(vals), max(vals)) if vals else default


def profile_svg(rho, u, zeros=(), title="radial profile") -> str:
    """u(ρ) with a marker at every zero."""
    rho, u = list(rho), list(u)
    ax = _Axes(_lim(rho), _lim(u + [0.0]), title, "rho", "u")
    if rho:
        ax.polyline([rho[0], rho[-1]], [0.0, 0.0], cls="baseline", color="gray")
    ax.polyline(rho, u)
    ax.markers(list(zeros), [0.0] * len(zeros), cls="zeros")
    return ax.svg()


def spectrum_svg(values, clusters=(), title="composite spectrum") -> str:
    """Rug of eigenvalues; accumulation points drawn as tall red lines."""
    values = [float(v) for v in values]
    points = [float(c) for c in clusters]
    ax = _Axes(_lim(values + points), (0.0, 1.0), title, "Lambda", "")
    ax.vlines(values, "rug", "steelblue", 0.0, 0.3)
    ax.vlines(points, "clusters", "crimson", 0.0, 0.9)
    return ax.svg()


def sweep_svg(xs, ys, xlabel="parameter", ylabel="lambda", title="sweep") -> str:
    xs, ys = [float(x) for x in xs], [float(y) for y in ys]
    ax = _Axes(_lim(xs), _lim(ys), title, xlabel, ylabel)
    ax.polyline(xs, ys)
    ax.markers(xs, ys, cls="points", color="steelblue")
    return ax.svg()
