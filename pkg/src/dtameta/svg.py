"""Minimal deterministic SVG rendering for diagnostic meta-analysis plots.

Hand-rolled on purpose: output bytes depend only on the input numbers,
so re-rendering a saved result file reproduces the figure exactly.
All coordinates are formatted with fixed precision.
"""

import numpy as np

PALETTE = ("#1f6fb2", "#d95f02", "#2a9d50", "#7b52ab", "#c23b80")

_MARGIN_L = 55.0
_MARGIN_R = 15.0
_MARGIN_T = 30.0
_MARGIN_B = 45.0


def _fmt(x):
    return f"{x:.2f}"


class _Panel:
    """One plot panel mapping data coordinates in [x0,x1]x[y0,y1] to pixels."""

    def __init__(self, width, height, xlim, ylim, title, xlabel, ylabel):
        self.width = width
        self.height = height
        self.xlim = xlim
        self.ylim = ylim
        self.parts = []
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">'
        )
        self.parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
        self._frame(title, xlabel, ylabel)

    def _px(self, x):
        x0, x1 = self.xlim
        return _MARGIN_L + (x - x0) / (x1 - x0) * (self.width - _MARGIN_L - _MARGIN_R)

    def _py(self, y):
        y0, y1 = self.ylim
        return self.height - _MARGIN_B - (y - y0) / (y1 - y0) * (
            self.height - _MARGIN_T - _MARGIN_B
        )

    def _frame(self, title, xlabel, ylabel):
        x0, y0 = self._px(self.xlim[0]), self._py(self.ylim[0])
        x1, y1 = self._px(self.xlim[1]), self._py(self.ylim[1])
        self.parts.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(y1)}" width="{_fmt(x1 - x0)}" '
            f'height="{_fmt(y0 - y1)}" fill="none" stroke="#333333" stroke-width="1"/>'
        )
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            xv = self.xlim[0] + frac * (self.xlim[1] - self.xlim[0])
            yv = self.ylim[0] + frac * (self.ylim[1] - self.ylim[0])
            px, py = self._px(xv), self._py(yv)
            self.parts.append(
                f'<line x1="{_fmt(px)}" y1="{_fmt(y0)}" x2="{_fmt(px)}" y2="{_fmt(y0 + 4)}" '
                f'stroke="#333333" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(px)}" y="{_fmt(y0 + 16)}" font-size="10" '
                f'text-anchor="middle" font-family="sans-serif">{xv:g}</text>'
            )
            self.parts.append(
                f'<line x1="{_fmt(x0)}" y1="{_fmt(py)}" x2="{_fmt(x0 - 4)}" y2="{_fmt(py)}" '
                f'stroke="#333333" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(x0 - 7)}" y="{_fmt(py + 3)}" font-size="10" '
                f'text-anchor="end" font-family="sans-serif">{yv:g}</text>'
            )
        self.parts.append(
            f'<text x="{_fmt((x0 + x1) / 2)}" y="18" font-size="12" text-anchor="middle" '
            f'font-family="sans-serif" font-weight="bold">{title}</text>'
        )
        self.parts.append(
            f'<text x="{_fmt((x0 + x1) / 2)}" y="{_fmt(y0 + 34)}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>'
        )
        self.parts.append(
            f'<text x="14" y="{_fmt((y0 + y1) / 2)}" font-size="11" text-anchor="middle" '
            f'font-family="sans-serif" transform="rotate(-90 14 {_fmt((y0 + y1) / 2)})">'
            f"{ylabel}</text>"
        )

    def polyline(self, xs, ys, color, width=1.5, dash=None):
        pts = " ".join(f"{_fmt(self._px(x))},{_fmt(self._py(y))}" for x, y in zip(xs, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{dash_attr}/>'
        )

    def band(self, xs, lo, hi, color, opacity=0.18):
        fwd = [f"{_fmt(self._px(x))},{_fmt(self._py(y))}" for x, y in zip(xs, hi)]
        back = [
            f"{_fmt(self._px(x))},{_fmt(self._py(y))}"
            for x, y in zip(reversed(list(xs)), reversed(list(lo)))
        ]
        self.parts.append(
            f'<polygon points="{" ".join(fwd + back)}" fill="{color}" '
            f'fill-opacity="{opacity}" stroke="none"/>'
        )

    def scatter(self, xs, ys, color, radius=2.5, filled=True):
        fill = color if filled else "none"
        stroke = "none" if filled else color
        for x, y in zip(xs, ys):
            self.parts.append(
                f'<circle cx="{_fmt(self._px(x))}" cy="{_fmt(self._py(y))}" r="{radius}" '
                f'fill="{fill}" stroke="{stroke}" stroke-width="1.2"/>'
            )

    def marker(self, x, y, color, size=5.0):
        px, py = self._px(x), self._py(y)
        self.parts.append(
            f'<path d="M {_fmt(px - size)} {_fmt(py)} L {_fmt(px)} {_fmt(py - size)} '
            f'L {_fmt(px + size)} {_fmt(py)} L {_fmt(px)} {_fmt(py + size)} Z" '
            f'fill="{color}" stroke="#333333" stroke-width="0.8"/>'
        )

    def legend(self, entries):
        x = self._px(self.xlim[1]) - 8
        y = self._py(self.ylim[0]) - 8 - 14 * len(entries)
        for i, (label, color) in enumerate(entries):
            yy = y + 14 * i
            self.parts.append(
                f'<line x1="{_fmt(x - 95)}" y1="{_fmt(yy - 3)}" x2="{_fmt(x - 75)}" '
                f'y2="{_fmt(yy - 3)}" stroke="{color}" stroke-width="2"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(x - 70)}" y="{_fmt(yy)}" font-size="10" '
                f'font-family="sans-serif">{label}</text>'
            )

    def render(self):
        return "".join(self.parts) + "</svg>"


def render_sroc_panel(curves, scatter_points=None, sop_points=None, title="SROC"):
    """SROC curves over the unit square with optional study scatter.

    curves: list of (label, xs, ys); sop_points: list of (label, fpr, tpr).
    """
    panel = _Panel(
        460, 400, (0.0, 1.0), (0.0, 1.0), title,
        "False positive rate (1 - specificity)", "True positive rate (sensitivity)",
    )
    panel.polyline([0.0, 1.0], [0.0, 1.0], "#bbbbbb", width=1.0, dash="4,3")
    entries = []
    for i, (label, xs, ys) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        panel.polyline(xs, ys, color)
        entries.append((label, color))
    if scatter_points:
        xs = [p[0] for p in scatter_points]
        ys = [p[1] for p in scatter_points]
        panel.scatter(xs, ys, "#555555", filled=False)
    if sop_points:
        for i, (_, fpr, tpr) in enumerate(sop_points):
            panel.marker(fpr, tpr, PALETTE[i % len(PALETTE)])
    panel.legend(entries)
    return panel.render()


def render_sauc_trend(p_values, sauc, ci_low=None, ci_high=None, title="SAUC vs p"):
    """SAUC against the marginal selection probability, optional CI band."""
    order = np.argsort(np.asarray(p_values))
    ps = [float(p_values[i]) for i in order]
    ss = [float(sauc[i]) for i in order]
    panel = _Panel(
        460, 400, (0.0, 1.0), (0.0, 1.0), title,
        "Marginal selection probability p", "SAUC",
    )
    if ci_low is not None and ci_high is not None:
        lo = [float(ci_low[i]) for i in order]
        hi = [float(ci_high[i]) for i in order]
        panel.band(ps, lo, hi, PALETTE[0])
    panel.polyline(ps, ss, PALETTE[0], width=2.0)
    panel.scatter(ps, ss, PALETTE[0], radius=3.0)
    return panel.render()
