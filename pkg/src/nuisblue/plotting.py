"""Minimal log-log SVG line charts (RMSE versus noise level)."""

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22",
)
WIDTH, HEIGHT = 720, 480
MARGIN = dict(left=70, right=210, top=40, bottom=55)


def _decades(lo, hi):
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if a == b:
        b += 1
    return a, b


def loglog_svg(series, title="", xlabel="sigma", ylabel="RMSE [m]", dashed=()):
    """Render ``{name: (xs, ys)}`` as polylines on log-log axes.

    Non-positive or non-finite points are skipped. Names in ``dashed`` are
    drawn with a dashed stroke (used for the CRLB).
    """
    pts = [
        (x, y)
        for xs, ys in series.values()
        for x, y in zip(xs, ys)
        if x > 0 and y > 0 and np.isfinite(x) and np.isfinite(y)
    ]
    if not pts:
        pts = [(1.0, 1.0)]
    xa, xb = _decades(min(p[0] for p in pts), max(p[0] for p in pts))
    ya, yb = _decades(min(p[1] for p in pts), max(p[1] for p in pts))
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def sx(x):
        return x0 + (math.log10(x) - xa) / (xb - xa) * (x1 - x0)

    def sy(y):
        return y0 + (math.log10(y) - ya) / (yb - ya) * (y1 - y0)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{(x0 + x1) / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for e in range(xa, xb + 1):
        x = x0 + (e - xa) / (xb - xa) * (x1 - x0)
        out.append(f'<line x1="{x:.2f}" y1="{y0}" x2="{x:.2f}" y2="{y1}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.2f}" y="{y0 + 18}" text-anchor="middle">1e{e}</text>')
    for e in range(ya, yb + 1):
        y = y0 + (e - ya) / (yb - ya) * (y1 - y0)
        out.append(f'<line x1="{x0}" y1="{y:.2f}" x2="{x1}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{x0 - 6}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="black"/>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>'
    )
    for k, (name, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(
            f"{sx(x):.2f},{sy(y):.2f}"
            for x, y in zip(xs, ys)
            if x > 0 and y > 0 and np.isfinite(x) and np.isfinite(y)
        )
        dash = ' stroke-dasharray="6 4"' if name in dashed else ""
        if coords:
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = y1 + 14 + 18 * k
        out.append(f'<line x1="{x1 + 12}" y1="{ly}" x2="{x1 + 36}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{x1 + 42}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def campaign_svg(result, model):
    rows = [r for r in result.rows if r.model == model]
    series = {}
    for r in rows:
        xs, ys = series.setdefault(r.estimator, ([], []))
        xs.append(r.sigma)
        ys.append(r.rmse)
    if rows:
        first = rows[0].estimator
        series["CRLB"] = (
            [r.sigma for r in rows if r.estimator == first],
            [r.crlb_rmse for r in rows if r.estimator == first],
        )
    return loglog_svg(series, title=model, dashed=("CRLB",))
