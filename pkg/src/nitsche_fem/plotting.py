"""Self-contained SVG log-log plot of a convergence table."""

from __future__ import annotations

import logging
import math
from xml.sax.saxutils import escape

__all__ = ["emit_plot", "render_svg"]

logger = logging.getLogger(__name__)

WIDTH, HEIGHT = 520, 400
MARGIN = dict(left=80, right=20, top=20, bottom=60)


def _decades(lo, hi):
    return list(range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1))


def render_svg(table, slope: float = 2.0) -> str:
    """SVG text: error markers joined by a polyline and a dashed slope-2 line
    through the finest point."""
    pts = []
    for rec in table:
        if rec.l2_error > 0 and rec.h > 0:
            pts.append((rec.h, rec.l2_error))
        else:
            logger.warning("level %s: non-positive error %g omitted from plot",
                           rec.level, rec.l2_error)
    if not pts:
        raise ValueError("no positive errors to plot")

    hs = [p[0] for p in pts]
    es = [p[1] for p in pts]
    ref = []
    if len(pts) >= 2:
        h_last, e_last = pts[-1]
        ref = [(h, e_last * (h / h_last) ** slope) for h in (min(hs), max(hs))]
    all_e = es + [e for _, e in ref]
    xd = _decades(min(hs), max(hs))
    yd = _decades(min(all_e), max(all_e))
    x0, x1 = xd[0], max(xd[-1], xd[0] + 1)
    y0, y1 = yd[0], max(yd[-1], yd[0] + 1)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def X(h):
        return MARGIN["left"] + (math.log10(h) - x0) / (x1 - x0) * pw

    def Y(e):
        return MARGIN["top"] + (y1 - math.log10(e)) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect class="frame" x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" '
        f'height="{ph}" fill="none" stroke="black"/>',
    ]
    for d in range(x0, x1 + 1):
        x = X(10.0**d)
        out.append(f'<line class="grid" x1="{x:.2f}" y1="{MARGIN["top"]}" x2="{x:.2f}" '
                   f'y2="{MARGIN["top"] + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 18}" font-size="12" '
                   f'text-anchor="middle">1e{d}</text>')
    for d in range(y0, y1 + 1):
        y = Y(10.0**d)
        out.append(f'<line class="grid" x1="{MARGIN["left"]}" y1="{y:.2f}" '
                   f'x2="{MARGIN["left"] + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{y + 4:.2f}" font-size="12" '
                   f'text-anchor="end">1e{d}</text>')
    out.append(f'<text class="xlabel" x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" '
               'font-size="14" text-anchor="middle">h</text>')
    out.append(f'<text class="ylabel" x="18" y="{MARGIN["top"] + ph / 2:.1f}" font-size="14" '
               f'text-anchor="middle" transform="rotate(-90 18 {MARGIN["top"] + ph / 2:.1f})">'
               'L2 error</text>')
    if len(pts) >= 2:
        coords = " ".join(f"{X(h):.2f},{Y(e):.2f}" for h, e in pts)
        out.append(f'<polyline class="data" points="{coords}" fill="none" stroke="#1f77b4" '
                   'stroke-width="2"/>')
    for h, e in pts:
        out.append(f'<circle class="marker" cx="{X(h):.2f}" cy="{Y(e):.2f}" r="4" '
                   'fill="#1f77b4"/>')
    if ref:
        (ha, ea), (hb, eb) = ref
        out.append(f'<line class="reference" x1="{X(ha):.2f}" y1="{Y(ea):.2f}" '
                   f'x2="{X(hb):.2f}" y2="{Y(eb):.2f}" stroke="black" '
                   'stroke-dasharray="6,4"/>')
        out.append(f'<text x="{MARGIN["left"] + 10}" y="{MARGIN["top"] + 18}" font-size="12">'
                   f'{escape(f"dashed: slope {slope:g}")}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(table, path, slope: float = 2.0):
    with open(path, "w") as fh:
        fh.write(render_svg(table, slope))
