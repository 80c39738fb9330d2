"""Hand-written SVG log-log plot of a convergence report."""
from __future__ import annotations

import math

W, H = 640, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 30, 60


def _decades(lo: float, hi: float) -> range:
    return range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)


def convergence_svg(report) -> str:
    """Mean-square error vs. time step with +-2 stderr bars and an ``alpha = 1/2`` guide."""
    dts = report.dts
    mse = report.mse
    lows = [max(m - 2 * s, m * 1e-3) for m, s in zip(mse, report.stderr)]
    highs = [m + 2 * s for m, s in zip(mse, report.stderr)]
    pos = [v for v in mse + lows if v > 0] or [1.0]
    ylo, yhi = min(pos), max(highs + pos)
    xlo, xhi = min(dts), max(dts)
    xd, yd = _decades(xlo, xhi), _decades(ylo, yhi)
    x0, x1 = xd.start, xd.stop - 1
    y0, y1 = yd.start, yd.stop - 1
    if x1 == x0:
        x1 += 1
    if y1 == y0:
        y1 += 1

    def px(x):
        return LEFT + (math.log10(x) - x0) / (x1 - x0) * (W - LEFT - RIGHT)

    def py(y):
        return H - BOTTOM - (math.log10(y) - y0) / (y1 - y0) * (H - TOP - BOTTOM)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{W - LEFT - RIGHT}" height="{H - TOP - BOTTOM}" fill="none" stroke="black"/>',
    ]
    for e in range(x0, x1 + 1):
        x = px(10.0**e)
        out.append(f'<line x1="{x:.2f}" y1="{H - BOTTOM}" x2="{x:.2f}" y2="{H - BOTTOM + 6}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{H - BOTTOM + 22}" font-size="12" text-anchor="middle">1e{e}</text>')
        for sub in range(2, 10):
            if e < x1:
                xs = px(sub * 10.0**e)
                out.append(f'<line x1="{xs:.2f}" y1="{H - BOTTOM}" x2="{xs:.2f}" y2="{H - BOTTOM + 3}" stroke="black"/>')
    for e in range(y0, y1 + 1):
        y = py(10.0**e)
        out.append(f'<line x1="{LEFT - 6}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 10}" y="{y + 4:.2f}" font-size="12" text-anchor="end">1e{e}</text>')
        for sub in range(2, 10):
            if e < y1:
                ys = py(sub * 10.0**e)
                out.append(f'<line x1="{LEFT - 3}" y1="{ys:.2f}" x2="{LEFT}" y2="{ys:.2f}" stroke="black"/>')
    out.append(f'<text x="{(LEFT + W - RIGHT) / 2}" y="{H - 15}" font-size="14" text-anchor="middle">time step dt</text>')
    out.append(
        f'<text x="20" y="{(TOP + H - BOTTOM) / 2}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 20 {(TOP + H - BOTTOM) / 2})">mean-square error</text>'
    )
    # guide: mse ~ dt^(2 * 1/2), anchored at the finest level
    if mse[0] > 0:
        i = dts.index(xlo)
        c = mse[i] / xlo
        out.append(
            f'<line x1="{px(xlo):.2f}" y1="{py(c * xlo):.2f}" x2="{px(xhi):.2f}" y2="{py(c * xhi):.2f}" '
            'stroke="gray" stroke-dasharray="6,4"/>'
        )
        out.append(f'<text x="{px(xhi) - 5:.2f}" y="{py(c * xhi) - 8:.2f}" font-size="12" fill="gray" text-anchor="end">alpha = 1/2</text>')
    pts = []
    for dt, m, lo, hi in zip(dts, mse, lows, highs):
        if m <= 0:
            continue
        x = px(dt)
        out.append(f'<line x1="{x:.2f}" y1="{py(lo):.2f}" x2="{x:.2f}" y2="{py(hi):.2f}" stroke="steelblue"/>')
        pts.append(f"{x:.2f},{py(m):.2f}")
        out.append(f'<circle cx="{x:.2f}" cy="{py(m):.2f}" r="4" fill="steelblue"/>')
    if pts:
        out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="steelblue"/>')
    if report.alpha_fit is not None:
        out.append(f'<text x="{LEFT + 10}" y="{TOP + 20}" font-size="14">fitted alpha = {report.alpha_fit:.3f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
