"""Tiny SVG line-chart writer.

Charts emitted by the experiment harness are run artifacts; the CSVs remain
the authoritative output.  Only what those charts need is implemented:
polyline series over linear or log10 axes, with min/max tick labels and a
text legend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

WIDTH, HEIGHT = 640, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


@dataclass
class Series:
    label: str
    xs: list[float]
    ys: list[float]
    dashed: bool = False


def _transform(values, log):
    out = []
    for v in values:
        if log:
            if v <= 0:
                raise ValueError("log axis requires positive values")
            out.append(math.log10(v))
        else:
            out.append(float(v))
    return out


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def line_chart(
    path,
    series: list[Series],
    *,
    title: str,
    x_label: str,
    y_label: str,
    x_log: bool = False,
    y_log: bool = False,
) -> None:
    xs_all, ys_all = [], []
    txs, tys = [], []
    for s in series:
        tx = _transform(s.xs, x_log)
        ty = _transform(s.ys, y_log)
        txs.append(tx)
        tys.append(ty)
        xs_all += tx
        ys_all += ty
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(v):
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R)

    def py(v):
        return HEIGHT - MARGIN_B - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    ax = (
        f'<polyline points="{MARGIN_L},{MARGIN_T} {MARGIN_L},{HEIGHT - MARGIN_B} '
        f'{WIDTH - MARGIN_R},{HEIGHT - MARGIN_B}" fill="none" stroke="black"/>'
    )
    parts.append(ax)
    x_lo_lbl, x_hi_lbl = (10**x_lo, 10**x_hi) if x_log else (x_lo, x_hi)
    y_lo_lbl, y_hi_lbl = (10**y_lo, 10**y_hi) if y_log else (y_lo, y_hi)
    parts += [
        f'<text x="{MARGIN_L}" y="{HEIGHT - MARGIN_B + 16}" font-size="11">{_fmt(x_lo_lbl)}</text>',
        f'<text x="{WIDTH - MARGIN_R}" y="{HEIGHT - MARGIN_B + 16}" text-anchor="end" font-size="11">{_fmt(x_hi_lbl)}</text>',
        f'<text x="{MARGIN_L - 6}" y="{HEIGHT - MARGIN_B}" text-anchor="end" font-size="11">{_fmt(y_lo_lbl)}</text>',
        f'<text x="{MARGIN_L - 6}" y="{MARGIN_T + 10}" text-anchor="end" font-size="11">{_fmt(y_hi_lbl)}</text>',
        f'<text x="{(WIDTH + MARGIN_L) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">'
        f"{x_label}{' (log)' if x_log else ''}</text>",
        f'<text x="16" y="{HEIGHT / 2:.1f}" font-size="12" transform="rotate(-90 16 {HEIGHT / 2:.1f})" '
        f'text-anchor="middle">{y_label}{" (log)" if y_log else ""}</text>',
    ]
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(txs[i], tys[i]))
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        parts.append(
            f'<text x="{WIDTH - MARGIN_R - 4}" y="{MARGIN_T + 14 + 14 * i}" text-anchor="end" '
            f'font-size="11" fill="{color}">{s.label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
