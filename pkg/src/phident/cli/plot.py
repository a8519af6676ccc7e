"""Minimal self-contained SVG line plots."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str | None = None
    color: str = "#1f77b4"
    width: float = 1.5
    dash: str | None = None
    opacity: float = 1.0


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v: float) -> str:
    return f"{v:.3g}"


def render_plot(
    series: list[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logy: bool = False,
    logx: bool = False,
    width: int = 640,
    height: int = 400,
) -> str:
    """Line plot as an SVG document string.

    Log axes require strictly positive data on that axis.
    """
    if not series:
        raise ValueError("render_plot needs at least one series")
    for s in series:
        if len(s.x) == 0 or len(s.x) != len(s.y):
            raise ValueError(f"series {s.label!r} is empty or has mismatched x/y lengths")
        if logy and np.any(np.asarray(s.y) <= 0):
            raise ValueError(f"series {s.label!r} has non-positive values on a log y axis")
        if logx and np.any(np.asarray(s.x) <= 0):
            raise ValueError(f"series {s.label!r} has non-positive values on a log x axis")

    tx = np.log10 if logx else (lambda a: np.asarray(a, dtype=np.float64))
    ty = np.log10 if logy else (lambda a: np.asarray(a, dtype=np.float64))
    xs = np.concatenate([tx(s.x) for s in series])
    ys = np.concatenate([ty(s.y) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    ml, mr, mt, mb = 70, 20, 30 if title else 15, 45
    pw, ph = width - ml - mr, height - mt - mb
    sx = lambda v: ml + (v - x0) / (x1 - x0) * pw
    sy = lambda v: mt + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')

    if logy:
        yt = [float(k) for k in range(math.ceil(y0), math.floor(y1) + 1)] or [y0]
        ylab = lambda v: f"1e{int(round(v))}" if v == round(v) else _fmt(10**v)
    else:
        yt, ylab = _nice_ticks(y0, y1), _fmt
    if logx:
        xt = [float(k) for k in range(math.ceil(x0), math.floor(x1) + 1)] or [x0]
        xlab = lambda v: f"1e{int(round(v))}" if v == round(v) else _fmt(10**v)
    else:
        xt, xlab = _nice_ticks(x0, x1), _fmt
    for v in yt:
        y = sy(v)
        out.append(f'<line x1="{ml}" y1="{y:.2f}" x2="{ml + pw}" y2="{y:.2f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end">{ylab(v)}</text>')
    for v in xt:
        x = sx(v)
        out.append(f'<line x1="{x:.2f}" y1="{mt}" x2="{x:.2f}" y2="{mt + ph}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{x:.2f}" y="{mt + ph + 16}" text-anchor="middle">{xlab(v)}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    if xlabel:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(ylabel)}</text>'
        )

    for s in series:
        px, py = sx(tx(s.x)), sy(ty(s.y))
        d = "M" + " L".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        out.append(
            f'<path d="{d}" fill="none" stroke="{s.color}" stroke-width="{s.width}" '
            f'stroke-opacity="{s.opacity}"{dash}/>'
        )

    labelled = [s for s in series if s.label]
    for i, s in enumerate(labelled):
        y = mt + 12 + 15 * i
        out.append(f'<line x1="{ml + pw - 140}" y1="{y}" x2="{ml + pw - 115}" y2="{y}" stroke="{s.color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw - 110}" y="{y + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def error_plot(t: np.ndarray, errors: np.ndarray, title: str = "") -> str:
    """Per-simulation errors in gray with their mean in red, log scale."""
    floor = np.finfo(float).tiny
    series = [
        Series(t, np.maximum(e, floor), "all test scenarios" if i == 0 else None, "#999999", 1.0, opacity=0.7)
        for i, e in enumerate(errors)
    ]
    series.append(Series(t, np.maximum(errors.mean(axis=0), floor), "mean test scenarios", "#d62728", 2.0))
    return render_plot(series, title, "time [s]", "relative error", logy=True)
