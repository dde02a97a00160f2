"""Minimal standalone SVG charts: multi-series line plots and (n, k) heatmaps."""
from __future__ import annotations

import math
from html import escape
from typing import Sequence

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=78, right=150, top=40, bottom=56)


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _tick_label(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return f"{v:g}"


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        step = max(1, math.ceil((hi - lo) / 8))
        return [float(e) for e in range(math.ceil(lo), math.floor(hi) + 1, step)]
    span = hi - lo or 1.0
    raw = span / 6
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def _doc(body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">')
    return "\n".join([
        '<?xml version="1.0" encoding="UTF-8"?>', head,
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        *body, "</svg>", ""])


def line_chart(
    series: Sequence[tuple[str, Sequence[float], Sequence[float | None]]],
    *,
    title: str,
    x_label: str,
    y_label: str,
    log_x: bool = True,
    log_y: bool = True,
) -> str:
    """Render ``(label, xs, ys)`` series; ``None`` or non-positive log values are skipped."""
    def tx(v):
        return math.log10(v) if log_x else v

    def ty(v):
        return math.log10(v) if log_y else v

    pts = [[(tx(x), ty(y)) for x, y in zip(xs, ys)
            if y is not None and (not log_y or y > 0) and (not log_x or x > 0)]
           for _, xs, ys in series]
    flat = [p for s in pts for p in s] or [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in flat), max(p[0] for p in flat)
    y0, y1 = min(p[1] for p in flat), max(p[1] for p in flat)
    if log_y:
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    body = [f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>']
    for v in _ticks(x0, x1, log_x):
        body.append(f'<line x1="{_fmt(px(v))}" y1="{top + ph}" x2="{_fmt(px(v))}" y2="{top + ph + 5}" stroke="#333"/>')
        body.append(f'<text x="{_fmt(px(v))}" y="{top + ph + 18}" text-anchor="middle">{_tick_label(v, log_x)}</text>')
    for v in _ticks(y0, y1, log_y):
        body.append(f'<line x1="{left - 5}" y1="{_fmt(py(v))}" x2="{left}" y2="{_fmt(py(v))}" stroke="#333"/>')
        body.append(f'<line x1="{left}" y1="{_fmt(py(v))}" x2="{left + pw}" y2="{_fmt(py(v))}" stroke="#eee"/>')
        body.append(f'<text x="{left - 8}" y="{_fmt(py(v) + 4)}" text-anchor="end">{_tick_label(v, log_y)}</text>')
    body.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 14}" text-anchor="middle">{escape(x_label)}</text>')
    body.append(f'<text transform="translate(18,{top + ph / 2}) rotate(-90)" text-anchor="middle">{escape(y_label)}</text>')
    for i, ((label, _, _), s) in enumerate(zip(series, pts)):
        color = PALETTE[i % len(PALETTE)]
        if s:
            path = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in s)
            body.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{path}"/>')
        ly = top + 14 + 18 * i
        body.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 34}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{left + pw + 40}" y="{ly + 4}">{escape(label)}</text>')
    return _doc(body, title)


def _color(frac: float) -> str:
    # white -> dark blue ramp
    frac = min(1.0, max(0.0, frac))
    r = int(247 - frac * (247 - 8))
    g = int(251 - frac * (251 - 48))
    b = int(255 - frac * (255 - 107))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(
    cells: dict[tuple[int, int], float | None],
    *,
    title: str,
    value_label: str,
    log_values: bool = False,
) -> str:
    """Triangular (n, k) grid; n runs along x, k along y."""
    n_max = max(n for n, _ in cells)
    vals = {key: (math.log10(v) if log_values and v and v > 0 else (None if log_values else v))
            for key, v in cells.items()}
    finite = [v for v in vals.values() if v is not None]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    span = hi - lo or 1.0
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    cw, ch = pw / (n_max + 1), ph / (n_max + 1)
    body = []
    for (n, k), v in sorted(vals.items()):
        x, y = left + n * cw, top + ph - (k + 1) * ch
        fill = "#cccccc" if v is None else _color((v - lo) / span)
        raw = cells[(n, k)]
        text = "-" if raw is None else f"{raw:.2g}"
        body.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(cw)}" height="{_fmt(ch)}" '
                    f'fill="{fill}" stroke="white"><title>n={n} k={k}: {text}</title></rect>')
        shade = v is not None and (v - lo) / span > 0.55
        body.append(f'<text x="{_fmt(x + cw / 2)}" y="{_fmt(y + ch / 2 + 3)}" text-anchor="middle" '
                    f'font-size="8" fill="{"white" if shade else "black"}">{escape(text)}</text>')
    for n in range(n_max + 1):
        body.append(f'<text x="{_fmt(left + (n + 0.5) * cw)}" y="{top + ph + 16}" text-anchor="middle">{n}</text>')
        body.append(f'<text x="{left - 8}" y="{_fmt(top + ph - (n + 0.5) * ch + 4)}" text-anchor="end">{n}</text>')
    body.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 14}" text-anchor="middle">n</text>')
    body.append(f'<text x="22" y="{top + ph / 2}" text-anchor="middle">k</text>')
    legend_x = left + pw + 20
    for i in range(11):
        frac = i / 10
        body.append(f'<rect x="{legend_x}" y="{_fmt(top + ph - (i + 1) * ph / 11)}" width="16" '
                    f'height="{_fmt(ph / 11)}" fill="{_color(frac)}"/>')
    fmt = (lambda v: f"1e{v:.1f}") if log_values else (lambda v: f"{v:.3g}")
    body.append(f'<text x="{legend_x + 22}" y="{top + ph}">{escape(fmt(lo))}</text>')
    body.append(f'<text x="{legend_x + 22}" y="{top + 10}">{escape(fmt(hi))}</text>')
    body.append(f'<text x="{legend_x}" y="{top - 8}">{escape(value_label)}</text>')
    return _doc(body, title)
