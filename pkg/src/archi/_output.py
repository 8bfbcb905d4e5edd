"""CSV, JSON and SVG emitters.  Output is byte-for-byte deterministic."""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence

import numpy as np


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def to_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


# -- SVG ---------------------------------------------------------------------

_W, _H = 800, 200
_X0, _X1 = 40.0, 780.0


def _x(lam, lo, hi):
    return _X0 + (_X1 - _X0) * (lam - lo) / (hi - lo)


def _nice_ticks(lo, hi, count=8):
    step = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(step))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= step), default=step)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step) + 1)]


def svg_bands(bands, flat, lo: float, hi: float, title: str = "") -> str:
    """Band diagram: filled bands, hatched gaps, ticks at flat-band eigenvalues."""
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" '
           f'width="{_W}" height="{_H}" font-family="sans-serif" font-size="11">',
           '<defs><pattern id="gap" width="6" height="6" patternUnits="userSpaceOnUse" '
           'patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" '
           'stroke="#999" stroke-width="1.5"/></pattern></defs>',
           f'<text x="{_X0}" y="20">{title}</text>',
           f'<rect x="{_X0}" y="70" width="{_X1 - _X0}" height="50" fill="url(#gap)"/>']
    for b in bands:
        x0, x1 = _x(max(b.lo, lo), lo, hi), _x(min(b.hi, hi), lo, hi)
        out.append(f'<rect x="{x0:.3f}" y="70" width="{max(x1 - x0, 0.5):.3f}" height="50" '
                   'fill="#3b6ea8" stroke="none"/>')
    for lam in flat:
        if lo <= lam <= hi:
            x = _x(lam, lo, hi)
            out.append(f'<line x1="{x:.3f}" y1="55" x2="{x:.3f}" y2="135" '
                       'stroke="#c0392b" stroke-width="1.5"/>')
    out.append(f'<line x1="{_X0}" y1="150" x2="{_X1}" y2="150" stroke="black"/>')
    for t in _nice_ticks(lo, hi):
        x = _x(t, lo, hi)
        out.append(f'<line x1="{x:.3f}" y1="150" x2="{x:.3f}" y2="155" stroke="black"/>')
        out.append(f'<text x="{x:.3f}" y="170" text-anchor="middle">{t:g}</text>')
    out.append(f'<text x="{(_X0 + _X1) / 2}" y="190" text-anchor="middle">lambda</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def _color(t: float) -> str:
    # dark blue -> teal -> yellow
    stops = [(0.0, (68, 1, 84)), (0.5, (33, 145, 140)), (1.0, (253, 231, 37))]
    t = min(1.0, max(0.0, t))
    for (t0, c0), (t1, c1) in zip(stops, stops[1:]):
        if t <= t1:
            u = (t - t0) / (t1 - t0)
            return "#%02x%02x%02x" % tuple(round(a + u * (b - a)) for a, b in zip(c0, c1))
    return "#fde725"


def svg_surface(values: np.ndarray, title: str = "") -> str:
    """One heatmap panel per branch; ``values`` has shape ``(n, n, branches)``."""
    n, _, k = values.shape
    k = max(k, 1)
    panel = min(180.0, (_W - 20.0 * (k + 1)) / k)
    cell = panel / n
    height = panel + 60
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {height:.0f}" '
           f'width="{_W}" height="{height:.0f}" font-family="sans-serif" font-size="11">',
           f'<text x="20" y="16">{title}</text>']
    for b in range(values.shape[2]):
        v = values[:, :, b]
        finite = v[np.isfinite(v)]
        vmin, vmax = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
        span = vmax - vmin if vmax > vmin else 1.0
        ox = 20 + b * (panel + 20)
        for i in range(n):
            for j in range(n):
                x = v[i, j]
                fill = _color((x - vmin) / span) if np.isfinite(x) else "#ffffff"
                out.append(f'<rect x="{ox + i * cell:.2f}" y="{30 + (n - 1 - j) * cell:.2f}" '
                           f'width="{cell + 0.05:.2f}" height="{cell + 0.05:.2f}" fill="{fill}"/>')
        out.append(f'<text x="{ox}" y="{panel + 45:.0f}">branch {b + 1}: '
                   f'{vmin:.4g} .. {vmax:.4g}</text>')
    out.append("</svg>\n")
    return "\n".join(out)
