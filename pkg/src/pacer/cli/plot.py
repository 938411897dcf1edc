"""Training-curve charts as standalone SVG."""

from __future__ import annotations

import csv
from html import escape
from pathlib import Path

import numpy as np

from ..errors import DataError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def read_eval_curve(path):
    """(steps, eval_return_mean) from the rows of a metrics CSV that carry an evaluation."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if rows and ("step" not in rows[0] or "eval_return_mean" not in rows[0]):
        raise DataError(f"{path} does not have the metrics schema")
    pts = [(int(r["step"]), float(r["eval_return_mean"])) for r in rows if r["eval_return_mean"] not in ("", None)]
    if not pts:
        raise DataError(f"{path} has no evaluation rows")
    steps, vals = zip(*pts)
    return np.array(steps), np.array(vals)


def smooth(steps, values, window: int = 100):
    """Trailing moving average; a window longer than the series gives one averaged point."""
    steps, values = np.asarray(steps), np.asarray(values, dtype=np.float64)
    if window < 1:
        raise ValueError("window must be positive")
    if len(values) < window:
        return steps[-1:], np.array([values.mean()])
    c = np.cumsum(np.concatenate([[0.0], values]))
    avg = (c[window:] - c[:-window]) / window
    return steps[window - 1:], avg


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def svg_chart(series, title="eval return", width=640, height=400) -> str:
    """``series`` is a list of (label, xs, ys); one polyline per entry plus a legend."""
    ml, mr, mt, mb = 70, 20, 30, 50
    xs = np.concatenate([s[1] for s in series]).astype(float)
    ys = np.concatenate([s[2] for s in series]).astype(float)
    x0, x1 = xs.min(), xs.max()
    y0, y1 = ys.min(), ys.max()
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = width - ml - mr, height - mt - mb

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{mt + ph + 15}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{ml - 5}" y="{py(t) + 4:.1f}" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">step</text>')
    for k, (label, sx, sy) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(sx, sy))
        if len(sx) == 1:
            out.append(f'<circle cx="{px(sx[0]):.2f}" cy="{py(sy[0]):.2f}" r="3" fill="{color}"/>')
        out.append(f'<polyline class="series" points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = mt + 14 + 14 * k
        out.append(f'<g class="legend"><line x1="{ml + 8}" y1="{ly - 4}" x2="{ml + 24}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/><text x="{ml + 28}" y="{ly}">{escape(label)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_metrics(csv_paths, output_path, window: int = 100) -> Path:
    if not csv_paths:
        raise DataError("no metrics files given")
    series = []
    for p in csv_paths:
        steps, vals = read_eval_curve(p)
        sx, sy = smooth(steps, vals, window)
        series.append((Path(p).stem, sx, sy))
    out = Path(output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg_chart(series))
    return out
