"""Deterministic writers for CSV, JSON, coordinate-format matrices and SVG plots.

Floats are written with ``repr`` (shortest round-trip form), so identical
inputs yield byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np


def _num(x):
    x = float(x)
    if np.isnan(x):
        return "nan"
    return repr(x)


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer, str)) else _num(v) for v in row])
    return path


def write_json(path, payload):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_eigs_csv(path, eig):
    """One row per eigenpair: ``index, lambda`` then the eigenvector's nodal values."""
    N = eig.vectors.shape[0]
    header = ["index", "lambda"] + [f"node_{i}" for i in range(N)]
    rows = ([j + 1, eig.values[j], *eig.vectors[:, j]] for j in range(eig.n_modes))
    return write_csv(path, header, rows)


def write_coo(path, matrix, drop_tol=0.0):
    """Coordinate text format: one ``row col value`` line per stored entry."""
    matrix = np.asarray(matrix)
    r, c = np.nonzero(np.abs(matrix) > drop_tol)
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"% {matrix.shape[0]} {matrix.shape[1]} {r.size}\n")
        for i, j in zip(r, c):
            fh.write(f"{i} {j} {_num(matrix[i, j])}\n")
    return Path(path)


def read_coo(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    n, m, _ = (int(v) for v in lines[0].lstrip("% ").split())
    out = np.zeros((n, m))
    for line in lines[1:]:
        i, j, v = line.split()
        out[int(i), int(j)] = float(v)
    return out


# -- SVG ------------------------------------------------------------------

_W, _H, _PAD = 640, 400, 56


def _fmt(v):
    return f"{v:.4g}"


def write_svg_plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """Line plot of one or more ``(label, x, y)`` series, written as plain SVG."""
    title, xlabel, ylabel = escape(title), escape(xlabel), escape(ylabel)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
    xs, ys = [], []
    prepared = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        x, y = x[keep], y[keep]
        if logx:
            x = np.log10(x)
        if logy:
            y = np.log10(y)
        prepared.append((label, x, y))
        xs.append(x)
        ys.append(y)
    allx = np.concatenate(xs) if xs else np.zeros(1)
    ally = np.concatenate(ys) if ys else np.zeros(1)
    if allx.size == 0:
        allx = np.zeros(1)
    if ally.size == 0:
        ally = np.zeros(1)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(v):
        return _PAD + (v - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def py(v):
        return _H - _PAD - (v - y0) / (y1 - y0) * (_H - 2 * _PAD)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle" font-size="12">{xlabel}{" (log10)" if logx else ""}</text>',
        f'<text x="14" y="{_H / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {_H / 2})">'
        f'{ylabel}{" (log10)" if logy else ""}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        out.append(f'<text x="{px(xv):.2f}" y="{_H - _PAD + 16}" text-anchor="middle" font-size="10">{_fmt(xv)}</text>')
        out.append(f'<text x="{_PAD - 4}" y="{py(yv):.2f}" text-anchor="end" font-size="10">{_fmt(yv)}</text>')
    for k, (label, x, y) in enumerate(prepared):
        color = colors[k % len(colors)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{_W - _PAD - 4}" y="{_PAD + 14 * (k + 1)}" text-anchor="end" font-size="11" '
                   f'fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    return Path(path)
