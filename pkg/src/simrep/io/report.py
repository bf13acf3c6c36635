"""CSV and SVG emission.

One CSV and one SVG per analysis, drawn from the same numbers. CSVs are
RFC-4180 style with a header row; floats are written with repr so they
re-read exactly. SVGs are self-contained (axes, ticks, labels) and fully
deterministic, since figures are batch artifacts here, not an interactive
surface.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"]
BASE_MARKER = "#d62728"

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 55


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def emit_csv(path: str | Path, header: list[str], rows) -> None:
    rows = list(rows)
    for r in rows:
        if len(r) != len(header):
            raise ValueError(f"row of width {len(r)} does not match header {header}")
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    os.replace(tmp, path)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: str | Path, name: str, config_hash: str,
                   seeds: list[int], artifacts: list[str | Path]) -> Path:
    manifest = {
        "config_hash": config_hash,
        "seeds": [int(s) for s in seeds],
        "artifacts": {Path(p).name: sha256_file(p) for p in artifacts},
    }
    path = Path(out_dir) / f"{name}.manifest.json"
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)
    return path


# SVG helpers

def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


class _Canvas:
    def __init__(self, xlim, ylim, title, xlabel, ylabel,
                 width=WIDTH, height=HEIGHT, origin=(0, 0)):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.w, self.h = width, height
        self.ox, self.oy = origin
        self.parts: list[str] = []
        self._frame(title, xlabel, ylabel)

    def px(self, x: float) -> float:
        f = (x - self.x0) / (self.x1 - self.x0)
        return self.ox + MARGIN_L + f * (self.w - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        f = (y - self.y0) / (self.y1 - self.y0)
        return self.oy + self.h - MARGIN_B - f * (self.h - MARGIN_T - MARGIN_B)

    def _frame(self, title, xlabel, ylabel):
        left, right = self.ox + MARGIN_L, self.ox + self.w - MARGIN_R
        top, bottom = self.oy + MARGIN_T, self.oy + self.h - MARGIN_B
        self.parts.append(
            f'<rect x="{left}" y="{top}" width="{right - left}" '
            f'height="{bottom - top}" fill="none" stroke="#333"/>'
        )
        for v in _ticks(self.x0, self.x1):
            x = self.px(v)
            self.parts.append(f'<line x1="{x:.2f}" y1="{bottom}" x2="{x:.2f}" '
                              f'y2="{bottom + 5}" stroke="#333"/>')
            self.parts.append(f'<text x="{x:.2f}" y="{bottom + 18}" font-size="11" '
                              f'text-anchor="middle">{_tick_label(v)}</text>')
        for v in _ticks(self.y0, self.y1):
            y = self.py(v)
            self.parts.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" '
                              f'y2="{y:.2f}" stroke="#333"/>')
            self.parts.append(f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" '
                              f'text-anchor="end">{_tick_label(v)}</text>')
        if title:
            self.parts.append(f'<text x="{self.ox + self.w / 2}" y="{self.oy + 20}" '
                              f'font-size="14" text-anchor="middle">{title}</text>')
        if xlabel:
            self.parts.append(f'<text x="{self.ox + self.w / 2}" y="{self.oy + self.h - 15}" '
                              f'font-size="12" text-anchor="middle">{xlabel}</text>')
        if ylabel:
            cx, cy = self.ox + 18, self.oy + self.h / 2
            self.parts.append(f'<text x="{cx}" y="{cy}" font-size="12" text-anchor="middle" '
                              f'transform="rotate(-90 {cx} {cy})">{ylabel}</text>')

    def polyline(self, xs, ys, color, width=1.5):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"/>')

    def band(self, xs, lo, hi, color, opacity=0.25):
        fwd = [f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, hi)]
        bwd = [f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs[::-1], lo[::-1])]
        self.parts.append(f'<polygon points="{" ".join(fwd + bwd)}" fill="{color}" '
                          f'opacity="{opacity}" stroke="none"/>')

    def circle(self, x, y, color, r=4.5):
        self.parts.append(f'<circle cx="{self.px(x):.2f}" cy="{self.py(y):.2f}" '
                          f'r="{r}" fill="{color}"/>')

    def vbar(self, x_lo, x_hi, y, color, opacity=1.0):
        x0, x1 = self.px(x_lo), self.px(x_hi)
        y0, y1 = self.py(0.0), self.py(y)
        top = min(y0, y1)
        self.parts.append(f'<rect x="{x0:.2f}" y="{top:.2f}" width="{x1 - x0:.2f}" '
                          f'height="{abs(y0 - y1):.2f}" fill="{color}" opacity="{opacity}"/>')

    def vline(self, x, y_lo, y_hi, color, width=1.5):
        self.parts.append(f'<line x1="{self.px(x):.2f}" y1="{self.py(y_lo):.2f}" '
                          f'x2="{self.px(x):.2f}" y2="{self.py(y_hi):.2f}" '
                          f'stroke="{color}" stroke-width="{width}"/>')

    def text(self, x_px, y_px, s, size=11, anchor="start"):
        self.parts.append(f'<text x="{x_px:.2f}" y="{y_px:.2f}" font-size="{size}" '
                          f'text-anchor="{anchor}">{s}</text>')


def _write_svg(path, parts, width=WIDTH, height=HEIGHT):
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
                f'height="{height}" viewBox="0 0 {width} {height}">\n')
        f.write('<rect width="100%" height="100%" fill="white"/>\n')
        for p in parts:
            f.write(p + "\n")
        f.write("</svg>\n")
    os.replace(tmp, path)


def svg_line_band(path, xs, mean, std=None, base_index=None,
                  title="", xlabel="", ylabel="distance"):
    """Distance-vs-value line with a +-std band and a marked base point."""
    xs = np.asarray(xs, dtype=float)
    mean = np.asarray(mean, dtype=float)
    ok = np.isfinite(mean)
    lo = mean - (std if std is not None else 0)
    hi = mean + (std if std is not None else 0)
    ymin = min(0.0, float(lo[ok].min())) if ok.any() else 0.0
    ymax = float(hi[ok].max()) * 1.08 + 1e-12 if ok.any() else 1.0
    c = _Canvas((float(xs.min()), float(xs.max())), (ymin, ymax), title, xlabel, ylabel)
    if std is not None and ok.any():
        c.band(xs[ok], lo[ok], hi[ok], PALETTE[0])
    if ok.any():
        c.polyline(xs[ok], mean[ok], PALETTE[0])
    if base_index is not None and ok[base_index]:
        c.circle(xs[base_index], mean[base_index], BASE_MARKER)
    _write_svg(path, c.parts)


def svg_bars(path, labels, values, errors=None, title="", ylabel="mean distance"):
    values = np.asarray(values, dtype=float)
    errors = np.asarray(errors, dtype=float) if errors is not None else np.zeros_like(values)
    ymax = float((values + errors).max()) * 1.1 + 1e-12
    c = _Canvas((0.0, float(len(values))), (0.0, ymax), title, "", ylabel)
    for i, (v, e) in enumerate(zip(values, errors)):
        c.vbar(i + 0.15, i + 0.85, v, PALETTE[0])
        if e > 0:
            c.vline(i + 0.5, max(v - e, 0.0), v + e, "#333")
        c.text(c.px(i + 0.5), c.py(0) + 18, str(labels[i]), anchor="middle")
    _write_svg(path, c.parts)


def svg_paired_bars(path, labels, series_a, series_b, name_a, name_b,
                    title="", ylabel="normalized sensitivity"):
    series_a = np.asarray(series_a, dtype=float)
    series_b = np.asarray(series_b, dtype=float)
    n = len(labels)
    c = _Canvas((0.0, float(n)), (0.0, 1.1), title, "", ylabel)
    for i in range(n):
        c.vbar(i + 0.12, i + 0.48, series_a[i], PALETTE[0])
        c.vbar(i + 0.52, i + 0.88, series_b[i], PALETTE[1])
        if n <= 24:
            c.text(c.px(i + 0.5), c.py(0) + 18, str(labels[i]), size=9, anchor="middle")
    c.text(MARGIN_L + 10, MARGIN_T + 14, f"&#9632; {name_a}", size=11)
    c.parts[-1] = c.parts[-1].replace("<text", f'<text fill="{PALETTE[0]}"', 1)
    c.text(MARGIN_L + 10, MARGIN_T + 30, f"&#9632; {name_b}", size=11)
    c.parts[-1] = c.parts[-1].replace("<text", f'<text fill="{PALETTE[1]}"', 1)
    _write_svg(path, c.parts)


def svg_histogram_panel(path, fields, cluster_labels, panel_width=320, panel_height=240):
    """Grid of per-field histograms with one overlaid series per cluster.

    fields: list of (field_name, bin_edges, {cluster: counts}).
    """
    cols = 3
    rows = (len(fields) + cols - 1) // cols
    width, height = cols * panel_width, rows * panel_height + 30
    parts = []
    for idx, (name, edges, by_cluster) in enumerate(fields):
        r, col = divmod(idx, cols)
        ox, oy = col * panel_width, r * panel_height + 30
        peak = max((max(counts) if len(counts) else 1) for counts in by_cluster.values())
        c = _Canvas((float(edges[0]), float(edges[-1])), (0.0, float(peak) * 1.1 + 1e-9),
                    name, "", "count", width=panel_width, height=panel_height,
                    origin=(ox, oy))
        for ci, cl in enumerate(cluster_labels):
            counts = by_cluster.get(cl)
            if counts is None:
                continue
            color = PALETTE[ci % len(PALETTE)]
            for b, count in enumerate(counts):
                if count > 0:
                    c.vbar(edges[b], edges[b + 1], count, color, opacity=0.45)
        parts.extend(c.parts)
    for ci, cl in enumerate(cluster_labels):
        color = PALETTE[ci % len(PALETTE)]
        parts.append(f'<text x="{10 + ci * 110}" y="18" font-size="12" '
                     f'fill="{color}">&#9632; cluster {cl}</text>')
    _write_svg(path, parts, width=width, height=height)


def svg_consensus(path, n_values, ensemble_scores, pair_min=None, pair_max=None,
                  title="consensus score vs neighborhood size"):
    xs = np.asarray(n_values, dtype=float)
    ys = np.asarray(ensemble_scores, dtype=float)
    ymax = max(1.0, float(ys.max()) * 1.05)
    c = _Canvas((float(xs.min()), float(xs.max())), (0.0, ymax), title,
                "neighborhood size n", "consensus")
    if pair_min is not None and pair_max is not None:
        c.band(xs, np.asarray(pair_min, dtype=float), np.asarray(pair_max, dtype=float),
               PALETTE[0])
    c.polyline(xs, ys, PALETTE[0])
    for x, y in zip(xs, ys):
        c.circle(x, y, PALETTE[0], r=3)
    _write_svg(path, c.parts)
