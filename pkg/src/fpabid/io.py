"""CSV and SVG writers for experiment reports, trajectories and benchmarks."""
from __future__ import annotations

import csv
import math
from html import escape
from pathlib import Path

from .policy import TRAJECTORY_FIELDS

REPORT_FIELDS = ("knob", "T", "K", "mean_reward", "stderr", "benchmark", "relative_error", "policy")
BENCHMARK_FIELDS = ("instance-id", "benchmark-kind", "value", "mu_star", "slack")


def fmt(x) -> str:
    """12 significant digits for floats, ``str`` for everything else."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return "" if math.isnan(x) else f"{x:.12g}"
    return str(x)


def _write_rows(path, header, rows):
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) for v in r])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit_csv(report, path):
    """Write an experiment report, one row per (knob, policy)."""
    rows = report.rows if hasattr(report, "rows") else report
    return _write_rows(path, REPORT_FIELDS, rows)


def emit_trajectory(records, path):
    return _write_rows(path, TRAJECTORY_FIELDS, records)


def emit_benchmarks(rows, path):
    """Rows of ``(instance_id, kind, value, mu_star, slack)``; blanks allowed."""
    return _write_rows(path, BENCHMARK_FIELDS, rows)


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def render_svg(report, title: str = "", width: int = 640, height: int = 400) -> str:
    """Static line chart of relative error against the knob, one line per policy."""
    rows = report.rows if hasattr(report, "rows") else report
    policies = sorted({r.policy for r in rows})
    ml, mr, mt, mb = 70, 150, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = [r.knob for r in rows] or [0.0, 1.0]
    ys = [r.relative_error for r in rows if not math.isnan(r.relative_error)] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0
    sx = lambda x: ml + (x - x0) / (x1 - x0) * pw
    sy = lambda y: mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{ml + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
           f'{escape(title)}</text>',
           f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
           f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>']
    for i in range(5):
        xv, yv = x0 + (x1 - x0) * i / 4, y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{mt + ph + 18}" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{ml - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">knob</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">relative error</text>')
    for k, pol in enumerate(policies):
        color = _COLORS[k % len(_COLORS)]
        pts = sorted((r.knob, r.relative_error) for r in rows
                     if r.policy == pol and not math.isnan(r.relative_error))
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        out.extend(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>'
                   for x, y in pts)
        ly = mt + 10 + 18 * k
        out.append(f'<line x1="{ml + pw + 12}" y1="{ly}" x2="{ml + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 38}" y="{ly + 4}">{escape(pol)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(report, path, title: str = ""):
    path = Path(path)
    try:
        path.write_text(render_svg(report, title))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
