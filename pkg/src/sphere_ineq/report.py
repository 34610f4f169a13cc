"""Deterministic CSV / JSON / SVG emission.

Every file starts with a provenance comment naming the package version and
a hash of the run configuration. Floats are written with ``repr`` so that
a value read back is bit-identical; lines end in LF.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

from ._version import __version__

__all__ = ["config_hash", "header_line", "format_value", "write_csv", "write_json", "svg_line_chart", "write_text"]


def config_hash(config: dict) -> str:
    """First 16 hex digits of the sha256 of the canonical JSON config."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def header_line(config: dict) -> str:
    return f"sphere_ineq {__version__} config={config_hash(config)}"


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "value") and isinstance(getattr(v, "value"), str):  # enums
        return v.value
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if hasattr(v, "value") and isinstance(getattr(v, "value"), str):
        return v.value
    return v


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def write_csv(path: Path, rows: list[dict], columns: list[str], config: dict) -> Path:
    buf = io.StringIO()
    buf.write(f"# {header_line(config)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row.get(c)) for c in columns])
    return write_text(path, buf.getvalue())


def write_json(path: Path, rows: list[dict], columns: list[str], config: dict) -> Path:
    doc = {
        "meta": {"generator": f"sphere_ineq {__version__}", "config": config_hash(config), "columns": columns},
        "rows": [{c: _json_value(row.get(c)) for c in columns} for row in rows],
    }
    return write_text(path, json.dumps(doc, indent=1) + "\n")


def svg_line_chart(
    xs,
    ys,
    config: dict,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    marker: float | None = None,
    marker_label: str = "",
    width: int = 640,
    height: int = 400,
) -> str:
    """Minimal line chart: frame, zero line, polyline, tick labels and a vertical marker."""
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    left, right, top, bottom = 70, 20, 40, 50
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys + [0.0]), max(ys + [0.0])
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (y1 - y) / (y1 - y0) * ph

    def f(v):
        return f"{v:.2f}"

    pts = " ".join(f"{f(sx(x))},{f(sy(y))}" for x, y in zip(xs, ys))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- {header_line(config)} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<line x1="{left}" y1="{f(sy(0.0))}" x2="{left + pw}" y2="{f(sy(0.0))}" stroke="gray" stroke-dasharray="4 3"/>',
        f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>',
    ]
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{f(sx(xv))}" y="{top + ph + 18}" font-size="11" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{left - 6}" y="{f(sy(yv) + 4)}" font-size="11" text-anchor="end">{yv:.3g}</text>')
    if marker is not None:
        mx = f(sx(marker))
        out.append(f'<line x1="{mx}" y1="{top}" x2="{mx}" y2="{top + ph}" stroke="#b22222"/>')
        out.append(f'<circle cx="{mx}" cy="{f(sy(0.0))}" r="3.5" fill="#b22222"/>')
        out.append(f'<text x="{mx}" y="{top - 6}" font-size="12" text-anchor="middle" fill="#b22222">{escape(marker_label)}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="18" font-size="14" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
