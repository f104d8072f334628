"""Standalone SVG scatter plots of real vs generated 2D samples.

The data viewport is fixed to [-1.5, 1.5]^2 and mapped onto a square canvas
of ``SIZE`` pixels: ``px = (x + 1.5) / 3 * SIZE`` and
``py = (1.5 - y) / 3 * SIZE`` (SVG's y axis points down).  Coordinates are
written with 9 significant digits so output is byte-stable.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

VIEW = 1.5
SIZE = 600
REAL_STYLE = 'fill="#9bb7d4" fill-opacity="0.35"'
GEN_STYLE = 'fill="#d62728" fill-opacity="0.8"'


def to_canvas(x: float, y: float, size: int = SIZE) -> tuple[float, float]:
    return (x + VIEW) / (2 * VIEW) * size, (VIEW - y) / (2 * VIEW) * size


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def _circles(points: np.ndarray, r: float, style: str, size: int) -> list[str]:
    out = []
    for x, y in points:
        cx, cy = to_canvas(float(x), float(y), size)
        out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" {style}/>')
    return out


def render_scatter(points_real, points_generated, path: str | Path, title: str | None = None,
                   size: int = SIZE) -> Path:
    """Write real samples as faint background markers and generated ones as red dots."""
    real = np.asarray(points_real, dtype=np.float64).reshape(-1, 2)
    gen = np.asarray(points_generated, dtype=np.float64).reshape(-1, 2)
    if len(real) == 0 or len(gen) == 0:
        raise ValueError("render_scatter needs non-empty real and generated point sets")
    c = _fmt(size / 2)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
    ]
    if title:
        esc = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        lines.append(f"<title>{esc}</title>")
    lines += [
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<line x1="0" y1="{c}" x2="{size}" y2="{c}" stroke="#dddddd"/>',
        f'<line x1="{c}" y1="0" x2="{c}" y2="{size}" stroke="#dddddd"/>',
        '<g id="real">', *_circles(real, 2.0, REAL_STYLE, size), "</g>",
        '<g id="generated">', *_circles(gen, 1.5, GEN_STYLE, size), "</g>",
        "</svg>",
    ]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
