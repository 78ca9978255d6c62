"""Dependency-free SVG emission for the training plots.

One circle per data point and one <g> element per contour level; contours
are traced by marching squares over a logit grid. Coordinates are written
with fixed precision so repeated runs emit identical bytes.
"""

from __future__ import annotations

import numpy as np

_POS_COLOR = "#3366cc"
_NEG_COLOR = "#cc3333"
_LEVEL_COLORS = ("#222222", "#777777", "#bbbbbb")


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _segments_for_level(grid: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                        level: float):
    """Marching-squares line segments of the iso-line grid == level."""
    segments = []
    rows, cols = grid.shape

    def interp(va, vb, pa, pb):
        t = (level - va) / (vb - va)
        return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

    for i in range(rows - 1):
        for j in range(cols - 1):
            corners = (
                (grid[i, j], (xs[j], ys[i])),
                (grid[i, j + 1], (xs[j + 1], ys[i])),
                (grid[i + 1, j + 1], (xs[j + 1], ys[i + 1])),
                (grid[i + 1, j], (xs[j], ys[i + 1])),
            )
            points = []
            for (va, pa), (vb, pb) in zip(corners, corners[1:] + corners[:1]):
                above_a, above_b = va > level, vb > level
                if above_a != above_b:
                    points.append(interp(va, vb, pa, pb))
            if len(points) >= 2:
                segments.append((points[0], points[1]))
            if len(points) == 4:  # saddle cell: keep both crossings
                segments.append((points[2], points[3]))
    return segments


def render_scatter_contour(
    points: np.ndarray,
    labels: np.ndarray,
    logit_fn,
    levels=(0.0,),
    grid_n: int = 200,
    extent: float | None = None,
    size: int = 480,
) -> str:
    """SVG with the data scatter and decision contours of ``logit_fn``.

    ``logit_fn`` maps (N, 2) points to logits; contours are traced on a
    grid_n x grid_n grid over a square extent covering the data.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    if extent is None:
        extent = float(np.max(np.abs(points))) * 1.1 + 1e-9
    xs = np.linspace(-extent, extent, grid_n)
    ys = np.linspace(-extent, extent, grid_n)
    mesh = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    grid = np.asarray(logit_fn(mesh)).reshape(grid_n, grid_n)

    def to_px(p):
        x = (p[0] + extent) / (2 * extent) * size
        y = (extent - p[1]) / (2 * extent) * size
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for k, level in enumerate(levels):
        color = _LEVEL_COLORS[k % len(_LEVEL_COLORS)]
        parts.append(f'<g class="contour" data-level="{_fmt(level)}" '
                     f'stroke="{color}" stroke-width="1.5" fill="none">')
        path = []
        for (a, b) in _segments_for_level(grid, xs, ys, level):
            ax, ay = to_px(a)
            bx, by = to_px(b)
            path.append(f"M{_fmt(ax)} {_fmt(ay)}L{_fmt(bx)} {_fmt(by)}")
        parts.append(f'<path d="{"".join(path)}"/>')
        parts.append("</g>")
    parts.append('<g class="points">')
    for p, lab in zip(points, labels):
        x, y = to_px(p)
        color = _POS_COLOR if lab > 0 else _NEG_COLOR
        parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.5" fill="{color}" '
            f'fill-opacity="0.75"/>'
        )
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
