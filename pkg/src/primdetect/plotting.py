"""Minimal SVG rendering of patches coloured by cluster."""
from __future__ import annotations

from xml.sax.saxutils import quoteattr

import numpy as np

from .geometry import CloudDataset, CompositeCurve, LabeledDataset, sample_points

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    "#bcbd22", "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173", "#3182bd", "#e6550d",
)
UNCLUSTERED = "#9a9a9a"
CURVE_POINTS = 64
SURFACE_POINTS = 9
MARGIN = 0.05
CANVAS = 512


def _polylines(item):
    """Polylines (k, n) approximating one patch or cloud."""
    if isinstance(item, np.ndarray):
        return [item]
    if isinstance(item, CompositeCurve) or item.param_dim == 1:
        return [sample_points(item, CURVE_POINTS)]
    grid = sample_points(item, SURFACE_POINTS).reshape(SURFACE_POINTS, SURFACE_POINTS, -1)
    # outline plus interior iso-lines
    return [grid[i] for i in range(SURFACE_POINTS)] + [grid[:, j] for j in range(SURFACE_POINTS)]


def _items(dataset):
    if isinstance(dataset, CloudDataset):
        return [c.points for c in dataset.clouds]
    if isinstance(dataset, LabeledDataset):
        return list(dataset.patches)
    return list(dataset)


def render_svg(dataset, assignment=None, *, fit: bool = True) -> str:
    """SVG text with one ``<path>`` per patch.

    ``assignment[i]`` is the cluster of patch ``i`` (negative or ``None`` for
    unclustered patches, drawn gray).  3D data is projected onto the XY plane
    and drawn back to front by mean z.  With ``fit`` the drawing is scaled into
    [-1, 1]^2 first; the viewBox is [-1, 1]^2 plus a 5% margin.
    """
    items = _items(dataset)
    lines = [_polylines(it) for it in items]
    if lines:
        allpts = np.vstack([pl for group in lines for pl in group])
        lo, hi = allpts[:, :2].min(axis=0), allpts[:, :2].max(axis=0)
        span = float(np.max(hi - lo))
        scale = 2.0 / span if fit and span > 0 else 1.0
        mid = (lo + hi) / 2 if fit else np.zeros(2)
    order = list(range(len(items)))
    if lines and lines[0][0].shape[1] == 3:
        order.sort(key=lambda i: float(np.mean([pl[:, 2].mean() for pl in lines[i]])))

    ext = 1.0 + MARGIN * 2
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="{-ext:g} {-ext:g} {2 * ext:g} {2 * ext:g}">',
        f'<g fill="none" stroke-width="{0.006:g}" stroke-linecap="round">',
    ]
    for i in order:
        cid = None if assignment is None else int(assignment[i])
        color = UNCLUSTERED if cid is None or cid < 0 else PALETTE[cid % len(PALETTE)]
        d = []
        for pl in lines[i]:
            xy = (pl[:, :2] - mid) * scale
            xy[:, 1] = -xy[:, 1]  # SVG y points down
            d.append("M" + " L".join(f"{x:.5f},{y:.5f}" for x, y in xy))
        out.append(f'<path data-patch="{i}" stroke={quoteattr(color)} d="{" ".join(d)}"/>')
    out += ["</g>", "</svg>"]
    return "\n".join(out) + "\n"


def save_svg(dataset, path, assignment=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(dataset, assignment))
