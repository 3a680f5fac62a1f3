"""SVG output for skeletons and for the subdivision K(P).

Each edge label class becomes a single ``<path>`` element with its own
style, so a viewer (or a test) can pick classes out by ``class``.
"""
from __future__ import annotations

from xml.sax.saxutils import quoteattr

import numpy as np

from .geom import Polygon
from .skeleton import BOUNDARY, FLAT, RIDGE, VALLEY, Skeleton

STYLES = {
    BOUNDARY: "stroke:#222;stroke-width:2;fill:none",
    RIDGE: "stroke:#c0392b;stroke-width:1.2;fill:none",
    VALLEY: "stroke:#2471a3;stroke-width:1.2;fill:none",
    FLAT: "stroke:#7d7d7d;stroke-width:1;stroke-dasharray:4 3;fill:none",
    "cell": "stroke:#27ae60;stroke-width:0.6;fill:none",
}


class _Frame:
    """Maps model coordinates into a fixed-size viewport, y pointing up."""

    def __init__(self, pts: np.ndarray, size: float = 600.0, margin: float = 20.0):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
        self.lo, self.hi = lo, hi
        self.k = (size - 2 * margin) / span
        self.margin = margin
        self.w = (hi[0] - lo[0]) * self.k + 2 * margin
        self.h = (hi[1] - lo[1]) * self.k + 2 * margin

    def __call__(self, p) -> str:
        x = (p[0] - self.lo[0]) * self.k + self.margin
        y = (self.hi[1] - p[1]) * self.k + self.margin
        return f"{x:.3f},{y:.3f}"


def _path(frame: _Frame, segs, cls: str) -> str:
    d = " ".join(f"M{frame(a)} L{frame(b)}" for a, b in segs)
    return f"<path class={quoteattr(cls)} style={quoteattr(STYLES[cls])} d={quoteattr(d)}/>"


def skeleton_svg(skel: Skeleton, polygon: Polygon | None = None, cells=None, size: float = 600.0) -> str:
    """SVG document for ``skel``.

    ``polygon`` adds boundary edges when the skeleton has none; ``cells`` is
    an optional list of rings (coordinate arrays) drawn as a thin overlay.
    """
    by_label: dict[str, list] = {}
    V = skel.vertices[:, :2] if len(skel.vertices) else np.zeros((0, 2))
    for i, j, lab in skel.edges:
        by_label.setdefault(lab, []).append((V[i], V[j]))
    if polygon is not None and BOUNDARY not in by_label:
        by_label[BOUNDARY] = [tuple(e) for e in polygon.edges()]
    if cells:
        by_label["cell"] = [(ring[k], ring[(k + 1) % len(ring)]) for ring in cells for k in range(len(ring))]
    pts = [np.asarray(s, float) for segs in by_label.values() for s in segs]
    pts = np.concatenate(pts).reshape(-1, 2) if pts else np.zeros((1, 2))
    frame = _Frame(pts, size)
    body = [_path(frame, by_label[lab], lab) for lab in (BOUNDARY, "cell", FLAT, VALLEY, RIDGE) if by_label.get(lab)]
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{frame.w:.1f}" height="{frame.h:.1f}" '
        f'viewBox="0 0 {frame.w:.1f} {frame.h:.1f}">\n  ' + "\n  ".join(body) + "\n</svg>\n"
    )


def kp_rings(kp) -> list[np.ndarray]:
    """Boundary rings of every leaf cell of ``kp``."""
    return [ring.pts for cell in kp.leaves() for ring in cell.rings]
