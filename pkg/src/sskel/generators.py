"""Polygon families for tests and benchmarks.

``random_polygon``: a star polygon on a jittered circle with ``r``
non-adjacent vertices pulled inward so that exactly they are reflex.

``tight_polygon``: a tall polygon whose left side is a long convex chain
of near-vertical edges and whose top carries ``r`` small asymmetric dips.
Every vertical cut crosses a large share of the chain faces, which is the
costly case for the vertical stage.
"""
from __future__ import annotations

import math

import numpy as np

from .geom import DegenerateInput, GeometryError, Polygon, check_simple, validate
from .motorcycle import motorcycle_graph


def unit_square() -> Polygon:
    return Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])


def rectangle(w: float = 4.0, h: float = 2.0) -> Polygon:
    return Polygon([(0, 0), (w, 0), (w, h), (0, h)])


def regular_polygon(k: int = 6, radius: float = 1.0, phase: float = 0.0) -> Polygon:
    a = phase + 2 * np.pi * np.arange(k) / k
    return Polygon(np.column_stack([radius * np.cos(a), radius * np.sin(a)]))


def irregular_l() -> Polygon:
    """L-shaped hexagon without parallel opposite edges (one reflex vertex)."""
    return Polygon([(0, 0), (3, 0.2), (3, 1.1), (1.5, 1), (1.6, 2.5), (0, 2.4)])


def _acceptable(poly: Polygon, r: int) -> bool:
    try:
        check_simple(poly)
    except GeometryError:
        return False
    if poly.r != r or not validate(poly, auto_rotate=False).ok:
        return False
    try:
        motorcycle_graph(poly)
    except DegenerateInput:
        return False
    return True


def random_polygon(n: int, r: int, seed: int | None = None, hole: bool = False, max_tries: int = 200) -> Polygon:
    """Star polygon with n vertices of which exactly r are reflex.

    With ``hole`` a small triangle is cut out near the centre; its three
    vertices are reflex too, so ``r`` counts them and must be at least 3.
    Degenerate draws are rejected and redrawn.
    """
    notches = r - 3 if hole else r
    if notches < 0 or notches > n // 2 or n < 3:
        raise ValueError(f"cannot place {r} reflex vertices on {n} vertices")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        theta = np.sort((np.arange(n) + rng.uniform(-0.3, 0.3, n)) * 2 * np.pi / n + rng.uniform(0, 2 * np.pi))
        rad = np.ones(n)  # on the circle every un-notched vertex stays convex
        # non-adjacent notch positions: pick from a shuffled half-lattice
        pick = _non_adjacent(rng, n, notches)
        for i in pick:
            prv, nxt = theta[i - 1], theta[(i + 1) % n]
            half = ((nxt - prv) % (2 * np.pi)) / 2
            chord = min(rad[i - 1], rad[(i + 1) % n]) * math.cos(half)
            rad[i] = min(rng.uniform(0.6, 0.85), 0.95 * chord)
        pts = np.column_stack([rad * np.cos(theta), rad * np.sin(theta)])
        holes = []
        if hole:
            inner = 0.5 * float(rad.min())
            a = rng.uniform(0, 2 * np.pi) + np.array([0.0, 2.1, 4.3])
            holes = [np.column_stack([0.3 * inner * np.cos(a), 0.3 * inner * np.sin(a)])]
        poly = Polygon(pts, holes)
        if _acceptable(poly, r):
            return poly
    raise DegenerateInput(f"no valid polygon with n={n}, r={r} after {max_tries} draws")


def _non_adjacent(rng, n: int, k: int) -> list[int]:
    if k == 0:
        return []
    for _ in range(1000):
        cand = rng.choice(n, size=k, replace=False)
        s = set(int(c) for c in cand)
        if all((c + 1) % n not in s for c in s):
            return sorted(s)
    return list(range(0, 2 * k, 2))


def tight_polygon(n: int, r: int, seed: int | None = 0, width: float = 1.0) -> Polygon:
    """Tall polygon: a convex left chain of near-vertical edges and r
    reflex dips along the top. Needs n >= 2r + 4."""
    m = n - 2 * r - 2  # edges on the left chain
    if r < 0 or m < 1:
        raise ValueError(f"tight family needs n >= 2r + 4 (got n={n}, r={r})")
    rng = np.random.default_rng(seed)
    W, H = width, 2.0 * width
    for _ in range(50):
        pts = [(W, 0.0), (W, H)]
        # top from right to left: dip tip, then shoulder; last shoulder is the corner
        xs = np.linspace(W, 0.0, r + 1)
        for k in range(r):
            x0, x1 = xs[k], xs[k + 1]
            gap = x0 - x1
            tip_x = x1 + gap * rng.uniform(0.3, 0.45)
            depth = gap * rng.uniform(0.2, 0.4)
            pts.append((tip_x, H - depth))
            sh_y = H + gap * rng.uniform(-0.05, 0.05) if k + 1 < r else H
            pts.append((x1, sh_y))
        if r == 0:
            pts.append((0.0, H))
        # left chain from top to bottom, bulging outward
        eps = 0.02
        for i in range(1, m):
            y = H * (1 - i / m)
            pts.append((-eps * W * math.sin(math.pi * i / m), y))
        pts.append((0.0, 0.0))
        P = np.array(pts)
        # shear so no edge is vertical, then a slight tilt of the bottom
        P[:, 0] += 0.05 * P[:, 1]
        P[:, 1] += 0.01 * P[:, 0]
        poly = Polygon(P)
        if _acceptable(poly, r):
            return poly
    raise DegenerateInput(f"no valid tight polygon for n={n}, r={r}")


FAMILIES = {"random": random_polygon, "tight": tight_polygon}
