"""Edge slabs and motorcycle slabs whose lower envelope is the roof terrain.

A slab is a slope-1 half-strip: a base segment swept along an ascent
direction. We keep it in projection (base segment + ascent direction)
together with its supporting plane, so membership is a 2D strip test.

Slab ids: edge slab ``i`` has id ``i`` (the polygon edge index); the
motorcycle from reflex vertex ``v`` with id ``k`` owns slabs ``n + 2k``
(plane of the edge entering ``v``) and ``n + 2k + 1`` (edge leaving ``v``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import Plane, Polygon, edge_plane, get_eps
from .motorcycle import MotorcycleGraph

EDGE = 0
MOTORCYCLE = 1


@dataclass(frozen=True)
class Slab:
    id: int
    kind: int  # EDGE or MOTORCYCLE
    base: tuple[tuple[float, float], tuple[float, float]]
    ascent: tuple[float, float]  # unit inward normal of the source polygon edge
    plane: Plane
    edge: int  # polygon edge whose plane this slab lies in
    motorcycle: int = -1
    base_heights: tuple[float, float] = (0.0, 0.0)

    @property
    def side_rays(self):
        (p, q), u = self.base, self.ascent
        return (p, u), (q, u)


class SlabSet:
    """All ``n + 2r`` slabs, with vectorised geometry arrays."""

    def __init__(self, slabs: list[Slab], n_edges: int):
        self.slabs = slabs
        self.n_edges = n_edges
        self.q0 = np.array([s.base[0] for s in slabs], dtype=float).reshape(-1, 2)
        self.q1 = np.array([s.base[1] for s in slabs], dtype=float).reshape(-1, 2)
        self.u = np.array([s.ascent for s in slabs], dtype=float).reshape(-1, 2)
        self.coef = np.array([(s.plane.a, s.plane.b, s.plane.c) for s in slabs], dtype=float).reshape(-1, 3)
        self.kind = np.array([s.kind for s in slabs], dtype=int)
        self.edge = np.array([s.edge for s in slabs], dtype=int)
        self.motorcycle = np.array([s.motorcycle for s in slabs], dtype=int)
        d = self.q1 - self.q0
        det = d[:, 0] * self.u[:, 1] - d[:, 1] * self.u[:, 0]
        self._inv = np.stack(
            [
                np.stack([self.u[:, 1], -self.u[:, 0]], axis=1) / det[:, None],
                np.stack([-d[:, 1], d[:, 0]], axis=1) / det[:, None],
            ],
            axis=1,
        )  # maps p - q0 to (a, b) with p = q0 + a*d + b*u

    def __len__(self):
        return len(self.slabs)

    def __getitem__(self, i) -> Slab:
        return self.slabs[i]

    def motorcycle_slabs(self, mid: int) -> tuple[int, int]:
        return self.n_edges + 2 * mid, self.n_edges + 2 * mid + 1

    def partner(self, sid: int) -> int:
        """The other motorcycle slab of the same reflex vertex."""
        k = sid - self.n_edges
        return self.n_edges + (k ^ 1)

    def same_vertex_pair(self, a: int, b: int) -> bool:
        return a != b and a >= self.n_edges and b >= self.n_edges and (a - self.n_edges) // 2 == (b - self.n_edges) // 2

    def strip_coords(self, ids, p) -> np.ndarray:
        """(a, b) strip coordinates of point(s) ``p`` in slabs ``ids``."""
        ids = np.asarray(ids)
        w = np.asarray(p, dtype=float) - self.q0[ids]
        return np.einsum("kij,kj->ki", self._inv[ids], w)

    def heights(self, ids, p) -> np.ndarray:
        ids = np.asarray(ids)
        c = self.coef[ids]
        return c[:, 0] * p[0] + c[:, 1] * p[1] + c[:, 2]

    def line_intervals(self, ids, origin, direction):
        """Parameter intervals where the line origin + t*direction meets each slab.

        Returns (lo, hi, z0, slope) arrays; empty intersections have lo > hi.
        """
        ids = np.asarray(ids, dtype=int)
        inv = self._inv[ids]
        w0 = np.asarray(origin, dtype=float) - self.q0[ids]
        ab0 = np.einsum("kij,kj->ki", inv, w0)
        dab = np.einsum("kij,j->ki", inv, np.asarray(direction, dtype=float))
        lo = np.full(len(ids), -np.inf)
        hi = np.full(len(ids), np.inf)
        dnorm = float(np.hypot(direction[0], direction[1]))
        length = np.hypot(*(self.q1[ids] - self.q0[ids]).T)
        eps = get_eps()
        for col, lower, upper in ((0, 0.0, 1.0), (1, 0.0, np.inf)):
            c0, dc = ab0[:, col], dab[:, col]
            # a runs over [0, 1] along the base, b is a distance
            scale = length if col == 0 else np.ones(len(ids))
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = (lower - c0) / dc
                tb = (upper - c0) / dc
            moving = np.abs(dc * scale) > 1e-12 * dnorm
            lo = np.where(moving, np.maximum(lo, np.minimum(ta, tb)), lo)
            hi = np.where(moving, np.minimum(hi, np.maximum(ta, tb)), hi)
            inside = (c0 * scale >= lower * scale - eps) & (c0 * scale <= upper * scale + eps)
            dead = ~moving & ~inside
            lo = np.where(dead, np.inf, lo)
            hi = np.where(dead, -np.inf, hi)
        c = self.coef[ids]
        z0 = c[:, 0] * origin[0] + c[:, 1] * origin[1] + c[:, 2]
        slope = c[:, 0] * direction[0] + c[:, 1] * direction[1]
        return lo, hi, z0, slope


def build_slabs(polygon: Polygon, graph: MotorcycleGraph) -> SlabSet:
    """n edge slabs followed by two motorcycle slabs per reflex vertex."""
    slabs: list[Slab] = []
    for i in range(polygon.n):
        p, q = polygon.edge(i)
        pl = edge_plane(p, q)
        slabs.append(Slab(i, EDGE, (tuple(map(float, p)), tuple(map(float, q))), (pl.a, pl.b), pl, i))
    n = polygon.n
    if len(graph.tracks) != len(graph.motorcycles):
        raise ValueError("motorcycle graph is missing tracks")
    for m in graph.motorcycles:
        start, stop = graph.segment(m.id)
        t_stop = graph.tracks[m.id].stop_time
        for k, e in enumerate((m.in_edge, m.out_edge)):
            pl = slabs[e].plane
            slabs.append(
                Slab(n + 2 * m.id + k, MOTORCYCLE, (start, stop), (pl.a, pl.b), pl, e, m.id, (0.0, t_stop))
            )
    return SlabSet(slabs, n)


def height_at(slab: Slab, p, tol: float | None = None) -> float | None:
    """Plane height at ``p`` if ``p`` lies in the slab's projection, else None."""
    tol = get_eps() if tol is None else tol
    (q0, q1), u = slab.base, slab.ascent
    d = (q1[0] - q0[0], q1[1] - q0[1])
    det = d[0] * u[1] - d[1] * u[0]
    w = (p[0] - q0[0], p[1] - q0[1])
    a = (w[0] * u[1] - w[1] * u[0]) / det
    b = (d[0] * w[1] - d[1] * w[0]) / det
    length = (d[0] ** 2 + d[1] ** 2) ** 0.5
    if a < -tol / length or a > 1 + tol / length or b < -tol:
        return None
    return slab.plane(p[0], p[1])


def envelope_heights(slabset: SlabSet, points, tol: float = 1e-12):
    """Lower envelope of all slabs at many points; returns (heights, argmin ids)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    w = pts[None, :, :] - slabset.q0[:, None, :]
    ab = np.einsum("kij,kpj->kpi", slabset._inv, w)
    length = np.hypot(*(slabset.q1 - slabset.q0).T)[:, None]
    inside = (ab[..., 0] >= -tol / length) & (ab[..., 0] <= 1 + tol / length) & (ab[..., 1] >= -tol)
    c = slabset.coef
    z = c[:, 0, None] * pts[None, :, 0] + c[:, 1, None] * pts[None, :, 1] + c[:, 2, None]
    z = np.where(inside, z, np.inf)
    k = np.argmin(z, axis=0)
    return z[k, np.arange(len(pts))], k


def terrain_height_oracle(slabset: SlabSet, p, polygon: Polygon | None = None) -> float:
    """Terrain height at an interior point: the minimum over all slabs above it."""
    if polygon is not None and not polygon.contains(p):
        raise ValueError(f"point {tuple(p)} is outside the polygon")
    z, _ = envelope_heights(slabset, [p])
    return float(z[0])
