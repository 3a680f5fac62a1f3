"""Motorcycle graph induced by a polygon, by brute-force event simulation.

One motorcycle leaves every reflex vertex with that vertex's shrinking
velocity. A motorcycle halts when it reaches the boundary or a point
another motorcycle passed strictly earlier. All O(r^2) candidate crashes
are computed up front and replayed in time order, discarding candidates
invalidated by earlier stops.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .geom import DegenerateInput, Polygon, get_eps, vertex_velocity


@dataclass(frozen=True)
class Motorcycle:
    id: int
    vertex: int  # reflex vertex of the polygon it starts from
    start: tuple[float, float]
    velocity: tuple[float, float]
    in_edge: int  # polygon edge ending at the start vertex
    out_edge: int  # polygon edge leaving the start vertex

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)

    def position(self, t: float) -> tuple[float, float]:
        return (self.start[0] + t * self.velocity[0], self.start[1] + t * self.velocity[1])


@dataclass
class GraphVertex:
    xy: tuple[float, float]
    kind: str  # "start" | "crash-on-track" | "crash-on-boundary"
    arrivals: dict[int, float]  # motorcycle id -> time it passes this point
    edge: int | None = None  # polygon edge hit, for boundary crashes


@dataclass
class Track:
    owner: int
    start: int  # vertex index
    stop: int  # vertex index
    stop_time: float


@dataclass
class MotorcycleGraph:
    """Tracks of all motorcycles, with arrival times (the lifted graph)."""

    motorcycles: list[Motorcycle]
    vertices: list[GraphVertex] = field(default_factory=list)
    tracks: list[Track] = field(default_factory=list)

    def track_of(self, mid: int) -> Track:
        return self.tracks[mid]

    def segment(self, mid: int):
        t = self.tracks[mid]
        return self.vertices[t.start].xy, self.vertices[t.stop].xy

    def edges(self):
        """Planar edges: tracks split at the crash points lying on them.

        Yields ``(owner, p, q, time_p, time_q)``.
        """
        on_track: dict[int, list[tuple[float, int]]] = {m.id: [] for m in self.motorcycles}
        for k, v in enumerate(self.vertices):
            if v.kind == "crash-on-track":
                for mid, t in v.arrivals.items():
                    if self.tracks[mid].stop != k:
                        on_track[mid].append((t, k))
        for tr in self.tracks:
            pts = [(0.0, tr.start), *sorted(on_track[tr.owner]), (tr.stop_time, tr.stop)]
            for (ta, a), (tb, b) in zip(pts, pts[1:]):
                yield tr.owner, self.vertices[a].xy, self.vertices[b].xy, ta, tb

    def to_json(self) -> dict:
        return {
            "vertices": [
                {
                    "xy": list(v.xy),
                    "kind": v.kind,
                    "arrivals": {str(k): t for k, t in v.arrivals.items()},
                }
                for v in self.vertices
            ],
            "edges": [
                {"owner": o, "from": list(p), "to": list(q), "t_from": a, "t_to": b}
                for o, p, q, a, b in self.edges()
            ],
        }


def induce_motorcycles(polygon: Polygon) -> list[Motorcycle]:
    """One motorcycle per reflex vertex, moving with the vertex's velocity."""
    out = []
    for i in np.flatnonzero(polygon.reflex):
        i = int(i)
        prv = int(polygon.prev_vertex[i])
        vel = vertex_velocity(polygon.edge(prv), polygon.edge(i))
        out.append(Motorcycle(len(out), i, tuple(map(float, polygon.vertices[i])), vel, prv, i))
    return out


def _boundary_hits(polygon: Polygon, motorcycles: list[Motorcycle]):
    """First boundary point hit by each motorcycle: (time, edge index)."""
    a = polygon.vertices
    b = a[polygon.next_vertex]
    s = b - a
    out = []
    for m in motorcycles:
        p = np.array(m.start)
        d = np.array(m.velocity)
        den = d[0] * s[:, 1] - d[1] * s[:, 0]
        w = a - p
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w[:, 0] * s[:, 1] - w[:, 1] * s[:, 0]) / den
            u = (w[:, 0] * d[1] - w[:, 1] * d[0]) / den
        ok = (np.abs(den) > 1e-15) & (u >= 0.0) & (u <= 1.0) & (t > 1e-12)
        ok[m.in_edge] = ok[m.out_edge] = False
        if not np.any(ok):
            raise DegenerateInput(f"motorcycle {m.id} never reaches the boundary")
        j = int(np.argmin(np.where(ok, t, np.inf)))
        out.append((float(t[j]), j))
    return out


def simulate(motorcycles: list[Motorcycle], polygon: Polygon) -> MotorcycleGraph:
    """Run all motorcycles until each hits the boundary or an earlier track."""
    eps = get_eps()
    graph = MotorcycleGraph(list(motorcycles))
    r = len(motorcycles)
    if r == 0:
        return graph
    bhits = _boundary_hits(polygon, motorcycles)
    P = np.array([m.start for m in motorcycles])
    V = np.array([m.velocity for m in motorcycles])
    # pairwise ray crossings: P_i + t_i V_i = P_j + t_j V_j
    den = V[:, None, 0] * V[None, :, 1] - V[:, None, 1] * V[None, :, 0]
    w = P[None, :, :] - P[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ti = (w[..., 0] * V[None, :, 1] - w[..., 1] * V[None, :, 0]) / den
        tj = (w[..., 0] * V[:, None, 1] - w[..., 1] * V[:, None, 0]) / den
    heap: list[tuple[float, int, int, float]] = []  # (t_i, i, j, t_j); j = -1 for boundary
    for i in range(r):
        heapq.heappush(heap, (bhits[i][0], i, -1, 0.0))
        for j in range(r):
            if i == j or not np.isfinite(ti[i, j]) or abs(den[i, j]) < 1e-14:
                continue
            a, b = ti[i, j], tj[i, j]
            if a <= eps or b < -eps or a >= bhits[i][0] or b >= bhits[j][0]:
                continue
            if abs(a - b) <= eps:
                raise DegenerateInput(f"motorcycles {i} and {j} reach a point simultaneously")
            if b < a:
                heapq.heappush(heap, (float(a), i, j, float(max(b, 0.0))))
    stop_time = [math.inf] * r
    stop_info: list[tuple | None] = [None] * r
    while heap:
        t, i, j, t_other = heapq.heappop(heap)
        if stop_info[i] is not None:
            continue
        if j >= 0 and stop_time[j] < t_other:
            continue  # j halted before reaching the crossing
        stop_time[i] = t
        stop_info[i] = ("boundary", bhits[i][1]) if j < 0 else ("track", j, t_other)
    # build vertices: starts then stops
    for m in motorcycles:
        graph.vertices.append(GraphVertex(m.start, "start", {m.id: 0.0}))
    for m in motorcycles:
        info = stop_info[m.id]
        xy = m.position(stop_time[m.id])
        if info[0] == "boundary":
            gv = GraphVertex(xy, "crash-on-boundary", {m.id: stop_time[m.id]}, edge=info[1])
        else:
            gv = GraphVertex(xy, "crash-on-track", {info[1]: info[2], m.id: stop_time[m.id]})
        graph.vertices.append(gv)
        graph.tracks.append(Track(m.id, m.id, r + m.id, stop_time[m.id]))
    return graph


def arrival_height(graph: MotorcycleGraph, p, motorcycle: int | None = None) -> float:
    """Time at which a motorcycle reaches point ``p`` of its track.

    Without ``motorcycle``, the earliest arrival over all tracks through
    ``p`` is returned. Raises ValueError when ``p`` is on no track.
    """
    tol = 1e-7
    best = math.inf
    ids = [motorcycle] if motorcycle is not None else [m.id for m in graph.motorcycles]
    for mid in ids:
        m = graph.motorcycles[mid]
        tr = graph.tracks[mid]
        sp2 = m.velocity[0] ** 2 + m.velocity[1] ** 2
        t = ((p[0] - m.start[0]) * m.velocity[0] + (p[1] - m.start[1]) * m.velocity[1]) / sp2
        q = m.position(t)
        scale = max(1.0, math.sqrt(sp2) * tr.stop_time)
        if math.hypot(p[0] - q[0], p[1] - q[1]) <= tol * scale and -tol <= t <= tr.stop_time + tol:
            best = min(best, max(t, 0.0))
    if best == math.inf:
        raise ValueError(f"point {tuple(p)} is not on the motorcycle graph")
    return best


def motorcycle_graph(polygon: Polygon) -> MotorcycleGraph:
    return simulate(induce_motorcycles(polygon), polygon)
