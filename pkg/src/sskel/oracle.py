"""Reference straight skeleton by direct wavefront simulation.

This is the classical quadratic method: the shrinking polygon is kept as
cycles of wavefront vertices, and at every step all candidate edge events
(an edge shrinks to a point) and split events (a reflex vertex reaches a
wavefront edge) are recomputed and the earliest one applied. It depends on
nothing but the geometry core, so agreement with the slab pipeline is
independent evidence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geom import DegenerateInput, Polygon, point_segment_distance
from .skeleton import BOUNDARY, RIDGE, VALLEY, Skeleton, build_skeleton

MAX_VERTICES = 64


@dataclass
class _WaveVertex:
    in_edge: int
    out_edge: int
    origin: tuple[float, float]
    t0: float
    vel: tuple[float, float] | None
    reflex: bool
    prev: int = -1
    next: int = -1


class _Wavefront:
    def __init__(self, polygon: Polygon):
        v = polygon.vertices
        w = v[polygon.next_vertex]
        d = w - v
        ln = np.hypot(d[:, 0], d[:, 1])
        self.normal = np.stack([-d[:, 1] / ln, d[:, 0] / ln], axis=1)
        self.offset = np.einsum("ij,ij->i", self.normal, v)  # n.p = offset + t
        self.verts: dict[int, _WaveVertex] = {}
        self.arcs: list[tuple] = []
        self._next_id = 0
        ids = []
        for i in range(polygon.n):
            prv = int(polygon.prev_vertex[i])
            ids.append(self._new(prv, i, tuple(v[i]), 0.0))
        for i in range(polygon.n):
            self.verts[ids[i]].next = ids[int(polygon.next_vertex[i])]
            self.verts[ids[i]].prev = ids[int(polygon.prev_vertex[i])]

    def _new(self, a: int, b: int, origin, t0: float) -> int:
        na, nb = self.normal[a], self.normal[b]
        det = na[0] * nb[1] - na[1] * nb[0]
        dot = na[0] * nb[0] + na[1] * nb[1]
        if abs(det) > 1e-12:
            vel = ((nb[1] - na[1]) / det, (na[0] - nb[0]) / det)
        elif dot > 0:
            vel = (float(na[0]), float(na[1]))
        else:
            vel = None
        # reflex iff the wavefront turns right at this vertex
        reflex = det < -1e-12
        vid = self._next_id
        self._next_id += 1
        self.verts[vid] = _WaveVertex(a, b, (float(origin[0]), float(origin[1])), t0, vel, reflex)
        return vid

    def pos(self, vid: int, t: float):
        wv = self.verts[vid]
        if wv.vel is None:
            return wv.origin
        return (wv.origin[0] + wv.vel[0] * (t - wv.t0), wv.origin[1] + wv.vel[1] * (t - wv.t0))

    def _finish(self, vid: int, point, t: float):
        wv = self.verts.pop(vid)
        label = VALLEY if wv.reflex else RIDGE
        self.arcs.append(((*wv.origin, wv.t0), (point[0], point[1], t), label))

    def cycle(self, vid: int) -> list[int]:
        out = [vid]
        k = self.verts[vid].next
        while k != vid:
            out.append(k)
            k = self.verts[k].next
        return out

    # -- candidate events ----------------------------------------------------

    def edge_events(self, now: float):
        ids = list(self.verts)
        if not ids:
            return None
        A = np.array([self.verts[i].in_edge for i in ids])
        B = np.array([self.verts[i].out_edge for i in ids])
        C = np.array([self.verts[self.verts[i].next].out_edge for i in ids])
        M = np.zeros((len(ids), 3, 3))
        rhs = np.zeros((len(ids), 3))
        for k, E in enumerate((A, B, C)):
            M[:, k, :2] = self.normal[E]
            M[:, k, 2] = -1.0
            rhs[:, k] = self.offset[E]
        det = np.linalg.det(M)
        ok = np.abs(det) > 1e-12
        best = None
        if np.any(ok):
            sol = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
            for k, (x, y, t) in zip(np.flatnonzero(ok), sol):
                if t >= now - 1e-9 and (best is None or t < best[0]):
                    best = (max(t, now), "edge", ids[k], (x, y))
        return best

    def split_events(self, now: float):
        reflex = [i for i, wv in self.verts.items() if wv.reflex and wv.vel is not None]
        if not reflex:
            return None
        edges = [(a, wv.next) for a, wv in self.verts.items()]
        E = np.array([self.verts[a].out_edge for a, _ in edges])
        nE, cE = self.normal[E], self.offset[E]
        best = None
        for u in reflex:
            wu = self.verts[u]
            o = np.array(wu.origin) - np.array(wu.vel) * wu.t0  # position at t = 0 along the ray
            vel = np.array(wu.vel)
            nv = nE @ vel
            no = nE @ o
            dist_now = no + nv * now - cE - now
            den = nv - 1.0
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (cE - no) / den
            cand = (den < -1e-12) & (dist_now >= -1e-9) & (t > now - 1e-12)
            for k in np.flatnonzero(cand):
                a, b = edges[k]
                if E[k] in (wu.in_edge, wu.out_edge) or u in (a, b):
                    continue
                tk = float(t[k])
                if tk - wu.t0 < 1e-10 or (best is not None and tk >= best[0]):
                    continue
                if self.verts[a].vel is None or self.verts[b].vel is None:
                    continue
                x = o + vel * tk
                pa, pb = self.pos(a, tk), self.pos(b, tk)
                dE = (nE[k][1], -nE[k][0])
                sa = (x[0] - pa[0]) * dE[0] + (x[1] - pa[1]) * dE[1]
                sb = (pb[0] - x[0]) * dE[0] + (pb[1] - x[1]) * dE[1]
                if sa < -1e-9 or sb < -1e-9:
                    continue
                if min(sa, sb) < 1e-9:
                    hit = a if sa < sb else b
                    if hit in (wu.prev, wu.next):
                        continue  # the neighbouring edge collapses here; an edge event covers it
                    # only an error if nothing happens earlier
                    best = (max(tk, now), "vertex", u, (float(x[0]), float(x[1])), (a, b))
                    continue
                best = (max(tk, now), "split", u, (float(x[0]), float(x[1])), (a, b))
        return best

    # -- event handling ------------------------------------------------------

    def apply_edge(self, u: int, point, t: float):
        wu = self.verts[u]
        w = wu.next
        cyc = self.cycle(u)
        if len(cyc) <= 3:
            for k in cyc:
                self._finish(k, point, t)
            return
        p, n = wu.prev, self.verts[w].next
        a, c = wu.in_edge, self.verts[w].out_edge
        self._finish(u, point, t)
        self._finish(w, point, t)
        x = self._new(a, c, point, t)
        self._link(p, x)
        self._link(x, n)

    def apply_split(self, u: int, point, t: float, ab):
        a, b = ab
        wu = self.verts[u]
        p, n = wu.prev, wu.next
        E = self.verts[a].out_edge
        x1 = self._new(wu.in_edge, E, point, t)
        x2 = self._new(E, wu.out_edge, point, t)
        self._finish(u, point, t)
        self._link(p, x1)
        self._link(x1, b)
        self._link(a, x2)
        self._link(x2, n)
        for x in (x1, x2):
            if x in self.verts and len(self.cycle(x)) <= 2:
                for k in self.cycle(x):
                    self._finish(k, point, t)

    def _link(self, a: int, b: int):
        self.verts[a].next = b
        self.verts[b].prev = a


def oracle_skeleton(polygon: Polygon, max_vertices: int = MAX_VERTICES, tol: float = 1e-9) -> Skeleton:
    """Straight skeleton of ``polygon`` by wavefront simulation.

    Vertex heights are event times. Edges traced by reflex wavefront
    vertices are labelled valleys, all others ridges; polygon edges are
    included with the boundary label.
    """
    if polygon.n > max_vertices:
        raise ValueError(f"oracle limited to {max_vertices} vertices (got {polygon.n})")
    wf = _Wavefront(polygon)
    now = 0.0
    for _ in range(20 * polygon.n + 100):
        if not wf.verts:
            break
        ev = wf.edge_events(now)
        sp = wf.split_events(now)
        if sp is not None and (ev is None or sp[0] < ev[0]):
            ev = sp
        if ev is None:
            raise DegenerateInput("wavefront stalled with vertices left")
        now = ev[0]
        if ev[1] == "vertex":
            raise DegenerateInput(f"split event hits a wavefront vertex at t={now:.6g}")
        if ev[1] == "edge":
            wf.apply_edge(ev[2], ev[3], now)
        else:
            wf.apply_split(ev[2], ev[3], now, ev[4])
    else:
        raise DegenerateInput("wavefront simulation did not terminate")
    segs = [(p, q, lab) for p, q, lab in wf.arcs]
    for i in range(polygon.n):
        p, q = polygon.edge(i)
        segs.append(((p[0], p[1], 0.0), (q[0], q[1], 0.0), BOUNDARY))
    return build_skeleton(segs, tol=tol, provenance="oracle")


# ---------------------------------------------------------------------------
# comparison


@dataclass
class ComparisonReport:
    hausdorff: float
    max_height_deviation: float
    matched_edges: int
    edges_a: int
    edges_b: int

    def ok(self, tol: float) -> bool:
        return self.hausdorff <= tol and self.max_height_deviation <= tol

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _sample(segs: np.ndarray, per_edge: int = 9) -> np.ndarray:
    if len(segs) == 0:
        return np.zeros((0, 2))
    s = np.linspace(0.0, 1.0, per_edge)
    p, q = segs[:, 0, :2], segs[:, 1, :2]
    return (p[:, None, :] + s[None, :, None] * (q - p)[:, None, :]).reshape(-1, 2)


def _dist_to_segments(points: np.ndarray, segs: np.ndarray) -> np.ndarray:
    if len(segs) == 0:
        return np.full(len(points), np.inf)
    a, b = segs[:, 0, :2], segs[:, 1, :2]
    d = b - a
    ll = np.maximum(np.einsum("ij,ij->i", d, d), 1e-300)
    out = np.empty(len(points))
    for start in range(0, len(points), 2048):
        P = points[start:start + 2048]
        w = P[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("pij,ij->pi", w, d) / ll, 0.0, 1.0)
        diff = w - t[..., None] * d[None, :, :]
        out[start:start + 2048] = np.sqrt(np.min(np.einsum("pij,pij->pi", diff, diff), axis=1))
    return out


def compare_skeletons(a: Skeleton, b: Skeleton, tol: float = 1e-6) -> ComparisonReport:
    """Symmetric Hausdorff distance between the interior edge sets, per-edge
    matching by endpoints, and the largest height mismatch between vertices
    at matching positions."""
    sa, sb = a.segments(), b.segments()
    pa, pb = _sample(sa), _sample(sb)
    h = 0.0
    if len(pa) or len(pb):
        h = max(
            float(_dist_to_segments(pa, sb).max(initial=0.0)),
            float(_dist_to_segments(pb, sa).max(initial=0.0)),
        )
    from scipy.spatial import cKDTree

    dev = 0.0
    va, vb = a.vertices, b.vertices
    if len(va) and len(vb):
        dist, idx = cKDTree(vb[:, :2]).query(va[:, :2])
        near = dist <= 10 * max(tol, 1e-9)
        if np.any(near):
            dev = float(np.abs(va[near, 2] - vb[idx[near], 2]).max())
    matched = 0
    if len(sa) and len(sb):
        keys_b = {_edge_key(s) for s in sb}
        matched = sum(_edge_key(s) in keys_b for s in sa)
    return ComparisonReport(h, dev, matched, len(sa), len(sb))


def _edge_key(seg) -> tuple:
    p = (round(float(seg[0, 0]), 6), round(float(seg[0, 1]), 6))
    q = (round(float(seg[1, 0]), 6), round(float(seg[1, 1]), 6))
    return (p, q) if p <= q else (q, p)


def clearance(polygon: Polygon, p) -> float:
    return min(point_segment_distance(p, a, b) for a, b in polygon.edges())
