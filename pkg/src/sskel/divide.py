"""Recursive drivers: vertical cuts through median conflicting vertices,
then balanced chord cuts along extended valleys, then per-leaf solves.

Every processed cell leaves a record in ``RecursionStats``; leaves leave a
fragment (faces and interior skeleton edges) in ``kp.fragments``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.geometry.polygon import orient

from .envelope import envelope_planes
from .geom import Plane
from .subdivision import (
    KP,
    CellRecord,
    Ring,
    SubdivisionError,
    _first_hit,
    _side_tag,
    cut_edges,
    planar_faces,
    simplify_ring,
    split_cell,
    tag_runs,
    vertical_cut_segments,
    _corner_contains,
)

EMPTY, WEDGE, CONVEX = "empty", "wedge", "convex"


@dataclass
class CellStat:
    cell: int
    parent: int
    stage: str  # "vertical" or "valley"
    depth: int
    v: int
    r: int
    face_list: int
    kind: str
    child_v: list = field(default_factory=list)
    child_r: list = field(default_factory=list)
    sides: tuple | None = None


@dataclass
class RecursionStats:
    cells: list[CellStat] = field(default_factory=list)
    envelope_work: int = 0
    nonconvex_leaves: int = 0

    @property
    def depth_dv(self) -> int:
        return max((c.depth for c in self.cells if c.stage == "vertical" and c.kind == "vertical"), default=-1) + 1

    @property
    def depth_dval(self) -> int:
        return max((c.depth for c in self.cells if c.stage == "valley" and c.kind in ("valley", "diagonal")), default=-1) + 1

    @property
    def cells_total(self) -> int:
        return len(self.cells)

    @property
    def conflict_sum(self) -> int:
        return sum(c.v for c in self.cells if c.stage == "vertical")

    @property
    def face_list_total(self) -> int:
        return sum(c.face_list for c in self.cells)

    def leaves(self) -> list[CellStat]:
        return [c for c in self.cells if c.kind in (EMPTY, WEDGE, CONVEX)]

    def to_json(self) -> dict:
        return {
            "depth_dv": self.depth_dv,
            "depth_dval": self.depth_dval,
            "cells_total": self.cells_total,
            "envelope_work": self.envelope_work,
            "conflict_sum": self.conflict_sum,
            "face_list_total": self.face_list_total,
            "nonconvex_leaves": self.nonconvex_leaves,
            "cells": [c.__dict__ for c in self.cells],
        }


@dataclass
class Fragment:
    cell: int
    kind: str
    faces: list  # (slab id, [outer ring array, hole arrays...])
    edges: list  # (p, q, left slab, right slab)


# ---------------------------------------------------------------------------
# leaves


def _plane(kp: KP, sid: int) -> Plane:
    a, b, c = kp.slabset.coef[sid]
    return Plane(float(a), float(b), float(c))


def classify(kp: KP, cell: CellRecord) -> str | None:
    """``EMPTY`` for a cell inside one face, ``WEDGE`` for a cell split by a
    single ridge segment between two faces, else None."""
    s = cell.slabs
    if len(s) == 1:
        return EMPTY
    if len(s) == 2 and len(cell.rings) == 1:
        a, b = int(s[0]), int(s[1])
        if kp.plane_group[a] == kp.plane_group[b] or kp.slabset.same_vertex_pair(a, b):
            return None
        if len(tag_runs(cell.outer.tin)) == 2 and _wedge_points(kp, cell) is not None:
            return WEDGE
    return None


def _wedge_points(kp: KP, cell: CellRecord):
    tin = cell.outer.tin
    change = np.flatnonzero(tin != np.roll(tin, 1))
    if len(change) != 2:
        return None
    i1, i2 = int(change[0]), int(change[1])
    pa, pb = _plane(kp, int(tin[i1])), _plane(kp, int(tin[i2]))
    tol = 1e3 * kp.tol
    for i in (i1, i2):
        p = cell.outer.pts[i]
        if abs(pa(*p) - pb(*p)) > tol:
            return None
    return i1, i2


def solve_leaf(kp: KP, cell: CellRecord, kind: str) -> Fragment:
    """Skeleton inside an empty cell (nothing) or a wedge (one ridge segment)."""
    if kind == EMPTY:
        sid = int(cell.slabs[0])
        return Fragment(cell.id, kind, [(sid, [r.pts for r in cell.rings])], [])
    i1, i2 = _wedge_points(kp, cell)
    pts, tin = cell.outer.pts, cell.outer.tin
    m = len(pts)
    t1, t2 = int(tin[i1]), int(tin[i2])
    idx1 = [(i1 + k) % m for k in range((i2 - i1) % m + 1)]
    idx2 = [(i2 + k) % m for k in range((i1 - i2) % m + 1)]
    faces = [(t1, [pts[idx1]]), (t2, [pts[idx2]])]
    edges = [(pts[i2].copy(), pts[i1].copy(), t1, t2)]
    return Fragment(cell.id, kind, faces, edges)


def _shapely_parts(geom) -> list:
    if geom.is_empty:
        return []
    if geom.geom_type == "Polygon":
        return [geom]
    if hasattr(geom, "geoms"):
        return [g for sub in geom.geoms for g in _shapely_parts(sub)]
    return []


def _is_convex(pts: np.ndarray, tol: float) -> bool:
    prv = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    d0, d1 = pts - prv, nxt - pts
    crs = d0[:, 0] * d1[:, 1] - d0[:, 1] * d1[:, 0]
    return bool(np.all(crs >= -tol * np.maximum(np.hypot(*d0.T), np.hypot(*d1.T))))


def solve_convex(kp: KP, cell: CellRecord, stats: RecursionStats | None = None) -> Fragment:
    """Lower envelope of the cell's planes, then faces sharing a plane are
    split along the flat edges that separate their slabs."""
    tol = kp.tol
    ids = [int(s) for s in cell.slabs]
    groups: dict[int, list[int]] = {}
    for s in ids:
        groups.setdefault(int(kp.plane_group[s]), []).append(s)
    planes = [(_plane(kp, mem[0]), mem[0]) for mem in groups.values()]
    outer = cell.outer.pts
    convex = len(cell.rings) == 1 and _is_convex(outer, tol)
    cell_poly = ShapelyPolygon(outer, [r.pts for r in cell.rings[1:]])
    if convex:
        region = outer
    else:
        if stats is not None:
            stats.nonconvex_leaves += 1
        region = np.asarray(cell_poly.convex_hull.exterior.coords)[:-1][::-1]
        region = np.asarray(orient(ShapelyPolygon(region), 1.0).exterior.coords)[:-1]
    patch = envelope_planes(planes, region, tol=tol)
    kp.envelope_work += len(planes)
    big = 4 * kp.scale
    faces = []
    for rep, F in patch.faces.items():
        poly = ShapelyPolygon(F)
        if not convex:
            poly = poly.intersection(cell_poly)
        members = groups[int(kp.plane_group[rep])]
        if len(members) == 1:
            pieces = [(rep, p) for p in _shapely_parts(poly)]
        else:
            pieces = []
            for s in members:
                q0, q1, u = kp.slabset.q0[s], kp.slabset.q1[s], kp.slabset.u[s]
                strip = ShapelyPolygon([q0, q1, q1 + big * u, q0 + big * u])
                if not strip.is_valid:
                    strip = strip.buffer(0)
                pieces += [(s, p) for p in _shapely_parts(poly.intersection(strip))]
        for s, p in pieces:
            if p.area <= tol * tol:
                continue
            p = orient(p, 1.0)
            faces.append((s, [np.asarray(p.exterior.coords)[:-1], *[np.asarray(h.coords)[:-1] for h in p.interiors]]))
    # interior edges: face sides not on the cell boundary
    bsegs = cell.segments()
    edges = []
    delta = 100 * tol
    allv = np.vstack([l for _, loops in faces for l in loops]) if faces else np.zeros((0, 2))
    for s, loops in faces:
        for loop in loops:
            P, Q = loop, np.roll(loop, -1, axis=0)
            mids = (P + Q) / 2
            onb = _near_segments(mids, bsegs, 10 * tol)
            for k in np.flatnonzero(~onb):
                # pieces of a neighbouring same-plane face can end inside this side
                for a, b in _split_at(P[k], Q[k], allv, 10 * tol):
                    _, right = _side_tag(kp, ids, a, b, delta)
                    if right != s:
                        edges.append((a, b, s, right))
    return Fragment(cell.id, CONVEX, faces, edges)


def _split_at(a, b, pts: np.ndarray, tol: float) -> list[tuple]:
    """Segment ab cut at the points of ``pts`` lying in its interior."""
    d = b - a
    L = float(np.hypot(*d))
    if L <= tol:
        return []
    w = pts - a
    t = (w @ d) / (L * L)
    off = np.abs(w[:, 0] * d[1] - w[:, 1] * d[0]) / L
    inner = np.unique(t[(off <= tol) & (t * L > tol) & ((1 - t) * L > tol)])
    ts = [0.0, *inner.tolist(), 1.0]
    return [(a + t0 * d, a + t1 * d) for t0, t1 in zip(ts, ts[1:]) if (t1 - t0) * L > tol]


def _near_segments(pts: np.ndarray, segs: np.ndarray, tol: float) -> np.ndarray:
    A, B = segs[:, 0], segs[:, 1]
    d = B - A
    L2 = np.maximum((d * d).sum(axis=1), 1e-300)
    out = np.zeros(len(pts), bool)
    for k0 in range(0, len(pts), 256):
        P = pts[k0:k0 + 256]
        w = P[:, None, :] - A[None]
        t = np.clip((w * d[None]).sum(axis=2) / L2[None], 0, 1)
        diff = w - t[..., None] * d[None]
        out[k0:k0 + 256] = np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=1) <= tol
    return out


# ---------------------------------------------------------------------------
# valleys and balanced cuts


@dataclass
class ExtendedValley:
    motorcycle: int
    entry: np.ndarray  # where the valley enters the cell
    exit: np.ndarray  # where its extension leaves the cell
    t_entry: float  # track parameters (arrival times)
    t_exit: float


def _envelope_at(kp: KP, ids, p, tol: float) -> float:
    ss = kp.slabset
    ids = np.asarray(ids)
    ab = ss.strip_coords(ids, np.broadcast_to(p, (len(ids), 2)))
    L = np.hypot(*(ss.q1[ids] - ss.q0[ids]).T)
    inside = (ab[:, 0] * L >= -tol) & ((ab[:, 0] - 1) * L <= tol) & (ab[:, 1] >= -tol)
    z = ss.heights(ids, p)
    return float(np.min(np.where(inside, z, np.inf)))


def extend_valleys(kp: KP, cell: CellRecord) -> list[ExtendedValley]:
    """Valleys whose open part lies in the cell, each prolonged along its
    track to the cell boundary by ray shooting."""
    ss = kp.slabset
    tol = kp.tol
    present = set(cell.slabs.tolist())
    bsegs = cell.segments()
    out = []
    for m in kp.graph.motorcycles:
        a, b = ss.motorcycle_slabs(m.id)
        if a not in present or b not in present:
            continue
        start = np.array(m.start)
        vel = np.array(m.velocity)
        stop_t = kp.graph.tracks[m.id].stop_time
        dirn = vel / m.speed
        best = None
        for ring in cell.rings:
            w = ring.pts - start
            t = (w @ vel) / (m.speed ** 2)
            off = np.abs(w[:, 0] * dirn[1] - w[:, 1] * dirn[0])
            cand = np.flatnonzero((off <= 10 * tol) & (t >= -tol) & (t <= stop_t + tol))
            for i in cand:
                pt = ring.pts[i]
                if not _corner_contains(ring.pts[i - 1], pt, ring.pts[(i + 1) % len(ring)], dirn):
                    continue
                probe = pt + dirn * 1e3 * tol
                zm = float(ss.heights([a], probe)[0])
                if zm > _envelope_at(kp, cell.slabs, probe, tol) + 1e3 * tol:
                    continue
                if best is None or t[i] > best[1]:
                    best = (pt, float(t[i]))
        if best is None:
            continue
        pt, t_in = best
        far = pt + dirn * 4 * kp.scale
        th = _first_hit(pt, far, bsegs, tol)
        if th is None or th == 0.0:
            raise SubdivisionError(f"extended valley of motorcycle {m.id} does not leave the cell")
        ex = pt + th * (far - pt)
        t_out = float((ex - start) @ vel / m.speed ** 2)
        out.append(ExtendedValley(m.id, pt, ex, t_in, t_out))
    return out


def _fan(ring: Ring, tol: float):
    """Triangles of a convex ring as vertex index triples (fan from vertex 0),
    or None when the ring is not convex."""
    if not _is_convex(ring.pts, tol):
        return None
    m = len(ring)
    return [(0, j, j + 1) for j in range(1, m - 1)]


def _ear_clip(pts: np.ndarray):
    """Triangulation of a simple counterclockwise polygon by ear clipping."""
    idx = list(range(len(pts)))
    tris = []

    def is_ear(i):
        a, b, c = pts[idx[i - 1]], pts[idx[i]], pts[idx[(i + 1) % len(idx)]]
        if (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) <= 0:
            return False
        for j in idx:
            if j in (idx[i - 1], idx[i], idx[(i + 1) % len(idx)]):
                continue
            p = pts[j]
            d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
            d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
            if d1 >= 0 and d2 >= 0 and d3 >= 0:
                return False
        return True

    while len(idx) > 3:
        for i in range(len(idx)):
            if is_ear(i):
                tris.append((idx[i - 1], idx[i], idx[(i + 1) % len(idx)]))
                idx.pop(i)
                break
        else:
            raise SubdivisionError("ear clipping failed")
    tris.append(tuple(idx))
    return tris


@dataclass
class BalancedCut:
    kind: str  # "valley" or "diagonal"
    valley: ExtendedValley | None
    p: np.ndarray
    q: np.ndarray
    sides: tuple[int, int]


def balanced_cut(kp: KP, cell: CellRecord, valleys: list[ExtendedValley]) -> BalancedCut:
    """A chord leaving at most 2r/3 extended valleys on each side.

    The cell is cut along all extended valleys, each region triangulated,
    and the dual tree (valley chords as weight-1 nodes) cut at its weighted
    centroid.
    """
    r = len(valleys)
    if r == 1:
        v = valleys[0]
        return BalancedCut("valley", v, v.entry, v.exit, (0, 0))
    tol = kp.tol
    base = [Ring(rg.pts, np.full(len(rg), -10), np.full(len(rg), -10)) for rg in cell.rings]
    chords = [(v.entry, v.exit, k, k) for k, v in enumerate(valleys)]
    regions, holes = planar_faces(base, chords, tol)
    if holes:
        raise SubdivisionError("valley stage reached a cell with a hole")
    # nodes: triangles first, then one node per valley chord
    tri_nodes: list = []
    adj: dict[int, list] = {}
    edge_id = 0
    chord_tris: dict[int, list[int]] = {k: [] for k in range(r)}

    def link(a, b, geom):
        nonlocal edge_id
        adj.setdefault(a, []).append((b, edge_id, geom))
        adj.setdefault(b, []).append((a, edge_id, geom))
        edge_id += 1

    for reg in regions:
        reg = simplify_ring(reg, tol)
        tris = _fan(reg, tol)
        if tris is None:
            tris = _ear_clip(reg.pts)
        m = len(reg)
        ids = []
        for tri in tris:
            ids.append(len(tri_nodes))
            tri_nodes.append(tri)
            adj.setdefault(ids[-1], [])
        # shared diagonals between triangles of this region
        owner: dict[tuple, int] = {}
        for node, tri in zip(ids, tris):
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                if (b - a) % m == 1 or (a - b) % m == 1:
                    lo = a if (b - a) % m == 1 else b
                    tag = int(reg.tin[lo])
                    if tag >= 0:
                        chord_tris[tag].append(node)
                    continue
                if key in owner:
                    link(owner[key], node, ("diagonal", reg.pts[a].copy(), reg.pts[b].copy()))
                else:
                    owner[key] = node
    T = len(tri_nodes)
    weight = [0] * T + [1] * r
    for k in range(r):
        for node in sorted(set(chord_tris[k])):
            link(T + k, node, ("valley", k))
    W = r
    # weighted centroid by one walk from the root
    n_nodes = T + r
    parent = [-1] * n_nodes
    order = []
    seen = [False] * n_nodes
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        order.append(u)
        for v, _, _ in adj.get(u, []):
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                stack.append(v)
    if not all(seen):
        raise SubdivisionError("dual tree of the valley regions is disconnected")
    sub = weight[:]
    for u in reversed(order):
        if parent[u] >= 0:
            sub[parent[u]] += sub[u]
    u = 0
    while True:
        kids = [(v, eid) for v, eid, _ in adj[u] if parent[v] == u]
        if not kids:
            break
        v, _ = max(kids, key=lambda ve: (sub[ve[0]], -ve[1]))
        if sub[v] * 2 > W:
            u = v
        else:
            break

    def comp(u, v):
        return sub[v] if parent[v] == u else W - sub[u]

    if u >= T:
        k = u - T
        ws = sorted((comp(u, v) for v, _, _ in adj[u]), reverse=True)
        ws = (ws + [0, 0])[:2]
        v = valleys[k]
        return BalancedCut("valley", v, v.entry, v.exit, (ws[0], ws[1]))
    v, eid, geom = max(adj[u], key=lambda t: (comp(u, t[0]), -t[1]))
    w = comp(u, v)
    if geom[0] == "valley":
        val = valleys[geom[1]]
        return BalancedCut("valley", val, val.entry, val.exit, (w - 1, W - w))
    return BalancedCut("diagonal", None, geom[1], geom[2], (w, W - w))


# ---------------------------------------------------------------------------
# drivers


def _record(stats, cell, stage, depth, v, r, kind, children=(), sides=None, child_r=None):
    st = CellStat(cell.id, cell.parent, stage, depth, v, r, cell.face_list_size, kind,
                  [int(len(c.conflicts)) for c in children], list(child_r or []), sides)
    stats.cells.append(st)
    return st


def median_vertex(kp: KP, conflicts: np.ndarray) -> int:
    """Median of the conflict list in (x, y, id) order."""
    P = kp.gverts[conflicts]
    order = np.lexsort((conflicts, P[:, 1], P[:, 0]))
    return int(conflicts[order[(len(conflicts) - 1) // 2]])


def cut_abscissa(kp: KP, conflicts: np.ndarray) -> float:
    """x of the vertical cut through the median conflict vertex.

    A cut through a reflex polygon vertex would meet its flat edges, valley
    and both boundary edges at one point, so in that case the line is moved
    halfway to the next conflict abscissa. The median still ends up left.
    """
    g = median_vertex(kp, conflicts)
    x0 = float(kp.gverts[g, 0])
    starts = np.array([m.start for m in kp.graph.motorcycles]).reshape(-1, 2)
    if len(starts) == 0 or np.min(np.hypot(*(starts - kp.gverts[g]).T)) > kp.tol:
        return x0
    xs = np.unique(kp.gverts[conflicts, 0])
    right = xs[xs > x0 + kp.tol]
    if len(right):
        return 0.5 * (x0 + float(right[0]))
    left = xs[xs < x0 - kp.tol]
    return 0.5 * (x0 + float(left[-1])) if len(left) else x0


def divide_vertical(kp: KP, root: CellRecord, stats: RecursionStats) -> None:
    stack = [root]
    while stack:
        cell = stack.pop()
        kind = classify(kp, cell)
        if kind is not None:
            kp.fragments.append(solve_leaf(kp, cell, kind))
            cell.kind = kind
            _record(stats, cell, "vertical", cell.depth_dv, len(cell.conflicts), 0, kind)
            continue
        if len(cell.conflicts) == 0:
            divide_valley(kp, cell, stats)
            continue
        x0 = cut_abscissa(kp, cell.conflicts)
        segs = vertical_cut_segments(cell, x0, kp.tol)
        if not segs:
            raise SubdivisionError(f"vertical line x={x0} misses cell {cell.id}")
        lines = [((x0, 0.0), (0.0, 1.0), a, b) for a, b in segs]
        edges = cut_edges(kp, cell, lines)
        children = split_cell(kp, cell, edges, cell.depth_dv + 1, cell.depth_dval)
        cell.kind = "vertical"
        _record(stats, cell, "vertical", cell.depth_dv, len(cell.conflicts), 0, "vertical", children)
        if len(children) == 1 and len(children[0].conflicts) == len(cell.conflicts):
            raise SubdivisionError("vertical cut made no progress")
        stack.extend(reversed(children))


def divide_valley(kp: KP, root: CellRecord, stats: RecursionStats) -> None:
    stack = [root]
    while stack:
        cell = stack.pop()
        depth = cell.depth_dval
        if len(cell.slabs) == 1:
            kp.fragments.append(solve_leaf(kp, cell, EMPTY))
            cell.kind = EMPTY
            _record(stats, cell, "valley", depth, 0, 0, EMPTY)
            continue
        valleys = extend_valleys(kp, cell)
        if not valleys:
            kp.fragments.append(solve_convex(kp, cell, stats))
            cell.kind = CONVEX
            _record(stats, cell, "valley", depth, 0, 0, CONVEX)
            continue
        cut = balanced_cut(kp, cell, valleys)
        if cut.kind == "valley":
            m = kp.graph.motorcycles[cut.valley.motorcycle]
            lines = [(m.start, m.velocity, cut.valley.t_entry, cut.valley.t_exit)]
        else:
            lines = [(cut.p, cut.q - cut.p, 0.0, 1.0)]
        edges = cut_edges(kp, cell, lines)
        children = split_cell(kp, cell, edges, cell.depth_dv, depth + 1)
        child_r = [len(extend_valleys(kp, c)) if len(c.slabs) > 1 else 0 for c in children]
        cell.kind = cut.kind
        _record(stats, cell, "valley", depth, 0, len(valleys), cut.kind, children, cut.sides, child_r)
        stack.extend(reversed(children))


def run_divide(kp: KP) -> RecursionStats:
    """Process the root cell of ``kp`` down to leaves."""
    stats = RecursionStats()
    kp.fragments = []
    root = kp.cells[0]
    divide_vertical(kp, root, stats)
    stats.envelope_work = kp.envelope_work
    return stats
