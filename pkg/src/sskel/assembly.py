"""Gluing leaf fragments into the refined skeleton S' and the skeleton S.

S' is the straight skeleton of the slab terrain: its faces are the n edge
slabs plus the 2r motorcycle slabs. Each reflex vertex contributes two flat
edges separating an edge face from the motorcycle face in the same plane;
removing them gives S.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

from .divide import RecursionStats, run_divide
from .geom import (
    ROTATION_ANGLE,
    DegenerateInput,
    GeometryError,
    Plane,
    Polygon,
    check_simple,
    get_eps,
    rotate,
    validate,
    vertex_velocity,
)
from .motorcycle import MotorcycleGraph, motorcycle_graph
from .skeleton import BOUNDARY, FLAT, RIDGE, VALLEY, Skeleton, build_skeleton
from .slabs import SlabSet, build_slabs
from .subdivision import KP, NO_FACE, SubdivisionError, VerticalSkeletonEdge, init_kp

log = logging.getLogger(__name__)


@dataclass
class SkeletonResult:
    """Everything a run produces, in the caller's coordinates."""

    skeleton: Skeleton  # S
    refined: Skeleton  # S'
    polygon: Polygon
    graph: MotorcycleGraph
    slabset: SlabSet
    stats: RecursionStats
    rotation: float = 0.0
    flat_removed: int = 0
    kp: KP | None = field(default=None, repr=False)

    def height(self, pts) -> np.ndarray:
        return interpolate_height(self.refined, pts)

    def offset(self, t: float) -> list[dict]:
        return offset_polygon(self.refined, t)


# ---------------------------------------------------------------------------
# assembly


def _label(kp: KP, a: int, b: int) -> str:
    if a == NO_FACE or b == NO_FACE:
        return BOUNDARY
    if kp.plane_group[a] == kp.plane_group[b]:
        return FLAT
    if kp.slabset.same_vertex_pair(a, b):
        return VALLEY
    return RIDGE


def _union_intervals(items, tol):
    """Merge collinear pieces: ``items`` are (t0, t1); returns merged list."""
    items = sorted(items)
    out = [list(items[0])]
    for a, b in items[1:]:
        if a <= out[-1][1] + tol:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return out


def assemble(kp: KP, tol: float | None = None) -> Skeleton:
    """S' from the leaf fragments: interior edges of the leaves plus leaf
    ring edges separating different slabs."""
    tol = 1e-7 * kp.scale if tol is None else tol
    raw = []
    for fr in kp.fragments:
        for p, q, a, b in fr.edges:
            raw.append((np.asarray(p, float), np.asarray(q, float), int(a), int(b)))
    for cell in kp.leaves():
        for ring in cell.rings:
            P, Q = ring.pts, np.roll(ring.pts, -1, axis=0)
            for k in np.flatnonzero(ring.tin != ring.tout):
                raw.append((P[k], Q[k], int(ring.tin[k]), int(ring.tout[k])))
    groups: dict[tuple, list] = {}
    for p, q, a, b in raw:
        if np.hypot(*(q - p)) <= tol:
            continue
        key = (a, b) if a <= b else (b, a)
        if key[0] == NO_FACE:
            key = (key[1], NO_FACE)
        groups.setdefault(key, []).append((p, q))
    ss = kp.slabset
    segs = []
    for (a, b), pieces in groups.items():
        pieces.sort(key=lambda pq: -np.hypot(*(pq[1] - pq[0])))
        lines: list[list] = []  # [origin, unit dir, [(t0, t1)]]
        for p, q in pieces:
            for ln in lines:
                o, d, iv = ln
                off = lambda x: abs((x - o)[0] * d[1] - (x - o)[1] * d[0])
                if off(p) <= 10 * tol and off(q) <= 10 * tol:
                    t0, t1 = float((p - o) @ d), float((q - o) @ d)
                    iv.append((min(t0, t1), max(t0, t1)))
                    break
            else:
                d = (q - p) / np.hypot(*(q - p))
                lines.append([p, d, [(0.0, float(np.hypot(*(q - p))))]])
        lab = _label(kp, a, b)
        c = ss.coef[a]
        for o, d, iv in lines:
            for t0, t1 in _union_intervals(iv, 10 * tol):
                p, q = o + t0 * d, o + t1 * d
                zp = 0.0 if lab == BOUNDARY else c[0] * p[0] + c[1] * p[1] + c[2]
                zq = 0.0 if lab == BOUNDARY else c[0] * q[0] + c[1] * q[1] + c[2]
                if lab != BOUNDARY and b != NO_FACE:
                    c2 = ss.coef[b]
                    dz = max(abs(zp - (c2[0] * p[0] + c2[1] * p[1] + c2[2])), abs(zq - (c2[0] * q[0] + c2[1] * q[1] + c2[2])))
                    if dz > 1e-6 * kp.scale:
                        raise SubdivisionError(f"skeleton edge between slabs {a} and {b} is not on both planes ({dz:.2e})")
                segs.append(((p[0], p[1], zp), (q[0], q[1], zq), lab))
    sk = build_skeleton(segs, tol=10 * tol, provenance="pipeline")
    sk = _split_t_junctions(sk, 10 * tol)
    sk.faces = face_loops(kp, sk)
    return sk


def _split_t_junctions(sk: Skeleton, tol: float) -> Skeleton:
    """Split edges at welded vertices lying in their interior."""
    V = sk.vertices
    out = []
    for i, j, lab in sk.edges:
        a, b = V[i, :2], V[j, :2]
        d = b - a
        L2 = float(d @ d)
        w = V[:, :2] - a
        t = (w @ d) / L2
        dist = np.abs(w[:, 0] * d[1] - w[:, 1] * d[0]) / math.sqrt(L2)
        inner = np.flatnonzero((dist <= tol) & (t * math.sqrt(L2) > tol) & ((1 - t) * math.sqrt(L2) > tol))
        chain = [i, *inner[np.argsort(t[inner])].tolist(), j]
        out += [(u, v, lab) for u, v in zip(chain, chain[1:])]
    seen = set()
    uniq = []
    for u, v, lab in out:
        key = (min(u, v), max(u, v))
        if key not in seen:
            seen.add(key)
            uniq.append((u, v, lab))
    return Skeleton(V, uniq, sk.faces, sk.provenance)


def face_loops(kp: KP, sk: Skeleton | None = None) -> dict:
    """Face of every slab as 3D loops (outer then holes), from the union of
    the leaf pieces tagged with that slab."""
    pieces: dict[int, list] = {}
    for fr in kp.fragments:
        for sid, loops in fr.faces:
            if len(loops[0]) < 3:
                continue
            poly = ShapelyPolygon(loops[0], [l for l in loops[1:] if len(l) >= 3])
            if not poly.is_valid:
                poly = poly.buffer(0)
            pieces.setdefault(int(sid), []).append(poly)
    eps = 1e-9 * kp.scale
    out = {}
    c = kp.slabset.coef
    for sid, polys in sorted(pieces.items()):
        u = unary_union(polys)
        parts = [g for g in getattr(u, "geoms", [u]) if g.geom_type == "Polygon" and g.area > eps * kp.scale]
        if len(parts) > 1:
            u = unary_union(polys).buffer(eps, join_style=2).buffer(-eps, join_style=2)
            parts = [g for g in getattr(u, "geoms", [u]) if g.geom_type == "Polygon" and g.area > eps * kp.scale]
        loops = []
        for g in parts:
            g = orient(g.simplify(0), 1.0)
            for ring in [g.exterior, *g.interiors]:
                xy = np.asarray(ring.coords)[:-1]
                z = c[sid, 0] * xy[:, 0] + c[sid, 1] * xy[:, 1] + c[sid, 2]
                loops.append(np.column_stack([xy, z]))
        out[sid] = loops
    return out


def strip_flat_edges(refined: Skeleton) -> tuple[Skeleton, int]:
    """S from S': drop flat edges, merge each edge face with its motorcycle
    faces, and join collinear edges meeting at the freed degree-2 vertices."""
    keep = [(i, j, lab) for i, j, lab in refined.edges if lab != FLAT]
    removed = len(refined.edges) - len(keep)
    V = refined.vertices
    adj: dict[int, list] = {}
    for k, (i, j, lab) in enumerate(keep):
        adj.setdefault(i, []).append(k)
        adj.setdefault(j, []).append(k)
    alive = [True] * len(keep)
    edges = list(keep)
    for v in list(adj):
        ks = [k for k in adj[v] if alive[k]]
        adj[v] = ks
        if len(ks) != 2:
            continue
        (a1, b1, l1), (a2, b2, l2) = edges[ks[0]], edges[ks[1]]
        if l1 != l2 or l1 == BOUNDARY:
            continue
        u = a1 if b1 == v else b1
        w = a2 if b2 == v else b2
        d0, d1 = V[v, :2] - V[u, :2], V[w, :2] - V[v, :2]
        if abs(d0[0] * d1[1] - d0[1] * d1[0]) > 1e-9 * np.hypot(*d0) * np.hypot(*d1) or d0 @ d1 <= 0:
            continue
        alive[ks[0]] = alive[ks[1]] = False
        edges.append((u, w, l1))
        alive.append(True)
        for x, old in ((u, ks[0]), (w, ks[1])):
            adj[x] = [len(edges) - 1 if k == old else k for k in adj[x]]
        adj[v] = []
    final = [e for e, ok in zip(edges, alive) if ok]
    used = sorted({i for i, j, _ in final} | {j for i, j, _ in final})
    remap = {old: new for new, old in enumerate(used)}
    sk = Skeleton(V[used], [(remap[i], remap[j], lab) for i, j, lab in final], {}, refined.provenance)
    return sk, removed


def merged_faces(refined: Skeleton, slabset: SlabSet) -> dict:
    """Faces of S keyed by polygon edge: each edge face united with its
    motorcycle faces."""
    by_edge: dict[int, list] = {}
    for sid, loops in refined.faces.items():
        if not loops:
            continue
        by_edge.setdefault(int(slabset.edge[sid]), []).append(_loops_polygon(loops))
    out = {}
    for e, polys in by_edge.items():
        u = unary_union(polys)
        c = slabset.coef[e]
        loops = []
        for g in getattr(u, "geoms", [u]):
            if g.geom_type != "Polygon":
                continue
            g = orient(g, 1.0)
            for ring in [g.exterior, *g.interiors]:
                xy = np.asarray(ring.coords)[:-1]
                loops.append(np.column_stack([xy, c[0] * xy[:, 0] + c[1] * xy[:, 1] + c[2]]))
        out[e] = loops
    return out


def _loops_polygon(loops) -> ShapelyPolygon:
    """Rebuild a (multi)polygon from outer/hole loops in orientation order."""
    polys = []
    for l in loops:
        xy = np.asarray(l)[:, :2]
        x, y = xy[:, 0], xy[:, 1]
        area = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
        if area > 0:
            polys.append([xy, []])
        elif polys:
            polys[-1][1].append(xy)
    out = [ShapelyPolygon(o, h) for o, h in polys]
    return unary_union(out) if len(out) > 1 else out[0]


# ---------------------------------------------------------------------------
# terrain queries


def _face_planes(refined: Skeleton):
    """(shapely polygon, plane fitted through its 3D loop vertices) per face."""
    out = []
    for sid, loops in refined.faces.items():
        if not loops:
            continue
        pts = np.vstack(loops)
        A = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
        coef, *_ = np.linalg.lstsq(A, pts[:, 2], rcond=None)
        out.append((_loops_polygon(loops), coef, sid))
    return out


def interpolate_height(refined: Skeleton, pts) -> np.ndarray:
    """Terrain height at points, read off the assembled faces."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    faces = _face_planes(refined)
    geoms = [f[0] for f in faces]
    tree = shapely.STRtree(geoms)
    out = np.full(len(pts), np.nan)
    pgeoms = shapely.points(pts)
    # nearest face also resolves points sitting on face boundaries
    idx = tree.nearest(pgeoms)
    for k, fi in enumerate(idx):
        c = faces[int(fi)][1]
        out[k] = c[0] * pts[k, 0] + c[1] * pts[k, 1] + c[2]
    return out


def offset_polygon(refined: Skeleton, t: float) -> list[dict]:
    """Level set of the terrain at height ``t``: the polygon shrunk by t,
    as PolygonFile-style dicts (possibly several, possibly none)."""
    faces = _face_planes(refined)
    if not faces:
        return []
    lo = np.min([f[0].bounds[:2] for f in faces], axis=0)
    hi = np.max([f[0].bounds[2:] for f in faces], axis=0)
    scale = float(max(hi - lo))
    parts = []
    for poly, coef, _ in faces:
        # half-plane only as large as the face needs, to keep coordinates exact
        x0, y0, x1, y1 = poly.bounds
        big = 4 * math.hypot(x1 - x0, y1 - y0) + 1.0
        a, b, c = coef
        g = math.hypot(a, b)
        if g < 1e-12:
            continue
        # half-plane a x + b y + c >= t as a large polygon
        n = np.array([a, b]) / g
        mid = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
        p0 = mid - n * ((a * mid[0] + b * mid[1] + c - t) / g)
        tdir = np.array([-n[1], n[0]])
        hp = ShapelyPolygon([p0 - big * tdir, p0 + big * tdir, p0 + big * tdir + big * n, p0 - big * tdir + big * n])
        piece = poly.intersection(hp)
        if not piece.is_empty and piece.area > 0:
            parts.append(piece)
    if not parts:
        return []
    grid = 1e-10 * scale
    u = shapely.union_all(parts, grid_size=grid)
    # faces meet only up to rounding; slivers between them are not offset rings
    min_area = 1e-8 * scale * scale
    out = []
    for g in getattr(u, "geoms", [u]):
        if g.geom_type != "Polygon" or g.area <= min_area:
            continue
        holes = [h for h in g.interiors if ShapelyPolygon(h).area > min_area]
        g = orient(ShapelyPolygon(g.exterior, holes).simplify(10 * grid), 1.0)
        out.append({
            "outer": np.asarray(g.exterior.coords)[:-1].tolist(),
            "holes": [np.asarray(h.coords)[:-1].tolist() for h in g.interiors],
        })
    return out


# ---------------------------------------------------------------------------
# driver


def rotation_triggers(polygon: Polygon) -> list[str]:
    """Inputs that put a skeleton or motorcycle edge on a vertical line."""
    eps = get_eps()
    out = []
    v = polygon.vertices
    d = v[polygon.next_vertex] - v
    L = np.hypot(d[:, 0], d[:, 1])
    if np.any(np.abs(d[:, 0]) <= eps * L):
        out.append("vertical edge")
    refl = polygon.reflex
    horiz = np.abs(d[:, 1]) <= eps * L
    if np.any(horiz & (refl | refl[polygon.next_vertex])):
        out.append("horizontal edge at a reflex vertex")
    for i in np.flatnonzero(refl):
        vel = vertex_velocity(polygon.edge(polygon.prev_vertex[i]), polygon.edge(i))
        if abs(vel[0]) <= eps * math.hypot(*vel):
            out.append("vertical motorcycle")
            break
    return out


def _run(polygon: Polygon, keep_kp: bool) -> tuple:
    graph = motorcycle_graph(polygon)
    slabset = build_slabs(polygon, graph)
    kp = init_kp(polygon, slabset, graph)
    stats = run_divide(kp)
    refined = assemble(kp)
    return graph, slabset, kp, stats, refined


def compute_skeleton(polygon: Polygon, keep_flat: bool = False, auto_rotate: bool = True, keep_kp: bool = False) -> SkeletonResult:
    """Straight skeleton of a polygon with holes.

    The input is rotated by a small fixed angle when it would put a skeleton
    edge on a vertical cut; results are rotated back. Raises GeometryError
    for invalid input and DegenerateInput when general position fails.
    ``keep_flat`` returns S' (with flat edges) as the main skeleton.
    """
    check_simple(polygon)
    report = validate(polygon, auto_rotate=False)
    hard = [v for v in report.violations if v.kind != "vertical-edge" or not auto_rotate]
    if hard:
        raise DegenerateInput("; ".join(map(str, hard)))
    angles = [0.0, ROTATION_ANGLE] if auto_rotate else [0.0]
    if auto_rotate and rotation_triggers(polygon):
        angles = [ROTATION_ANGLE, 2 * ROTATION_ANGLE]
    last = None
    for angle in angles:
        work = polygon.rotated(angle) if angle else polygon
        if angle:
            rep = validate(work, auto_rotate=False)
            if not rep.ok:
                raise DegenerateInput("; ".join(map(str, rep.violations)))
        try:
            graph, slabset, kp, stats, refined = _run(work, keep_kp)
        except VerticalSkeletonEdge as exc:
            log.info("rotating input: %s", exc)
            last = exc
            continue
        skel, removed = strip_flat_edges(refined)
        if removed != 2 * polygon.r:
            raise SubdivisionError(f"expected {2 * polygon.r} flat edges, found {removed}")
        skel.faces = merged_faces(refined, slabset)
        if angle:
            refined = refined.rotated(-angle)
            skel = skel.rotated(-angle)
        return SkeletonResult(
            refined if keep_flat else skel,
            refined,
            polygon,
            graph,
            slabset,
            stats,
            angle,
            removed,
            kp if keep_kp else None,
        )
    raise DegenerateInput(f"no rotation avoids vertical skeleton edges ({last})")
