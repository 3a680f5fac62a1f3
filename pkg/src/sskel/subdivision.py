"""The evolving partition K(P) of the polygon into cells.

A cell is stored as boundary rings (outer counterclockwise, holes
clockwise). Every ring edge carries two slab ids: ``tin``, the slab whose
skeleton face contains the cell side of the edge, and ``tout``, the face on
the far side (``NO_FACE`` for polygon edges). The ``tin`` sequence of a ring
is its face list.

Cells are split by cuts (a vertical line or a chord). The cut is lifted to
the terrain, and from every crossing with a skeleton edge the steepest
descent paths are drawn until they meet the existing boundary. Cut pieces
and descent paths lie inside single faces, so the children's rings stay
fully tagged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .envelope import EnvelopeChain, envelope_segments
from .geom import Polygon, get_eps
from .motorcycle import MotorcycleGraph
from .slabs import MOTORCYCLE, SlabSet

NO_FACE = -1  # outside the polygon
_EXTERIOR = -2  # outside the cell being split


class SubdivisionError(RuntimeError):
    """An internal invariant of the subdivision failed."""


class VerticalSkeletonEdge(RuntimeError):
    """A vertical cut runs along a skeleton edge; the input needs rotating."""


@dataclass
class Ring:
    pts: np.ndarray  # (m, 2); edge k runs from pts[k] to pts[k + 1]
    tin: np.ndarray  # (m,) slab on the cell side
    tout: np.ndarray  # (m,) slab on the far side

    def __len__(self):
        return len(self.pts)

    @property
    def area(self) -> float:
        x, y = self.pts[:, 0], self.pts[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def segments(self) -> np.ndarray:
        return np.stack([self.pts, np.roll(self.pts, -1, axis=0)], axis=1)


@dataclass
class CellRecord:
    id: int
    rings: list[Ring]
    conflicts: np.ndarray  # motorcycle-graph vertex ids
    parent: int = -1
    depth_dv: int = 0
    depth_dval: int = 0
    kind: str = ""  # how the cell was processed: a cut or a leaf type
    children: list[int] = field(default_factory=list)
    slabs: np.ndarray | None = None

    @property
    def outer(self) -> Ring:
        return self.rings[0]

    @property
    def area(self) -> float:
        return sum(r.area for r in self.rings)

    @property
    def face_list_size(self) -> int:
        return sum(len(r) for r in self.rings)

    def segments(self) -> np.ndarray:
        return np.concatenate([r.segments() for r in self.rings])

    def tags(self) -> np.ndarray:
        return np.concatenate([r.tin for r in self.rings])


class KP:
    """Cell registry plus the shared inputs every cut needs."""

    def __init__(self, polygon: Polygon, slabset: SlabSet, graph: MotorcycleGraph):
        self.polygon = polygon
        self.slabset = slabset
        self.graph = graph
        lo, hi = polygon.vertices.min(axis=0), polygon.vertices.max(axis=0)
        self.scale = max(1.0, float(np.max(hi - lo)))
        self.tol = get_eps() * self.scale
        self.cells: dict[int, CellRecord] = {}
        self._next = 0
        self.envelope_work = 0
        self.gverts = np.array([v.xy for v in graph.vertices], dtype=float).reshape(-1, 2)
        starts = np.array([m.start for m in graph.motorcycles], dtype=float).reshape(-1, 2)
        self._reflex_tree = cKDTree(starts) if len(starts) else None
        # slabs sharing a supporting plane (an edge and its motorcycle slabs)
        groups: dict[tuple, int] = {}
        self.plane_group = np.array(
            [groups.setdefault(tuple(c), len(groups)) for c in slabset.coef.tolist()], dtype=int
        )

    def new_cell(self, rings, conflicts, parent=-1, depth_dv=0, depth_dval=0) -> CellRecord:
        cell = CellRecord(self._next, rings, np.asarray(conflicts, dtype=int), parent, depth_dv, depth_dval)
        self._next += 1
        self.cells[cell.id] = cell
        cell.slabs = cell_slabs(self, cell)
        return cell

    def leaves(self) -> list[CellRecord]:
        return [c for c in self.cells.values() if not c.children]


# ---------------------------------------------------------------------------
# construction and face lists


def init_kp(polygon: Polygon, slabset: SlabSet, graph: MotorcycleGraph) -> KP:
    """A single cell equal to P; its conflict list holds every graph vertex."""
    kp = KP(polygon, slabset, graph)
    rings = []
    start = 0
    for ring in polygon.rings:
        m = len(ring)
        idx = np.arange(start, start + m)
        rings.append(Ring(ring.copy(), idx.copy(), np.full(m, NO_FACE)))
        start += m
    kp.new_cell(rings, np.arange(len(kp.gverts)))
    return kp


def _corner_contains(prev_pt, pt, next_pt, d) -> bool:
    """Is direction ``d`` strictly inside the cell corner at ``pt``?"""
    a = math.atan2(next_pt[1] - pt[1], next_pt[0] - pt[0])
    b = math.atan2(prev_pt[1] - pt[1], prev_pt[0] - pt[0])
    c = math.atan2(d[1], d[0])
    span = (b - a) % (2 * math.pi)
    rel = (c - a) % (2 * math.pi)
    return 1e-9 < rel < span - 1e-9


def cell_slabs(kp: KP, cell: CellRecord) -> np.ndarray:
    """Slabs whose faces meet the cell: the ring tags, plus motorcycle slabs
    whose face touches the cell only at a reflex vertex of P."""
    ids = set(np.unique(cell.tags()).tolist())
    ids.discard(NO_FACE)
    if kp._reflex_tree is not None:
        ss = kp.slabset
        for ring in cell.rings:
            dist, k = kp._reflex_tree.query(ring.pts, distance_upper_bound=kp.tol * 10)
            for i in np.flatnonzero(np.isfinite(dist)):
                m = kp.graph.motorcycles[int(k[i])]
                vel = np.array(m.velocity) / m.speed
                prev_pt, next_pt = ring.pts[i - 1], ring.pts[(i + 1) % len(ring)]
                for sid in ss.motorcycle_slabs(m.id):
                    if sid in ids:
                        continue
                    bis = vel + ss.u[sid]
                    if _corner_contains(prev_pt, ring.pts[i], next_pt, bis):
                        ids.add(sid)
    return np.array(sorted(ids), dtype=int)


def tag_runs(tags: np.ndarray) -> list[int]:
    """Distinct tags in cyclic run order (one entry per maximal run)."""
    if len(tags) == 0:
        return []
    change = np.flatnonzero(tags != np.roll(tags, 1))
    if len(change) == 0:
        return [int(tags[0])]
    return [int(tags[i]) for i in change]


# ---------------------------------------------------------------------------
# cuts


def vertical_cut_segments(cell: CellRecord, x0: float, tol: float = 0.0) -> list[tuple[float, float]]:
    """Maximal segments of the line x = x0 inside the cell, as (y_low, y_high).

    Vertices on the line count as lying to its right, which puts the line in
    general position with respect to the rings; segments through such
    vertices are split there later by the planar-graph step.
    """
    ys = []
    for ring in cell.rings:
        p, q = ring.pts, np.roll(ring.pts, -1, axis=0)
        sp, sq = p[:, 0] >= x0, q[:, 0] >= x0
        cr = np.flatnonzero(sp != sq)
        if len(cr) == 0:
            continue
        pp, qq = p[cr], q[cr]
        with np.errstate(divide="ignore", invalid="ignore"):
            y = pp[:, 1] + (x0 - pp[:, 0]) * (qq[:, 1] - pp[:, 1]) / (qq[:, 0] - pp[:, 0])
        y = np.where(pp[:, 0] == x0, pp[:, 1], np.where(qq[:, 0] == x0, qq[:, 1], y))
        ys.extend(y.tolist())
    ys.sort()
    if len(ys) % 2:
        raise SubdivisionError("odd number of crossings with a vertical line")
    return [(a, b) for a, b in zip(ys[0::2], ys[1::2]) if b - a > tol]


def lift_cut(kp: KP, slab_ids, origin, direction, t0: float, t1: float) -> EnvelopeChain:
    """Lower envelope of the given slabs along origin + t*direction, t in [t0, t1].

    Interior breakpoints of the result are the crossings of the cut with
    skeleton edges.
    """
    lo, hi, z0, slope = kp.slabset.line_intervals(slab_ids, origin, direction)
    lo, hi = np.maximum(lo, t0), np.minimum(hi, t1)
    keep = hi - lo > 0
    segs = [(a, b, c, s, int(i)) for a, b, c, s, i in zip(lo[keep], hi[keep], z0[keep], slope[keep], np.asarray(slab_ids)[keep])]
    kp.envelope_work += len(segs)
    chain = envelope_segments(segs, tol=get_eps())
    dn = math.hypot(direction[0], direction[1])
    if not chain.pieces:
        raise SubdivisionError("cut has no slab above it")
    bp = [chain.pieces[0].ta, *[p.tb for p in chain.pieces]]
    gaps = [b.ta - a.tb for a, b in zip(chain.pieces, chain.pieces[1:])]
    if (chain.pieces[0].ta - t0) * dn > 10 * kp.tol or (t1 - chain.pieces[-1].tb) * dn > 10 * kp.tol or any(
        g * dn > 10 * kp.tol for g in gaps
    ):
        raise SubdivisionError(f"terrain not covered along cut (breakpoints {bp[:6]})")
    return chain


def trace_descent(kp: KP, slab: int, p) -> tuple[list[np.ndarray], list[bool]]:
    """Steepest descent path on the face of ``slab`` starting at ``p``.

    Edge slab: one segment along the descent direction down to the edge.
    Motorcycle slab: down to the track, then back along the track to the
    reflex vertex. Returns the path points and, per leg, whether the leg
    runs along a track.
    """
    ss = kp.slabset
    p = np.asarray(p, dtype=float)
    a, b = ss.strip_coords([slab], p)[0]
    a = min(1.0, max(0.0, a))
    foot = ss.q0[slab] + a * (ss.q1[slab] - ss.q0[slab])
    path = [p, foot]
    kinds = [False]
    if ss.kind[slab] == MOTORCYCLE:
        path.append(ss.q0[slab].copy())
        kinds.append(True)
    out = [path[0]]
    out_kinds = []
    for q, k in zip(path[1:], kinds):
        if np.hypot(*(q - out[-1])) > kp.tol:
            out.append(q)
            out_kinds.append(k)
    return out, out_kinds


def _side_tag(kp: KP, cands, a, b, delta: float) -> tuple[int, int]:
    """Faces on the left and right of segment ab, chosen among ``cands``."""
    cands = list(cands)
    if len(cands) == 1:
        return cands[0], cands[0]
    d = np.asarray(b, float) - np.asarray(a, float)
    nrm = np.hypot(*d)
    nl = np.array([-d[1], d[0]]) / nrm
    mid = (np.asarray(a, float) + np.asarray(b, float)) / 2
    ss = kp.slabset
    ids = np.array(cands)
    out = []
    for sgn in (1.0, -1.0):
        q = mid + sgn * delta * nl
        ab = ss.strip_coords(ids, np.broadcast_to(q, (len(ids), 2)))
        inside = (ab[:, 0] >= 0) & (ab[:, 0] <= 1) & (ab[:, 1] >= 0)
        z = ss.heights(ids, q)
        z = np.where(inside, z, np.inf) if inside.any() else z
        out.append(int(ids[int(np.argmin(z))]))
    return out[0], out[1]


def _first_hit(a, b, segs: np.ndarray, tol: float):
    """Smallest parameter in (0, 1] where segment ab meets ``segs``.

    Returns 0.0 when ab runs along one of them from its start, and None when
    nothing is hit.
    """
    if len(segs) == 0:
        return None
    d = b - a
    L = float(np.hypot(*d))
    if L <= tol:
        return 0.0
    A, B = segs[:, 0], segs[:, 1]
    s = B - A
    sl = np.hypot(s[:, 0], s[:, 1])
    w = A - a
    den = d[0] * s[:, 1] - d[1] * s[:, 0]
    tiny = tol / L
    par = np.abs(den) <= 1e-12 * L * np.maximum(sl, 1e-300)
    best = np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * s[:, 1] - w[:, 1] * s[:, 0]) / den
        u = (w[:, 0] * d[1] - w[:, 1] * d[0]) / den
    ok = ~par & (t > tiny) & (t <= 1 + tiny) & (u * sl >= -tol) & (u * sl <= sl + tol)
    if np.any(ok):
        best = float(t[ok].min())
    # collinear overlaps
    off = np.abs(w[:, 0] * d[1] - w[:, 1] * d[0]) / L
    col = par & (off <= tol)
    if np.any(col):
        t0 = (w[col] @ d) / (L * L)
        t1 = ((B[col] - a) @ d) / (L * L)
        lo, hi = np.minimum(t0, t1), np.maximum(t0, t1)
        hit = (hi > tiny) & (lo <= 1 + tiny)
        if np.any(hit & (lo <= tiny)):
            return 0.0
        if np.any(hit):
            best = min(best, float(lo[hit].min()))
    # segment endpoints touching ab from the side
    return None if not np.isfinite(best) else min(best, 1.0)


def _points_in_cell(rings: list[Ring], pts: np.ndarray) -> np.ndarray:
    """Crossing-number inclusion test for many points."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    inside = np.zeros(len(pts), dtype=bool)
    for ring in rings:
        x, y = ring.pts[:, 0], ring.pts[:, 1]
        x2, y2 = np.roll(x, -1), np.roll(y, -1)
        py = pts[:, 1][:, None]
        cond = (y[None, :] > py) != (y2[None, :] > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = x[None, :] + (py - y[None, :]) * (x2 - x)[None, :] / (y2 - y)[None, :]
        inside ^= (np.count_nonzero(cond & (pts[:, 0][:, None] < xs), axis=1) % 2).astype(bool)
    return inside


def cut_edges(kp: KP, cell: CellRecord, lines) -> list[tuple]:
    """New edges for a cut: lifted cut pieces plus clipped descent paths.

    ``lines`` holds ``(origin, direction, t0, t1)`` tuples. Each returned
    edge is ``(p, q, left_tag, right_tag)``.
    """
    tol = kp.tol
    delta = 100 * tol
    ss = kp.slabset
    slab_ids = cell.slabs
    edges: list[tuple] = []
    breakpoints: list[tuple] = []
    for origin, direction, t0, t1 in lines:
        origin = np.asarray(origin, float)
        direction = np.asarray(direction, float)
        chain = lift_cut(kp, slab_ids, origin, direction, t0, t1)
        pieces = chain.pieces
        for k, pc in enumerate(pieces):
            a, b = origin + pc.ta * direction, origin + pc.tb * direction
            labels = pc.labels
            if len(labels) > 1 and direction[0] == 0.0:
                planes = {int(kp.plane_group[l]) for l in labels}
                if len(planes) > 1:
                    raise VerticalSkeletonEdge("skeleton edge runs along a vertical cut")
            tl, tr = _side_tag(kp, labels, a, b, delta)
            edges.append((a, b, tl, tr))
            if k + 1 < len(pieces):
                nxt = pieces[k + 1]
                involved = sorted(set(labels) | set(nxt.labels))
                if len({int(kp.plane_group[l]) for l in involved}) == 1:
                    continue  # a flat edge crossing: same plane on both sides
                breakpoints.append((origin + pc.tb * direction, involved))
    # descent paths, clipped against everything already present
    existing = [cell.segments()]
    existing.append(np.array([[e[0], e[1]] for e in edges]).reshape(-1, 2, 2))
    new_segs: list[np.ndarray] = []
    groups_in_cell: dict[int, list[int]] = {}
    for s in slab_ids.tolist():
        groups_in_cell.setdefault(int(kp.plane_group[s]), []).append(s)
    # probe points just off each breakpoint must lie in the cell
    probes = []
    paths = []
    for p, involved in breakpoints:
        for s in involved:
            path, kinds = trace_descent(kp, s, p)
            if len(path) < 2:
                continue
            d = path[1] - path[0]
            probes.append(path[0] + d / np.hypot(*d) * 10 * delta)
            paths.append((s, path, kinds))
    inside = _points_in_cell(cell.rings, np.array(probes)) if probes else np.zeros(0, bool)
    for k, (s, path, kinds) in enumerate(paths):
        if not inside[k]:
            continue
        base = np.concatenate(existing + new_segs) if new_segs else np.concatenate(existing)
        kept = [path[0]]
        for j in range(len(path) - 1):
            a, b = path[j], path[j + 1]
            t = _first_hit(a, b, base, tol)
            if t is None:
                kept.append(b)
                continue
            if t > 0:
                kept.append(a + t * (b - a))
            break
        if len(kept) < 2:
            continue
        seg_list = []
        for j in range(len(kept) - 1):
            a, b = kept[j], kept[j + 1]
            if np.hypot(*(b - a)) <= tol:
                continue
            if not kinds[j]:
                cands = groups_in_cell.get(int(kp.plane_group[s]), [s])
            else:
                cands = [s, ss.partner(s)]
                cands = [c for c in cands if c in set(slab_ids.tolist())] or [s]
            tl, tr = _side_tag(kp, cands, a, b, delta)
            edges.append((a, b, tl, tr))
            seg_list.append([a, b])
        if seg_list:
            new_segs.append(np.array(seg_list))
    return edges


# ---------------------------------------------------------------------------
# planar split


def _snap(points: np.ndarray, tol: float):
    tree = cKDTree(points)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    n = len(points)
    if len(pairs) == 0:
        return np.arange(n), points
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    # representative = first point of each component
    first = np.full(labels.max() + 1, -1)
    for i in range(n - 1, -1, -1):
        first[labels[i]] = i
    return labels, points[first]


def _on_segments(V: np.ndarray, vids: np.ndarray, eu, ew, seg_idx: np.ndarray, tol: float):
    """(segment, vertex, t) triples for vertices lying inside segments."""
    out = []
    if len(vids) == 0 or len(seg_idx) == 0:
        return out
    P = V[vids]
    chunk = max(1, 2_000_000 // max(1, len(P)))
    for s0 in range(0, len(seg_idx), chunk):
        si = seg_idx[s0:s0 + chunk]
        A, B = V[eu[si]], V[ew[si]]
        d = B - A
        L = np.hypot(d[:, 0], d[:, 1])
        lo = np.minimum(A, B) - tol
        hi = np.maximum(A, B) + tol
        box = (
            (P[None, :, 0] >= lo[:, None, 0]) & (P[None, :, 0] <= hi[:, None, 0])
            & (P[None, :, 1] >= lo[:, None, 1]) & (P[None, :, 1] <= hi[:, None, 1])
        )
        ii, jj = np.nonzero(box)
        if len(ii) == 0:
            continue
        w = P[jj] - A[ii]
        t = (w[:, 0] * d[ii, 0] + w[:, 1] * d[ii, 1]) / (L[ii] ** 2)
        dist = np.abs(w[:, 0] * d[ii, 1] - w[:, 1] * d[ii, 0]) / L[ii]
        ok = (dist <= tol) & (t * L[ii] > tol) & ((1 - t) * L[ii] > tol)
        ok &= (vids[jj] != eu[si[ii]]) & (vids[jj] != ew[si[ii]])
        for a, b, tt in zip(si[ii[ok]], vids[jj[ok]], t[ok]):
            out.append((int(a), int(b), float(tt)))
    return out


def planar_faces(rings: list[Ring], new_edges: list[tuple], tol: float):
    """Bounded faces of the cell rings overlaid with new two-sided edges.

    Returns ``(outers, holes)``: lists of Rings, outers counterclockwise.
    """
    segs, tl, tr, acr_l, acr_r, is_new = [], [], [], [], [], []
    for ring in rings:
        m = len(ring)
        segs.append(ring.segments())
        tl.append(ring.tin)
        tr.append(np.full(m, _EXTERIOR))
        acr_l.append(ring.tout)
        acr_r.append(np.full(m, _EXTERIOR))
        is_new.append(np.zeros(m, bool))
    if new_edges:
        ne = np.array([[e[0], e[1]] for e in new_edges], dtype=float)
        segs.append(ne)
        left = np.array([e[2] for e in new_edges], dtype=int)
        right = np.array([e[3] for e in new_edges], dtype=int)
        tl.append(left)
        tr.append(right)
        acr_l.append(right)
        acr_r.append(left)
        is_new.append(np.ones(len(new_edges), bool))
    S = np.concatenate(segs)
    tl, tr = np.concatenate(tl), np.concatenate(tr)
    acr_l, acr_r = np.concatenate(acr_l), np.concatenate(acr_r)
    is_new = np.concatenate(is_new)
    labels, V = _snap(S.reshape(-1, 2), tol)
    eu, ew = labels[0::2], labels[1::2]
    # split segments at vertices lying in their interior
    new_idx = np.flatnonzero(is_new & (eu != ew))
    old_idx = np.flatnonzero(~is_new & (eu != ew))
    hits = _on_segments(V, np.arange(len(V)), eu, ew, new_idx, tol)
    new_v = np.unique(np.concatenate([eu[new_idx], ew[new_idx]])) if len(new_idx) else np.zeros(0, int)
    hits += _on_segments(V, new_v, eu, ew, old_idx, tol)
    by_seg: dict[int, list] = {}
    for s, v, t in hits:
        by_seg.setdefault(s, []).append((t, v))
    U, W, TL, TR, AL, AR = [], [], [], [], [], []
    for s in range(len(S)):
        if eu[s] == ew[s]:
            continue
        chain = [eu[s], *[v for _, v in sorted(by_seg.get(s, []))], ew[s]]
        for a, b in zip(chain, chain[1:]):
            if a == b:
                continue
            U.append(a)
            W.append(b)
            TL.append(tl[s])
            TR.append(tr[s])
            AL.append(acr_l[s])
            AR.append(acr_r[s])
    U, W = np.array(U), np.array(W)
    key = np.minimum(U, W) * len(V) + np.maximum(U, W)
    _, first = np.unique(key, return_index=True)
    first.sort()
    U, W = U[first], W[first]
    TL, TR = np.array(TL)[first], np.array(TR)[first]
    AL, AR = np.array(AL)[first], np.array(AR)[first]
    E = len(U)
    orig = np.concatenate([U, W])
    dest = np.concatenate([W, U])
    tag = np.concatenate([TL, TR])
    across = np.concatenate([AL, AR])
    twin = np.concatenate([np.arange(E, 2 * E), np.arange(E)])
    vec = V[dest] - V[orig]
    ang = np.arctan2(vec[:, 1], vec[:, 0])
    order = np.lexsort((ang, orig))
    pos = np.empty(2 * E, dtype=int)
    pos[order] = np.arange(2 * E)
    counts = np.bincount(orig, minlength=len(V))
    first_out = np.concatenate([[0], np.cumsum(counts)[:-1]])
    tw = twin
    v = dest
    rel = pos[tw] - first_out[v]
    nxt = order[first_out[v] + (rel - 1) % counts[v]]
    seen = np.zeros(2 * E, dtype=bool)
    outers, holes = [], []
    nxt_l = nxt.tolist()
    for h0 in range(2 * E):
        if seen[h0] or tag[h0] == _EXTERIOR:
            continue
        cyc = []
        h = h0
        while not seen[h]:
            seen[h] = True
            cyc.append(h)
            h = nxt_l[h]
        if h != h0:
            raise SubdivisionError("face traversal did not close")
        cyc = np.array(cyc)
        if np.any(tag[cyc] == _EXTERIOR):
            raise SubdivisionError("cut edge escapes the cell")
        ring = Ring(V[orig[cyc]], tag[cyc].astype(int), across[cyc].astype(int))
        a = ring.area
        if abs(a) <= tol * tol:
            continue
        (outers if a > 0 else holes).append(ring)
    return outers, holes


def simplify_ring(ring: Ring, tol: float) -> Ring:
    """Drop vertices between collinear edges with identical tags."""
    pts, tin, tout = ring.pts, ring.tin, ring.tout
    while len(pts) > 3:
        prv = np.roll(pts, 1, axis=0)
        nxt = np.roll(pts, -1, axis=0)
        d0, d1 = pts - prv, nxt - pts
        l0, l1 = np.hypot(*d0.T), np.hypot(*d1.T)
        crs = d0[:, 0] * d1[:, 1] - d0[:, 1] * d1[:, 0]
        dot = (d0 * d1).sum(axis=1)
        same = (tin == np.roll(tin, 1)) & (tout == np.roll(tout, 1))
        drop = same & (np.abs(crs) <= tol * np.maximum(l0, l1)) & (dot > 0)
        # never drop two neighbours in one pass
        drop &= ~np.roll(drop, 1)
        if not drop.any():
            break
        keep = ~drop
        pts, tin, tout = pts[keep], tin[keep], tout[keep]
    return Ring(pts, tin, tout)


def _reflex_at(ring: Ring, i: int, tol: float) -> bool:
    p, q, r = ring.pts[i - 1], ring.pts[i], ring.pts[(i + 1) % len(ring)]
    d0, d1 = q - p, r - q
    return d0[0] * d1[1] - d0[1] * d1[0] < -tol * max(np.hypot(*d0), np.hypot(*d1))


def conflicts_of(kp: KP, rings: list[Ring], candidates: np.ndarray) -> np.ndarray:
    """Graph vertices in the cell interior or at a reflex corner of its boundary."""
    if len(candidates) == 0:
        return candidates
    tol = kp.tol
    P = kp.gverts[candidates]
    on_vertex = np.full(len(P), False)
    is_reflex = np.full(len(P), False)
    on_edge = np.full(len(P), False)
    for ring in rings:
        tree = cKDTree(ring.pts)
        dist, idx = tree.query(P, distance_upper_bound=10 * tol)
        for k in np.flatnonzero(np.isfinite(dist)):
            on_vertex[k] = True
            is_reflex[k] |= _reflex_at(ring, int(idx[k]), tol)
        A, B = ring.pts, np.roll(ring.pts, -1, axis=0)
        d = B - A
        L2 = np.maximum((d * d).sum(axis=1), 1e-300)
        w = P[:, None, :] - A[None, :, :]
        t = np.clip((w * d[None]).sum(axis=2) / L2[None], 0, 1)
        diff = w - t[..., None] * d[None]
        on_edge |= np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=1) <= 10 * tol
    inside = _points_in_cell(rings, P)
    keep = np.where(on_vertex, is_reflex, np.where(on_edge, False, inside))
    return candidates[keep]


def split_cell(kp: KP, cell: CellRecord, new_edges: list[tuple], depth_dv: int, depth_dval: int) -> list[CellRecord]:
    """Overlay the new edges on the cell and register the resulting cells."""
    outers, holes = planar_faces(cell.rings, new_edges, kp.tol)
    if not outers:
        raise SubdivisionError("split produced no cells")
    outers = [simplify_ring(r, kp.tol) for r in outers]
    holes = [simplify_ring(r, kp.tol) for r in holes]
    assigned: list[list[Ring]] = [[] for _ in outers]
    for h in holes:
        best, best_area = None, math.inf
        for k, o in enumerate(outers):
            if _points_in_cell([o], h.pts[:1])[0] and o.area < best_area:
                best, best_area = k, o.area
        if best is None:
            raise SubdivisionError("hole outside every child")
        assigned[best].append(h)
    children = []
    for o, hs in zip(outers, assigned):
        rings = [o, *hs]
        conf = conflicts_of(kp, rings, cell.conflicts)
        child = kp.new_cell(rings, conf, cell.id, depth_dv, depth_dval)
        children.append(child)
    cell.children = [c.id for c in children]
    total = sum(c.area for c in children)
    if abs(total - cell.area) > 1e-6 * max(abs(cell.area), kp.tol):
        raise SubdivisionError(f"area not conserved by split ({total} vs {cell.area})")
    return children


def kp_vertex_degrees(kp: KP) -> np.ndarray:
    """Degree of every vertex of the final subdivision (leaf cell rings)."""
    rings = [r for c in kp.leaves() for r in c.rings]
    segs = np.concatenate([r.segments() for r in rings])
    labels, V = _snap(segs.reshape(-1, 2), kp.tol)
    eu, ew = labels[0::2], labels[1::2]
    idx = np.flatnonzero(eu != ew)
    hits = _on_segments(V, np.arange(len(V)), eu, ew, idx, kp.tol)
    by_seg: dict[int, list] = {}
    for s, v, t in hits:
        by_seg.setdefault(s, []).append((t, v))
    edges = set()
    for s in idx:
        chain = [eu[s], *[v for _, v in sorted(by_seg.get(int(s), []))], ew[s]]
        for a, b in zip(chain, chain[1:]):
            if a != b:
                edges.add((min(a, b), max(a, b)))
    deg = np.zeros(len(V), dtype=int)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    return deg
