"""Lower-envelope kernels.

``envelope_segments``: lower envelope of linear segments over a line, by
divide and conquer with a linear-time sweep merge of two chains.

``envelope_planes``: lower envelope of planes over a convex polygon; the
planes bounding each face come from the lower convex hull of the dual
points, and each face is the cell clipped by those half-planes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .geom import Plane, get_eps


class Piece(NamedTuple):
    ta: float
    tb: float
    z0: float  # height at t = 0 of the supporting line
    slope: float
    labels: tuple  # ids attaining the minimum on this interval (ties kept)

    def at(self, t: float) -> float:
        return self.z0 + self.slope * t


@dataclass
class EnvelopeChain:
    pieces: list[Piece] = field(default_factory=list)

    def __len__(self):
        return len(self.pieces)

    @property
    def breakpoints(self) -> list[float]:
        if not self.pieces:
            return []
        out = [self.pieces[0].ta]
        for a, b in zip(self.pieces, self.pieces[1:]):
            if b.ta > out[-1]:
                out.append(b.ta)
        out.append(self.pieces[-1].tb)
        return out

    @property
    def labels(self) -> list[int]:
        return [p.labels[0] for p in self.pieces]

    def heights(self) -> list[float]:
        return [p.at(t) for p in self.pieces for t in (p.ta,)] + (
            [self.pieces[-1].at(self.pieces[-1].tb)] if self.pieces else []
        )

    def value(self, t: float) -> float:
        for p in self.pieces:
            if p.ta <= t <= p.tb:
                return p.at(t)
        return float("inf")

    def values(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.full(ts.shape, np.inf)
        if not self.pieces:
            return out
        starts = np.array([p.ta for p in self.pieces])
        k = np.clip(np.searchsorted(starts, ts, side="right") - 1, 0, len(self.pieces) - 1)
        z0 = np.array([p.z0 for p in self.pieces])[k]
        sl = np.array([p.slope for p in self.pieces])[k]
        ends = np.array([p.tb for p in self.pieces])[k]
        ok = (ts >= starts[k]) & (ts <= ends)
        out[ok] = z0[ok] + sl[ok] * ts[ok]
        return out

    def label_at(self, t: float):
        for p in self.pieces:
            if p.ta <= t <= p.tb:
                return p.labels[0]
        return None

    def clipped(self, lo: float, hi: float) -> "EnvelopeChain":
        out = []
        for p in self.pieces:
            a, b = max(p.ta, lo), min(p.tb, hi)
            if b > a:
                out.append(p._replace(ta=a, tb=b))
        return EnvelopeChain(out)


def _merge(A: list[Piece], B: list[Piece], tz: float, tt: float) -> list[Piece]:
    if not A:
        return B
    if not B:
        return A
    cuts = sorted({p.ta for p in A} | {p.tb for p in A} | {p.ta for p in B} | {p.tb for p in B})
    out: list[Piece] = []
    i = j = 0
    for u, v in zip(cuts, cuts[1:]):
        if v - u <= 0:
            continue
        while i < len(A) and A[i].tb <= u:
            i += 1
        while j < len(B) and B[j].tb <= u:
            j += 1
        pa = A[i] if i < len(A) and A[i].ta <= u else None
        pb = B[j] if j < len(B) and B[j].ta <= u else None
        if pa is None and pb is None:
            continue
        if pa is None or pb is None:
            p = pa or pb
            out.append(p._replace(ta=u, tb=v))
            continue
        du = pa.at(u) - pb.at(u)
        dv = pa.at(v) - pb.at(v)
        same_line = abs(pa.slope - pb.slope) <= 1e-9 * max(1.0, abs(pa.slope), abs(pb.slope))
        if abs(du) <= tz and abs(dv) <= tz and same_line:
            labels = tuple(sorted(set(pa.labels) | set(pb.labels)))
            out.append(pa._replace(ta=u, tb=v, labels=labels))
        elif abs(du) <= tz and abs(dv) <= tz:
            # distinct lines crossing within tolerance: keep the lower at the midpoint
            mid = 0.5 * (u + v)
            out.append((pa if pa.at(mid) <= pb.at(mid) else pb)._replace(ta=u, tb=v))
        elif du <= tz and dv <= tz:
            out.append(pa._replace(ta=u, tb=v))
        elif du >= -tz and dv >= -tz:
            out.append(pb._replace(ta=u, tb=v))
        else:
            tc = u + (v - u) * du / (du - dv)
            first, second = (pa, pb) if du < 0 else (pb, pa)
            out.append(first._replace(ta=u, tb=tc))
            out.append(second._replace(ta=tc, tb=v))
    return _coalesce(out, tz, tt)


def _coalesce(pieces: list[Piece], tz: float, tt: float) -> list[Piece]:
    out: list[Piece] = []
    for p in pieces:
        if out:
            q = out[-1]
            touching = abs(p.ta - q.tb) <= tt
            if touching and p.labels == q.labels and abs(p.slope - q.slope) <= tz and abs(p.at(p.ta) - q.at(p.ta)) <= tz:
                out[-1] = q._replace(tb=p.tb)
                continue
        out.append(p)
    # absorb slivers shorter than the breakpoint tolerance into a neighbour
    cleaned: list[Piece] = []
    for k, p in enumerate(out):
        if p.tb - p.ta <= tt and len(out) > 1:
            if cleaned and abs(cleaned[-1].tb - p.ta) <= tt:
                cleaned[-1] = cleaned[-1]._replace(tb=p.tb)
            elif k + 1 < len(out) and abs(out[k + 1].ta - p.tb) <= tt:
                out[k + 1] = out[k + 1]._replace(ta=p.ta)
            continue
        cleaned.append(p)
    return cleaned


def envelope_segments(segments: Sequence[tuple], tol: float | None = None) -> EnvelopeChain:
    """Lower envelope of segments ``(t0, t1, z0, slope, id)`` with z = z0 + slope*t.

    Intervals where several segments tie (coincident supporting lines)
    carry all tied ids in ``Piece.labels``; the first is the primary label.
    """
    eps = get_eps() if tol is None else tol
    base = []
    scale = 1.0
    for t0, t1, z0, slope, sid in segments:
        if t1 - t0 > eps:
            base.append([Piece(float(t0), float(t1), float(z0), float(slope), (sid,))])
            scale = max(scale, abs(z0 + slope * t0), abs(z0 + slope * t1))
    tz = eps * scale
    if not base:
        return EnvelopeChain([])
    while len(base) > 1:
        nxt = [_merge(base[k], base[k + 1], tz, eps) for k in range(0, len(base) - 1, 2)]
        if len(base) % 2:
            nxt.append(base[-1])
        base = nxt
    return EnvelopeChain(base[0])


# ---------------------------------------------------------------------------
# planes over a convex cell


@dataclass
class ConvexPatch:
    """Lower envelope of planes restricted to a convex cell.

    ``faces`` maps a plane id to its face polygon (CCW vertex array).
    ``edges`` lists interior edges ``(p, q, id_left, id_right)``; heights of
    patch vertices are obtained from ``planes``.
    """

    faces: dict
    edges: list
    planes: dict

    def height(self, p) -> float:
        return min(pl(p[0], p[1]) for pl in self.planes.values())


def _clip(poly: list, tags: list, a: float, b: float, c: float, tag, tol: float):
    """Clip polygon by a*x + b*y + c <= 0, tracking which constraint made each edge."""
    n = len(poly)
    if n == 0:
        return poly, tags
    vals = [a * x + b * y + c for x, y in poly]
    if all(v <= tol for v in vals):
        return poly, tags
    if all(v >= -tol for v in vals):
        return [], []
    out, out_tags = [], []
    for k in range(n):
        p, q = poly[k], poly[(k + 1) % n]
        vp, vq = vals[k], vals[(k + 1) % n]
        if vp <= 0:
            out.append(p)
            if vq <= 0:
                out_tags.append(tags[k])
            else:
                s = vp / (vp - vq)
                out_tags.append(tags[k])
                out.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
                out_tags.append(tag)
        elif vq <= 0:
            s = vp / (vp - vq)
            out.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
            out_tags.append(tags[k])
    return _dedupe(out, out_tags, tol)


def _dedupe(poly, tags, tol):
    if len(poly) < 2:
        return poly, tags
    out, out_tags = [], []
    n = len(poly)
    for k in range(n):
        p, q = poly[k], poly[(k + 1) % n]
        if abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol:
            continue
        out.append(p)
        out_tags.append(tags[k])
    if len(out) < 3:
        return [], []
    return out, out_tags


def _hull_neighbours(coef: np.ndarray) -> list[set | None]:
    """Candidate clipping planes per plane; None for planes that never
    attain the minimum (not a vertex of the lower hull of the duals)."""
    m = len(coef)
    if m <= 12:
        return [set(range(m)) - {i} for i in range(m)]
    try:
        hull = ConvexHull(coef)
    except QhullError:
        return [set(range(m)) - {i} for i in range(m)]
    nbr: list[set | None] = [None] * m
    for simplex, eq in zip(hull.simplices, hull.equations):
        if eq[2] >= 0:  # only lower facets describe envelope vertices
            continue
        for x in simplex:
            if nbr[x] is None:
                nbr[x] = set()
            nbr[x].update(simplex)
    return [None if s is None else s - {i} for i, s in enumerate(nbr)]


def envelope_planes(planes: Sequence[tuple], cell, tol: float | None = None) -> ConvexPatch:
    """Lower envelope of ``(Plane, id)`` pairs over a convex cell (CCW vertices).

    Planes with identical coefficients are grouped under the first id;
    callers needing the finer split handle it themselves.
    """
    eps = get_eps() if tol is None else tol
    cell = [tuple(map(float, p)) for p in cell]
    groups: dict[tuple, int] = {}
    uniq: list[tuple[Plane, int]] = []
    for pl, pid in planes:
        key = (round(pl.a, 12), round(pl.b, 12), round(pl.c, 12))
        if key in groups:
            continue
        groups[key] = pid
        uniq.append((pl, pid))
    # parallel planes: only the lowest can appear
    best: dict[tuple, tuple[Plane, int]] = {}
    for pl, pid in uniq:
        k = (round(pl.a, 12), round(pl.b, 12))
        if k not in best or pl.c < best[k][0].c:
            best[k] = (pl, pid)
    uniq = list(best.values())
    coef = np.array([(pl.a, pl.b, pl.c) for pl, _ in uniq], dtype=float).reshape(-1, 3)
    nbr = _hull_neighbours(coef)
    faces, edges = {}, []
    for i, (pl, pid) in enumerate(uniq):
        if nbr[i] is None:
            continue
        poly = cell
        tags = [("cell", k) for k in range(len(cell))]
        for j in sorted(nbr[i]):
            other = uniq[j][0]
            poly, tags = _clip(poly, tags, pl.a - other.a, pl.b - other.b, pl.c - other.c, ("plane", j), eps)
            if not poly:
                break
        if not poly:
            continue
        faces[pid] = np.array(poly)
        for k, tag in enumerate(tags):
            if tag[0] == "plane" and i < tag[1]:
                p, q = poly[k], poly[(k + 1) % len(poly)]
                edges.append((p, q, pid, uniq[tag[1]][1]))
    # edges were emitted from the lower-index face only; make sure the
    # neighbour face really has the matching edge (it may have been clipped away)
    return ConvexPatch(faces, edges, {pid: pl for pl, pid in uniq if pid in faces})
