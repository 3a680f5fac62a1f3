"""Planar primitives, the polygon model and the slope-1 plane formulas.

Everything downstream measures height in the same units as length: the
roof surface rises with slope 1, so the height of a point above an edge's
face is its distance to that edge's supporting line.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

_EPS = float(os.environ.get("SSKEL_EPS", "1e-9"))

# Applied once when vertical edges are found; rotated back on output.
ROTATION_ANGLE = 1e-3 * (1 + math.sqrt(5)) / 2


def get_eps() -> float:
    return _EPS


def set_eps(value: float) -> None:
    global _EPS
    _EPS = float(value)


class GeometryError(ValueError):
    """Input rejected outright (self-intersecting or malformed rings)."""


class DegenerateInput(ValueError):
    """Input violates a general-position assumption the algorithm needs."""


# ---------------------------------------------------------------------------
# predicates

_SPLITTER = 134217729.0  # 2**27 + 1
_CCW_ERRBOUND = (3.0 + 16.0 * np.finfo(float).eps) * np.finfo(float).eps


def _orient_exact(a, b, c) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (det > 0) - (det < 0)


def orient2d(a, b, c) -> int:
    """Sign of the signed area of triangle abc (+1 for a left turn).

    Floating-point evaluation guarded by Shewchuk's static error bound; only
    the uncertain cases fall back to exact rational arithmetic.
    """
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > _CCW_ERRBOUND * detsum:
        return 1 if det > 0 else -1
    if detsum == 0.0:
        return 0
    return _orient_exact(a, b, c)


def cross(u, v) -> float:
    return u[0] * v[1] - u[1] * v[0]


def left_normal(d):
    """Unit normal pointing to the left of direction ``d``."""
    n = math.hypot(d[0], d[1])
    return (-d[1] / n, d[0] / n)


def segment_intersection(p0, p1, q0, q1, eps: float | None = None):
    """Intersection parameters (t, u) of segments p0p1 and q0q1, or None.

    Parallel segments return None; callers that care about overlaps handle
    them separately.
    """
    eps = get_eps() if eps is None else eps
    r = (p1[0] - p0[0], p1[1] - p0[1])
    s = (q1[0] - q0[0], q1[1] - q0[1])
    den = cross(r, s)
    if abs(den) <= eps * math.hypot(*r) * math.hypot(*s):
        return None
    w = (q0[0] - p0[0], q0[1] - p0[1])
    t = cross(w, s) / den
    u = cross(w, r) / den
    return t, u


def point_segment_distance(p, a, b) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    ll = dx * dx + dy * dy
    if ll == 0.0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / ll
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy)


def signed_area(ring) -> float:
    pts = np.asarray(ring, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def point_in_ring(p, ring) -> bool:
    """Even-odd test; points on the boundary give an arbitrary answer."""
    pts = np.asarray(ring, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    cond = (y > p[1]) != (y2 > p[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = x + (p[1] - y) * (x2 - x) / (y2 - y)
    return bool(np.count_nonzero(cond & (p[0] < xs)) % 2)


# ---------------------------------------------------------------------------
# planes and velocities


@dataclass(frozen=True)
class Plane:
    """Non-vertical plane z = a*x + b*y + c."""

    a: float
    b: float
    c: float

    def __call__(self, x, y):
        return self.a * x + self.b * y + self.c

    @property
    def gradient(self):
        return (self.a, self.b)

    def restricted_to_line(self, origin, direction):
        """Return (z0, slope) of the plane along origin + t*direction."""
        z0 = self(origin[0], origin[1])
        return z0, self.a * direction[0] + self.b * direction[1]


def edge_plane(p0, p1) -> Plane:
    """Slope-1 plane through edge p0p1 rising toward the interior (left side).

    The height of the plane at a point equals its signed distance to the
    supporting line of the edge.
    """
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    length = math.hypot(dx, dy)
    if length == 0.0:
        raise GeometryError("zero-length edge")
    if abs(dx) <= get_eps() * length:
        raise DegenerateInput(f"vertical edge {tuple(p0)}-{tuple(p1)}")
    nx, ny = -dy / length, dx / length
    return Plane(nx, ny, -(nx * p0[0] + ny * p0[1]))


def vertex_velocity(prev_edge, next_edge):
    """Velocity of the polygon vertex shared by two consecutive directed edges.

    The vertex moves so that each incident edge translates inward at unit
    speed, i.e. ``v . n = 1`` for both inward unit normals ``n``. For a
    vertex with interior angle alpha this gives speed 1/sin(alpha/2) along
    the interior bisector.
    """
    (a0, a1), (b0, b1) = prev_edge, next_edge
    n1 = left_normal((a1[0] - a0[0], a1[1] - a0[1]))
    n2 = left_normal((b1[0] - b0[0], b1[1] - b0[1]))
    det = n1[0] * n2[1] - n1[1] * n2[0]
    if abs(det) <= 1e-12:
        raise DegenerateInput("collinear incident edges have no vertex velocity")
    vx = (n2[1] - n1[1]) / det
    vy = (n1[0] - n2[0]) / det
    return (vx, vy)


# ---------------------------------------------------------------------------
# polygon model


@dataclass
class Polygon:
    """Polygon with holes: outer ring counterclockwise, holes clockwise.

    Vertices of all rings are numbered consecutively (outer ring first);
    edge ``i`` runs from vertex ``i`` to ``next_vertex[i]``, so the polygon
    interior is always on the left of every edge.
    """

    outer: np.ndarray
    holes: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.outer = np.asarray(self.outer, dtype=float).reshape(-1, 2)
        self.holes = [np.asarray(h, dtype=float).reshape(-1, 2) for h in self.holes]
        if len(self.outer) < 3 or any(len(h) < 3 for h in self.holes):
            raise GeometryError("rings need at least three vertices")
        if not np.all(np.isfinite(self.outer)) or not all(
            np.all(np.isfinite(h)) for h in self.holes
        ):
            raise GeometryError("non-finite coordinate")
        if signed_area(self.outer) < 0:
            self.outer = self.outer[::-1].copy()
        self.holes = [h[::-1].copy() if signed_area(h) > 0 else h for h in self.holes]
        self._index()

    def _index(self):
        rings = self.rings
        self.vertices = np.vstack(rings)
        nxt, prv, ring_of = [], [], []
        start = 0
        for k, ring in enumerate(rings):
            m = len(ring)
            idx = np.arange(start, start + m)
            nxt.append(np.roll(idx, -1))
            prv.append(np.roll(idx, 1))
            ring_of.append(np.full(m, k))
            start += m
        self.next_vertex = np.concatenate(nxt)
        self.prev_vertex = np.concatenate(prv)
        self.ring_of = np.concatenate(ring_of)
        v, w, u = self.vertices, self.vertices[self.next_vertex], self.vertices[self.prev_vertex]
        turn = (v[:, 0] - u[:, 0]) * (w[:, 1] - v[:, 1]) - (v[:, 1] - u[:, 1]) * (w[:, 0] - v[:, 0])
        self.reflex = turn < 0

    @property
    def rings(self) -> list[np.ndarray]:
        return [self.outer, *self.holes]

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def r(self) -> int:
        return int(np.count_nonzero(self.reflex))

    def edge(self, i: int):
        return self.vertices[i], self.vertices[self.next_vertex[i]]

    def edges(self):
        return [(self.vertices[i], self.vertices[self.next_vertex[i]]) for i in range(self.n)]

    def area(self) -> float:
        return sum(signed_area(r) for r in self.rings)

    def contains(self, p) -> bool:
        if not point_in_ring(p, self.outer):
            return False
        return not any(point_in_ring(p, h) for h in self.holes)

    def boundary_distance(self, p) -> float:
        return min(point_segment_distance(p, a, b) for a, b in self.edges())

    def rotated(self, angle: float) -> "Polygon":
        return Polygon(rotate(self.outer, angle), [rotate(h, angle) for h in self.holes])

    @classmethod
    def from_json(cls, doc: dict) -> "Polygon":
        return cls(doc["outer"], doc.get("holes", []))

    def to_json(self) -> dict:
        return {"outer": self.outer.tolist(), "holes": [h.tolist() for h in self.holes]}


def rotate(points, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    pts = np.asarray(points, dtype=float)
    return pts @ np.array([[c, s], [-s, c]])


# ---------------------------------------------------------------------------
# validation


@dataclass
class Violation:
    kind: str  # "vertical-edge" | "flat-vertex" | "head-on" | "high-degree"
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


@dataclass
class GeneralPositionReport:
    violations: list[Violation]
    polygon: Polygon
    rotation: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _segments_cross(segs_a: np.ndarray, segs_b: np.ndarray, eps: float) -> np.ndarray:
    """Pairwise proper-or-touching intersection matrix of two segment arrays."""
    p, r = segs_a[:, None, 0, :], (segs_a[:, 1] - segs_a[:, 0])[:, None, :]
    q, s = segs_b[None, :, 0, :], (segs_b[:, 1] - segs_b[:, 0])[None, :, :]
    den = r[..., 0] * s[..., 1] - r[..., 1] * s[..., 0]
    w = q - p
    tn = w[..., 0] * s[..., 1] - w[..., 1] * s[..., 0]
    un = w[..., 0] * r[..., 1] - w[..., 1] * r[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = tn / den
        u = un / den
    hit = (np.abs(den) > 0) & (t >= -eps) & (t <= 1 + eps) & (u >= -eps) & (u <= 1 + eps)
    # collinear overlaps
    col = (np.abs(den) <= 1e-14) & (np.abs(tn) <= 1e-12)
    if np.any(col):
        rr = np.sum(r * r, axis=-1)
        t0 = np.sum(w * r, axis=-1) / np.where(rr > 0, rr, 1)
        t1 = np.sum((w + s) * r, axis=-1) / np.where(rr > 0, rr, 1)
        lo, hi = np.minimum(t0, t1), np.maximum(t0, t1)
        hit |= col & (hi >= -eps) & (lo <= 1 + eps)
    return hit


def check_simple(polygon: Polygon) -> None:
    """Raise GeometryError if rings self-intersect, cross, or holes lie outside."""
    n = polygon.n
    segs = np.stack([polygon.vertices, polygon.vertices[polygon.next_vertex]], axis=1)
    eps = 1e-12
    for start in range(0, n, 512):
        block = segs[start:start + 512]
        hit = _segments_cross(block, segs, eps)
        for k in range(len(block)):
            i = start + k
            hit[k, i] = False
            hit[k, polygon.next_vertex[i]] = False
            hit[k, polygon.prev_vertex[i]] = False
        if np.any(hit):
            i, j = np.argwhere(hit)[0]
            raise GeometryError(f"edges {start + i} and {j} intersect")
    for h in polygon.holes:
        if not point_in_ring(h[0], polygon.outer):
            raise GeometryError("hole outside the outer ring")
        for g in polygon.holes:
            if g is not h and point_in_ring(h[0], g):
                raise GeometryError("nested holes")


def validate(polygon: Polygon, auto_rotate: bool = True) -> GeneralPositionReport:
    """Check the general-position assumptions; optionally rotate away vertical edges.

    Self-intersections are rejected with GeometryError. Other problems are
    listed in the report; when ``auto_rotate`` is set and vertical edges are
    the only problem, the polygon is rotated by ``ROTATION_ANGLE`` and the
    rotated copy is re-checked.
    """
    check_simple(polygon)
    violations = _position_violations(polygon)
    rotation = 0.0
    if auto_rotate and any(v.kind == "vertical-edge" for v in violations):
        rotation = ROTATION_ANGLE
        polygon = polygon.rotated(rotation)
        violations = _position_violations(polygon)
    return GeneralPositionReport(violations, polygon, rotation)


def _position_violations(polygon: Polygon) -> list[Violation]:
    eps = get_eps()
    out: list[Violation] = []
    v = polygon.vertices
    w = v[polygon.next_vertex]
    d = w - v
    length = np.hypot(d[:, 0], d[:, 1])
    for i in np.flatnonzero(length <= eps):
        out.append(Violation("flat-vertex", f"zero-length edge {i}"))
    for i in np.flatnonzero(np.abs(d[:, 0]) <= eps * length):
        out.append(Violation("vertical-edge", f"edge {i} from {tuple(v[i])}"))
    u = v[polygon.prev_vertex]
    d0 = v - u
    sin_turn = (d0[:, 0] * d[:, 1] - d0[:, 1] * d[:, 0]) / np.maximum(
        np.hypot(d0[:, 0], d0[:, 1]) * length, 1e-300
    )
    for i in np.flatnonzero(np.abs(sin_turn) <= 1e-9):
        out.append(Violation("flat-vertex", f"vertex {i} has interior angle pi"))
    if out:
        return out
    out.extend(_head_on_violations(polygon))
    return out


def _head_on_violations(polygon: Polygon) -> list[Violation]:
    """Motorcycles whose supporting lines coincide and that move toward each other."""
    eps = 1e-9
    refl = np.flatnonzero(polygon.reflex)
    starts, dirs = [], []
    for i in refl:
        vel = vertex_velocity(polygon.edge(polygon.prev_vertex[i]), polygon.edge(i))
        sp = math.hypot(*vel)
        starts.append(polygon.vertices[i])
        dirs.append((vel[0] / sp, vel[1] / sp))
    out = []
    for a in range(len(refl)):
        for b in range(a + 1, len(refl)):
            pa, da, pb, db = starts[a], dirs[a], starts[b], dirs[b]
            if da[0] * db[0] + da[1] * db[1] > -1 + eps:
                continue
            off = (pb[0] - pa[0], pb[1] - pa[1])
            if abs(cross(da, off)) <= eps * max(1.0, math.hypot(*off)) and off[0] * da[0] + off[1] * da[1] > 0:
                out.append(Violation("head-on", f"motorcycles at vertices {refl[a]} and {refl[b]}"))
    return out


def bounding_box(points: Iterable[Sequence[float]]):
    pts = np.asarray(list(points), dtype=float)
    return pts.min(axis=0), pts.max(axis=0)
