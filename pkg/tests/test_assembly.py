import math

import numpy as np
import pytest

from sskel.assembly import compute_skeleton, rotation_triggers, strip_flat_edges
from sskel.generators import irregular_l, random_polygon, unit_square
from sskel.geom import DegenerateInput, GeometryError, Polygon
from sskel.oracle import clearance, compare_skeletons, oracle_skeleton
from sskel.skeleton import BOUNDARY, FLAT, RIDGE, VALLEY, Skeleton


def test_unit_square_two_diagonals():
    res = compute_skeleton(unit_square())
    sk = res.skeleton
    assert len(sk.vertices) == 5
    assert sk.count(RIDGE) == 4 and sk.count(FLAT) == 0
    assert res.flat_removed == 0
    apex = sk.vertices[np.argmax(sk.vertices[:, 2])]
    assert np.allclose(apex, (0.5, 0.5, 0.5))


def test_lshape_flat_edges_are_orthogonal(lshape):
    res = compute_skeleton(lshape, keep_flat=True)
    sk = res.skeleton
    assert sk.count(FLAT) == 2 and sk.count(VALLEY) == 1
    v = int(np.flatnonzero(lshape.reflex)[0])
    pv = lshape.vertices[v]
    for i, j, lab in sk.edges:
        if lab != FLAT:
            continue
        a, b = sk.vertices[i, :2], sk.vertices[j, :2]
        d = b - a if np.allclose(a, pv) else a - b
        # orthogonal to one of the two polygon edges at v
        e1 = lshape.vertices[lshape.next_vertex[v]] - pv
        e0 = pv - lshape.vertices[lshape.prev_vertex[v]]
        assert min(abs(d @ e0), abs(d @ e1)) < 1e-9 * np.linalg.norm(d) * 10


def test_strip_flat_edges_counts(lshape):
    res = compute_skeleton(lshape)
    S, removed = strip_flat_edges(res.refined)
    assert removed == 2
    assert S.count(FLAT) == 0


def test_face_count_is_n_plus_2r():
    P = random_polygon(25, 6, 11)
    res = compute_skeleton(P)
    assert len([k for k, loops in res.refined.faces.items() if loops]) == P.n + 2 * P.r
    # S has one face per polygon edge
    assert len(res.skeleton.faces) == P.n


def test_polygon_with_hole_matches_oracle():
    P = random_polygon(16, 6, 5, hole=True)
    assert len(P.holes) == 1
    rep = compare_skeletons(compute_skeleton(P).skeleton, oracle_skeleton(P))
    assert rep.ok(1e-6)


def test_rotation_triggers_and_back_rotation():
    P = irregular_l()  # has a vertical edge
    assert "vertical edge" in rotation_triggers(P)
    res = compute_skeleton(P)
    assert res.rotation != 0.0
    rep = compare_skeletons(res.skeleton, oracle_skeleton(P))
    assert rep.ok(1e-6)


def test_no_auto_rotate_rejects_vertical_edges():
    with pytest.raises(DegenerateInput):
        compute_skeleton(unit_square(), auto_rotate=False)


def test_self_intersection_rejected():
    with pytest.raises(GeometryError):
        compute_skeleton(Polygon([(0, 0), (2, 2), (2, 0), (0, 2)]))


def test_heights_on_faces_match_planes():
    P = random_polygon(18, 4, 2)
    res = compute_skeleton(P)
    rng = np.random.default_rng(0)
    pts = np.array([p for p in rng.uniform(-1, 1, (300, 2)) if P.contains(p)])
    z = res.height(pts)
    d = np.array([clearance(P, x) for x in pts])
    assert np.all(z <= d + 1e-9)
    assert np.all(z >= 0)


@pytest.mark.parametrize("t, expect", [(0.0, 1.0), (0.25, 0.25), (0.6, None)])
def test_offset_square(t, expect):
    polys = compute_skeleton(unit_square()).offset(t)
    if expect is None:
        assert polys == []
        return
    (poly,) = polys
    pts = np.array(poly["outer"])
    assert len(pts) == 4
    assert np.allclose(sorted(pts[:, 0]), [t, t, 1 - t, 1 - t], atol=1e-9)
    assert np.allclose(sorted(pts[:, 1]), [t, t, 1 - t, 1 - t], atol=1e-9)


def test_offset_area_shrinks(lshape):
    res = compute_skeleton(lshape)
    areas = []
    for t in (0.1, 0.3, 0.5):
        areas.append(sum(Polygon(p["outer"], p["holes"]).area() for p in res.offset(t)))
    assert areas[0] > areas[1] > areas[2] > 0


def test_skeleton_json_roundtrip(lshape):
    sk = compute_skeleton(lshape).skeleton
    back = Skeleton.from_json(sk.to_json())
    assert back.edges == sk.edges
    assert np.allclose(back.vertices, sk.vertices)


def test_offset_zero_keeps_the_hole():
    P = random_polygon(28, 9, 4, hole=True)
    (poly,) = compute_skeleton(P).offset(0.0)
    assert len(poly["holes"]) == 1
    assert Polygon(poly["outer"], poly["holes"]).area() == pytest.approx(P.area(), rel=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_offset_matches_mitred_buffer(seed):
    # an inward offset with mitred joins is exactly the roof level set
    from shapely.geometry import Polygon as SP
    from shapely.ops import unary_union

    P = random_polygon(20, 5, seed)
    res = compute_skeleton(P)
    shape = SP(P.outer, P.holes)
    for t in (0.05, 0.15, 0.3):
        ref = shape.buffer(-t, join_style="mitre", mitre_limit=1e6)
        got = unary_union([SP(p["outer"], p["holes"]) for p in res.offset(t)])
        assert got.symmetric_difference(ref).area <= 1e-8 * max(shape.area, 1.0)


def test_heights_match_shrink_simulation(lshape):
    """Height of a point = the offset distance at which it leaves the shrinking polygon."""
    from shapely.geometry import Point
    from shapely.geometry import Polygon as SP

    shape = SP(lshape.outer)
    res = compute_skeleton(lshape)
    xs, ys = np.meshgrid(np.linspace(0.1, 2.9, 8), np.linspace(0.1, 2.4, 8))
    pts = [p for p in np.column_stack([xs.ravel(), ys.ravel()]) if lshape.contains(p)]
    dt = 1e-3
    levels = np.arange(0.0, 1.0, dt)
    shrunk = [shape.buffer(-t, join_style="mitre", mitre_limit=1e6) for t in levels]
    z = res.height(np.array(pts))
    for p, zp in zip(pts, z):
        inside = [s.contains(Point(p)) for s in shrunk]
        t_exit = levels[inside.index(False)] if False in inside else levels[-1]
        assert abs(t_exit - zp) <= dt + 1e-9
