import numpy as np
import pytest

from sskel.generators import random_polygon, rectangle, unit_square
from sskel.geom import Polygon
from sskel.oracle import clearance, compare_skeletons, oracle_skeleton
from sskel.skeleton import BOUNDARY, RIDGE, VALLEY


def test_square():
    sk = oracle_skeleton(unit_square())
    assert sk.count(RIDGE) == 4 and sk.count(BOUNDARY) == 4
    assert np.allclose(sk.vertices[np.argmax(sk.vertices[:, 2])], (0.5, 0.5, 0.5))


def test_rectangle_ridge():
    sk = oracle_skeleton(rectangle(4, 2))
    top = sk.vertices[np.isclose(sk.vertices[:, 2], 1.0)]
    assert np.allclose(sorted(map(tuple, top)), [(1, 1, 1), (3, 1, 1)])


def test_convex_vertex_heights_are_clearances():
    P = Polygon([(0, 0), (3, 0.2), (3.3, 2), (1, 2.5), (-0.4, 1.2)])
    sk = oracle_skeleton(P)
    for x, y, z in sk.vertices:
        assert z == pytest.approx(clearance(P, (x, y)), abs=1e-8)


def test_reflex_vertex_traces_valley(lshape):
    sk = oracle_skeleton(lshape)
    assert sk.count(VALLEY) == 1


def test_deterministic():
    P = random_polygon(20, 5, 3)
    a, b = oracle_skeleton(P), oracle_skeleton(P)
    assert a.edges == b.edges and np.array_equal(a.vertices, b.vertices)


def test_compare_self_is_zero():
    sk = oracle_skeleton(random_polygon(12, 3, 1))
    rep = compare_skeletons(sk, sk)
    assert rep.hausdorff < 1e-15 and rep.max_height_deviation == 0.0
    assert rep.matched_edges == rep.edges_a


def test_size_limit():
    with pytest.raises(ValueError):
        oracle_skeleton(random_polygon(40, 2, 0), max_vertices=30)
