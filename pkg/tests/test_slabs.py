import numpy as np
import pytest

from sskel.generators import random_polygon
from sskel.geom import Polygon
from sskel.motorcycle import motorcycle_graph
from sskel.oracle import clearance
from sskel.slabs import EDGE, MOTORCYCLE, build_slabs, envelope_heights, height_at, terrain_height_oracle


def test_slab_counts_and_ids(lshape):
    g = motorcycle_graph(lshape)
    ss = build_slabs(lshape, g)
    assert len(ss) == lshape.n + 2 * lshape.r
    assert list(ss.kind[: lshape.n]) == [EDGE] * lshape.n
    a, b = ss.motorcycle_slabs(0)
    assert ss.kind[a] == ss.kind[b] == MOTORCYCLE
    assert ss.partner(a) == b and ss.partner(b) == a
    assert ss.same_vertex_pair(a, b)
    # a motorcycle slab lies in the plane of one of the reflex vertex's edges
    assert np.allclose(ss.coef[a], ss.coef[ss.edge[a]])


def test_height_outside_strip_is_none(lshape):
    ss = build_slabs(lshape, motorcycle_graph(lshape))
    s = ss[0]
    p, q = np.array(s.base)
    below = 0.5 * (p + q) - np.array(s.ascent)
    assert height_at(s, below) is None
    assert height_at(s, 0.5 * (p + q)) == pytest.approx(0.0, abs=1e-12)


def test_convex_terrain_is_clearance():
    P = Polygon([(0, 0), (3, 0.2), (3.3, 2), (1, 2.5), (-0.4, 1.2)])
    ss = build_slabs(P, motorcycle_graph(P))
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = rng.uniform([0, 0.3], [3, 2])
        if P.contains(p):
            assert terrain_height_oracle(ss, p, P) == pytest.approx(clearance(P, p), abs=1e-12)


def test_terrain_below_clearance_everywhere():
    # the roof never rises above the distance to the boundary
    P = random_polygon(20, 5, 1)
    ss = build_slabs(P, motorcycle_graph(P))
    rng = np.random.default_rng(1)
    pts = np.array([p for p in rng.uniform(-1, 1, (400, 2)) if P.contains(p)])
    z, _ = envelope_heights(ss, pts)
    d = np.array([clearance(P, p) for p in pts])
    assert np.all(z <= d + 1e-12)
    assert np.any(z < d - 1e-6)  # strictly lower near reflex vertices


def test_oracle_rejects_outside_points(lshape):
    ss = build_slabs(lshape, motorcycle_graph(lshape))
    with pytest.raises(ValueError):
        terrain_height_oracle(ss, (50.0, 50.0), lshape)
