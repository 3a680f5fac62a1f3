import json

import numpy as np
import pytest

from sskel.generators import random_polygon
from sskel.motorcycle import arrival_height, induce_motorcycles, motorcycle_graph


def test_one_motorcycle_per_reflex_vertex(lshape):
    ms = induce_motorcycles(lshape)
    assert len(ms) == 1
    m = ms[0]
    assert lshape.reflex[m.vertex]
    assert np.allclose(m.start, lshape.vertices[m.vertex])


def test_lshape_graph_has_two_vertices(lshape):
    g = motorcycle_graph(lshape)
    assert sorted(v.kind for v in g.vertices) == ["crash-on-boundary", "start"]
    crash = next(v for v in g.vertices if v.kind == "crash-on-boundary")
    # the crash point lies on the polygon boundary
    assert lshape.boundary_distance(crash.xy) < 1e-9


def test_arrival_times_grow_along_track(lshape):
    g = motorcycle_graph(lshape)
    m = g.motorcycles[0]
    t = g.tracks[0].stop_time
    assert arrival_height(g, m.start) == pytest.approx(0.0)
    assert arrival_height(g, m.position(0.5 * t)) == pytest.approx(0.5 * t)
    with pytest.raises(ValueError):
        arrival_height(g, (100.0, 100.0))


def test_tracks_stop_at_graph_vertices():
    P = random_polygon(30, 8, 2)
    g = motorcycle_graph(P)
    assert len(g.motorcycles) == 8
    for tr in g.tracks:
        m = g.motorcycles[tr.owner]
        assert np.allclose(m.position(tr.stop_time), g.vertices[tr.stop].xy)
        assert tr.stop_time > 0


def test_json_export_is_serialisable(lshape):
    doc = motorcycle_graph(lshape).to_json()
    s = json.dumps(doc)
    assert "arrivals" in s and len(doc["edges"]) == 1


def test_right_angle_reflex_speed_is_sqrt2():
    from sskel.geom import Polygon

    L = Polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    (m,) = induce_motorcycles(L)
    assert m.speed == pytest.approx(np.sqrt(2))
    # it leaves the reflex corner along the outward bisector of the wedge
    assert np.allclose(np.array(m.velocity) / m.speed, -np.array([1, 1]) / np.sqrt(2))
