import math

import numpy as np
import pytest

from sskel.divide import (
    CONVEX,
    EMPTY,
    WEDGE,
    _ear_clip,
    balanced_cut,
    classify,
    extend_valleys,
    median_vertex,
    run_divide,
)
from sskel.generators import random_polygon, tight_polygon
from sskel.motorcycle import motorcycle_graph
from sskel.slabs import build_slabs
from sskel.subdivision import (
    NO_FACE,
    init_kp,
    kp_vertex_degrees,
    lift_cut,
    tag_runs,
    trace_descent,
    vertical_cut_segments,
)


def _kp(P):
    g = motorcycle_graph(P)
    return init_kp(P, build_slabs(P, g), g)


def test_initial_cell_is_the_polygon(lshape):
    kp = _kp(lshape)
    root = kp.cells[0]
    assert len(root.rings) == 1
    assert np.allclose(root.outer.pts, lshape.outer)
    # the conflict list is every vertex of the motorcycle graph
    assert len(root.conflicts) == 2
    assert np.all(root.outer.tout == NO_FACE)
    assert sorted(root.slabs.tolist()) == list(range(lshape.n + 2))


def test_tag_runs_cyclic():
    assert tag_runs(np.array([3, 3, 4, 4, 3])) == [4, 3]
    assert tag_runs(np.array([1, 1])) == [1]
    assert tag_runs(np.array([], dtype=int)) == []


def test_vertical_cut_of_lshape(lshape):
    kp = _kp(lshape)
    segs = vertical_cut_segments(kp.cells[0], 2.0)
    assert len(segs) == 1
    lo, hi = segs[0]
    assert hi > lo


def test_lift_cut_breakpoints_are_skeleton_crossings():
    P = tight_polygon(40, 4)
    kp = _kp(P)
    root = kp.cells[0]
    x0 = 0.5
    (lo, hi), = vertical_cut_segments(root, x0)
    chain = lift_cut(kp, root.slabs, (x0, 0.0), (0.0, 1.0), lo, hi)
    # at each interior breakpoint two slabs agree in height
    for a, b in zip(chain.pieces, chain.pieces[1:]):
        t = a.tb
        assert a.at(t) == pytest.approx(b.at(t), abs=1e-9)
    assert kp.envelope_work > 0


def test_descent_path_on_motorcycle_slab_ends_at_reflex_vertex(lshape):
    kp = _kp(lshape)
    ss = kp.slabset
    m = kp.graph.motorcycles[0]
    sid = ss.motorcycle_slabs(0)[0]
    a, b = np.array(m.start), np.array(kp.graph.segment(0)[1])
    p = 0.5 * (a + b) + 0.05 * ss.u[sid]
    path, kinds = trace_descent(kp, sid, p)
    assert np.allclose(path[-1], m.start)
    assert kinds == [False, True]
    z = [float(ss.coef[sid] @ [q[0], q[1], 1.0]) for q in path]
    assert all(u > v for u, v in zip(z, z[1:]))


def test_median_vertex_tie_break():
    P = random_polygon(20, 4, 0)
    kp = _kp(P)
    c = kp.cells[0].conflicts
    g = median_vertex(kp, c)
    xs = np.sort(kp.gverts[c, 0])
    assert kp.gverts[g, 0] == xs[(len(c) - 1) // 2]


def test_full_division_properties():
    P = random_polygon(30, 8, 4)
    kp = _kp(P)
    st = run_divide(kp)
    kinds = {c.kind for c in st.leaves()}
    assert kinds <= {EMPTY, WEDGE, CONVEX}
    for c in st.cells:
        if c.kind == "vertical":
            assert max(c.child_v) <= math.ceil(c.v / 2)
    assert kp_vertex_degrees(kp).max() <= 5
    # leaves tile the polygon
    area = sum(abs(_area(r.pts)) * (1 if k == 0 else -1) for leaf in kp.leaves() for k, r in enumerate(leaf.rings))
    assert area == pytest.approx(P.area(), rel=1e-9)


def _area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def test_balanced_cut_splits_valleys():
    # find a cell of the valley stage holding several extended valleys
    for seed in range(20):
        P = random_polygon(40, 12, seed)
        kp = _kp(P)
        st = run_divide(kp)
        for c in st.cells:
            if c.kind in ("valley", "diagonal") and c.r >= 3:
                assert max(c.sides) <= (2 * c.r) // 3
                return
    pytest.skip("no cell with three or more valleys")


def test_ear_clip_square_with_notch():
    pts = np.array([(0, 0), (2, 0), (2, 2), (1, 1), (0, 2)], float)
    tris = _ear_clip(pts)
    assert len(tris) == 3
    area = sum(abs(_area(pts[list(t)])) for t in tris)
    assert area == pytest.approx(_area(pts))


def test_classify_on_root_is_none(lshape):
    kp = _kp(lshape)
    assert classify(kp, kp.cells[0]) is None
    assert len(extend_valleys(kp, kp.cells[0])) == 1
