"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned here and must not be loosened to make a run pass.
"""
from __future__ import annotations

import math
import time

import numpy as np
import shapely
from shapely.geometry import LineString
from shapely.geometry import Polygon as SP

from sskel.assembly import compute_skeleton
from sskel.envelope import envelope_planes, envelope_segments
from sskel.generators import random_polygon, rectangle, regular_polygon, tight_polygon, unit_square
from sskel.geom import Plane, rotate
from sskel.oracle import compare_skeletons, oracle_skeleton
from sskel.skeleton import FLAT, RIDGE, VALLEY
from sskel.slabs import envelope_heights
from sskel.subdivision import kp_vertex_degrees

ORACLE_TOL = 1e-6
ORACLE_BUDGET_S = 60.0
ANALYTIC_TOL = 1e-9
TERRAIN_TOL = 1e-8
ENVELOPE_TOL = 1e-9
SCALING_SLACK = 2.0
WORK_FACTOR = 4.0
BENCH_BUDGET_S = 300.0
MAX_KP_DEGREE = 5


def report(capsys, number: int, ok: bool, text: str) -> None:
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}")


def _interior_points(poly, k: int, rng) -> np.ndarray:
    shape = SP(poly.outer, [h for h in poly.holes])
    lo, hi = poly.vertices.min(axis=0), poly.vertices.max(axis=0)
    out = []
    while len(out) < k:
        cand = rng.uniform(lo, hi, size=(4 * k, 2))
        inside = shapely.contains_xy(shape, cand[:, 0], cand[:, 1])
        out.extend(cand[inside].tolist())
    return np.array(out[:k])


def _random_instances(count: int, seed: int, n_lo=8, n_hi=40, r_hi=12):
    rng = np.random.default_rng(seed)
    for k in range(count):
        n = int(rng.integers(n_lo, n_hi))
        r = int(rng.integers(1, min(r_hi, n // 2) + 1))
        yield random_polygon(n, r, seed * 1000 + k)


# 1 -------------------------------------------------------------------------


def test_criterion_1_oracle_equivalence(capsys):
    rng = np.random.default_rng(2024)
    worst_h = worst_z = 0.0
    failures = []
    count = 0
    t0 = time.perf_counter()
    while count < 120:
        n = int(rng.integers(6, 25))
        r = int(rng.integers(1, min(6, n // 2) + 1))
        hole = r >= 3 and count % 5 == 0
        P = random_polygon(n, r, int(rng.integers(2**31)), hole=hole)
        rep = compare_skeletons(compute_skeleton(P).skeleton, oracle_skeleton(P), ORACLE_TOL)
        worst_h = max(worst_h, rep.hausdorff)
        worst_z = max(worst_z, rep.max_height_deviation)
        if not rep.ok(ORACLE_TOL):
            failures.append((n, r, rep.hausdorff, rep.max_height_deviation))
        count += 1
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < ORACLE_BUDGET_S
    report(capsys, 1, ok, f"{count} polygons, max Hausdorff {worst_h:.2e}, max height dev {worst_z:.2e}, "
                          f"{elapsed:.1f}s (limits {ORACLE_TOL:g}, {ORACLE_BUDGET_S:g}s)")
    assert not failures, failures[:5]
    assert elapsed < ORACLE_BUDGET_S


# 2 -------------------------------------------------------------------------


def _has_vertex(sk, p) -> bool:
    return bool(np.any(np.linalg.norm(sk.vertices - np.asarray(p, float), axis=1) <= ANALYTIC_TOL))


def _has_edge(sk, p, q) -> bool:
    V = sk.vertices
    for i, j, lab in sk.edges:
        a, b = V[i], V[j]
        for x, y in ((a, b), (b, a)):
            if np.linalg.norm(x - p) <= ANALYTIC_TOL and np.linalg.norm(y - q) <= ANALYTIC_TOL:
                return lab == RIDGE
    return False


def test_criterion_2_analytic_cases(capsys):
    sq = compute_skeleton(unit_square()).skeleton
    ok_sq = _has_vertex(sq, (0.5, 0.5, 0.5)) and sq.count(RIDGE) == 4

    rect = compute_skeleton(rectangle(4, 2)).skeleton
    ok_rect = _has_edge(rect, np.array([1.0, 1.0, 1.0]), np.array([3.0, 1.0, 1.0])) and rect.count(RIDGE) == 5

    hexa = compute_skeleton(regular_polygon(6)).skeleton
    apothem = math.cos(math.pi / 6)
    centre = np.array([0.0, 0.0, apothem])
    spokes = sum(
        1 for i, j, lab in hexa.edges if lab == RIDGE
        and min(np.linalg.norm(hexa.vertices[i] - centre), np.linalg.norm(hexa.vertices[j] - centre)) <= ANALYTIC_TOL
    )
    ok_hex = spokes == 6 and hexa.count(RIDGE) == 6 and _has_vertex(hexa, centre)

    ok = ok_sq and ok_rect and ok_hex
    report(capsys, 2, ok, f"square apex {ok_sq}, rectangle ridge {ok_rect}, hexagon spokes {spokes}/6 "
                          f"(tol {ANALYTIC_TOL:g})")
    assert ok_sq and ok_rect and ok_hex


# 3 -------------------------------------------------------------------------


def test_criterion_3_terrain_consistency(capsys):
    rng = np.random.default_rng(3)
    worst = 0.0
    for P in _random_instances(20, 3):
        res = compute_skeleton(P)
        pts = _interior_points(P, 1000, rng)
        # the slabs live in the frame the pipeline ran in
        ref, _ = envelope_heights(res.slabset, rotate(pts, res.rotation) if res.rotation else pts)
        got = res.height(pts)
        worst = max(worst, float(np.max(np.abs(got - ref))))
    ok = worst <= TERRAIN_TOL
    report(capsys, 3, ok, f"20 instances x 1000 points, max |assembled - min over slabs| {worst:.2e} "
                          f"(tol {TERRAIN_TOL:g})")
    assert ok


# 4 -------------------------------------------------------------------------


def test_criterion_4_structure(capsys):
    problems = []
    for P in _random_instances(20, 4):
        res = compute_skeleton(P)
        n, r = P.n, P.r
        faces = sum(1 for loops in res.refined.faces.values() if len(loops))
        if faces != n + 2 * r:
            problems.append(("faces", n, r, faces))
        if res.flat_removed != 2 * r or res.refined.count(FLAT) != 2 * r or res.skeleton.count(FLAT):
            problems.append(("flat", n, r, res.flat_removed))
        sk = res.skeleton
        deg = sk.degrees((RIDGE, VALLEY))
        tol = 1e-9 * max(1.0, float(np.ptp(P.vertices, axis=0).max()))
        for v, d in deg.items():
            want = 1 if sk.vertices[v, 2] <= tol else 3
            if d != want:
                problems.append(("degree", n, r, v, d))
    ok = not problems
    report(capsys, 4, ok, f"20 instances: n+2r faces, 2r flat edges removed, interior degree 3 "
                          f"and boundary degree 1 ({len(problems)} violations)")
    assert ok, problems[:5]


# 5 -------------------------------------------------------------------------


def test_criterion_5_lemmas(capsys):
    bad = []
    max_deg = 0
    for P in _random_instances(20, 5):
        r = P.r
        res = compute_skeleton(P, keep_kp=True)
        st = res.stats
        for c in st.cells:
            if c.kind == "vertical" and any(cv > math.ceil(c.v / 2) for cv in c.child_v):
                bad.append(("halving", c.v, c.child_v))
            if c.kind in ("valley", "diagonal"):
                if any(cr > (2 * c.r) // 3 for cr in c.child_r):
                    bad.append(("valley count", c.r, c.child_r))
                if max(c.sides) > (2 * c.r) // 3:
                    bad.append(("cut sides", c.r, c.sides))
        for leaf in st.leaves():
            if leaf.kind not in ("empty", "wedge", "convex"):
                bad.append(("leaf", leaf.kind))
        if st.depth_dv > math.ceil(math.log2(2 * r)) + 1:
            bad.append(("depth_dv", r, st.depth_dv))
        if st.depth_dval > math.ceil(math.log(r, 1.5) if r > 1 else 0) + 1:
            bad.append(("depth_dval", r, st.depth_dval))
        d = int(kp_vertex_degrees(res.kp).max())
        max_deg = max(max_deg, d)
        if d > MAX_KP_DEGREE:
            bad.append(("kp degree", d))
    ok = not bad
    report(capsys, 5, ok, f"20 instances: halving, 2/3 valley split, depth bounds, leaf kinds, "
                          f"max KP degree {max_deg} <= {MAX_KP_DEGREE} ({len(bad)} violations)")
    assert ok, bad[:5]


# 6 -------------------------------------------------------------------------


def _conflict_measures(r: int, seeds=range(5)):
    sums, per_edge = [], []
    for seed in seeds:
        res = compute_skeleton(random_polygon(3 * r, r, seed), keep_kp=True)
        kp = res.kp
        cells = [SP(c.outer.pts, [h.pts for h in c.rings[1:]]) for c in kp.cells.values()]
        tree = shapely.STRtree(cells)
        worst = 0
        for s in res.refined.segments():
            ls = LineString(s[:, :2])
            worst = max(worst, sum(1 for k in tree.query(ls) if cells[k].intersection(ls).length > 1e-9))
        sums.append(res.stats.conflict_sum)
        per_edge.append(worst)
    lg = math.log2(r + 2)
    return float(np.mean(sums)) / (r * lg), max(per_edge) / lg


def test_criterion_6_conflict_scaling(capsys):
    c_sum, c_edge = _conflict_measures(8)
    rows = []
    ok = True
    for r in (16, 32, 64):
        s, e = _conflict_measures(r)
        rows.append(f"r={r}: {s / c_sum:.2f}/{e / c_edge:.2f}")
        ok &= s <= SCALING_SLACK * c_sum and e <= SCALING_SLACK * c_edge
    report(capsys, 6, ok, f"fit at r=8 (C_sum {c_sum:.2f}, C_edge {c_edge:.2f}); ratios to fit "
                          f"{', '.join(rows)} (limit {SCALING_SLACK:g})")
    assert ok


# 7 -------------------------------------------------------------------------


def test_criterion_7_tight_family_work(capsys):
    t0 = time.perf_counter()
    work = {}
    for n, r in ((256, 8), (512, 16), (1024, 32), (2048, 64)):
        work[(n, r)] = compute_skeleton(tight_polygon(n, r)).stats.envelope_work
    elapsed = time.perf_counter() - t0

    def model(n, r):
        return n * math.log2(n) * math.log2(r)

    C = work[(256, 8)] / model(256, 8)
    ratio = work[(2048, 64)] / (C * model(2048, 64))
    ok = 1 / WORK_FACTOR <= ratio <= WORK_FACTOR and elapsed < BENCH_BUDGET_S
    report(capsys, 7, ok, f"C={C:.4f} from (256,8); measured/predicted at (2048,64) = {ratio:.2f} "
                          f"(limit {WORK_FACTOR:g}x), bench {elapsed:.1f}s (limit {BENCH_BUDGET_S:g}s)")
    assert ok


# 8 -------------------------------------------------------------------------


def _random_convex(rng, k):
    a = np.sort(rng.uniform(0, 2 * np.pi, k))
    pts = np.column_stack([np.cos(a), np.sin(a)]) * rng.uniform(0.5, 2.0) + rng.uniform(-1, 1, 2)
    return np.asarray(SP(pts).convex_hull.exterior.coords)[:-1]


def test_criterion_8_envelopes(capsys):
    rng = np.random.default_rng(8)
    worst_seg = worst_pl = 0.0
    for _ in range(200):
        m = int(rng.integers(1, 40))
        t0 = rng.uniform(0, 10, m)
        t1 = t0 + rng.uniform(0.01, 5, m)
        z0 = rng.uniform(-5, 5, m)
        sl = rng.uniform(-2, 2, m)
        chain = envelope_segments([(t0[i], t1[i], z0[i], sl[i], i) for i in range(m)])
        ts = rng.uniform(0, 15, 1000)
        # stay clear of segment endpoints, where the envelope jumps
        ends = np.concatenate([t0, t1])
        ts = ts[np.min(np.abs(ts[:, None] - ends[None, :]), axis=1) > 1e-6]
        cover = (ts[:, None] >= t0) & (ts[:, None] <= t1)
        ref = np.min(np.where(cover, z0 + sl * ts[:, None], np.inf), axis=1)
        got = chain.values(ts)
        fin = np.isfinite(ref)
        assert np.array_equal(fin, np.isfinite(got))
        worst_seg = max(worst_seg, float(np.max(np.abs(got[fin] - ref[fin]), initial=0.0)))

    for _ in range(200):
        cell = _random_convex(rng, int(rng.integers(3, 12)))
        m = int(rng.integers(1, 30))
        coef = rng.uniform(-3, 3, (m, 3))
        patch = envelope_planes([(Plane(*c), i) for i, c in enumerate(coef)], cell)
        pts = _interior_points_of(cell, 1000, rng)
        ref = np.min(pts @ coef[:, :2].T + coef[:, 2], axis=1)
        got = np.full(len(pts), np.inf)
        for pid, face in patch.faces.items():
            inside = shapely.contains_xy(SP(face), pts[:, 0], pts[:, 1])
            got[inside] = pts[inside] @ coef[pid, :2] + coef[pid, 2]
        assert np.all(np.isfinite(got)), "sample point outside every envelope face"
        worst_pl = max(worst_pl, float(np.max(np.abs(got - ref))))
    ok = worst_seg <= ENVELOPE_TOL and worst_pl <= ENVELOPE_TOL
    report(capsys, 8, ok, f"200 segment sets max dev {worst_seg:.2e}, 200 plane sets max dev {worst_pl:.2e} "
                          f"(tol {ENVELOPE_TOL:g})")
    assert ok


def _interior_points_of(ring, k, rng):
    shape = SP(ring)
    lo, hi = ring.min(axis=0), ring.max(axis=0)
    out = []
    while len(out) < k:
        cand = rng.uniform(lo, hi, size=(4 * k, 2))
        out.extend(cand[shapely.contains_xy(shape, cand[:, 0], cand[:, 1])].tolist())
    return np.array(out[:k])
