"""How the work grows on the tight family.

Run:  python3 demos/03_scaling.py

The tight family is a tall polygon whose left side is a long convex
chain of near-vertical edges, with r small dips along the top. Every
vertical cut crosses a share of the chain faces that does not shrink
with depth, so the envelope work behaves like n log n log r. We fit the
constant on the smallest size and compare the prediction on larger ones.
"""
import math
import time

from sskel.assembly import compute_skeleton
from sskel.generators import tight_polygon

sizes = [(256, 8), (512, 16), (1024, 32), (2048, 64)]
rows = []
for n, r in sizes:
    t0 = time.perf_counter()
    st = compute_skeleton(tight_polygon(n, r)).stats
    rows.append((n, r, time.perf_counter() - t0, st.envelope_work, st.depth_dv, st.depth_dval))

model = lambda n, r: n * math.log2(n) * math.log2(r)
C = rows[0][3] / model(*sizes[0])
print(f"fitted C = {C:.4f} on n={sizes[0][0]}, r={sizes[0][1]}")
print(f"{'n':>5} {'r':>3} {'seconds':>8} {'work':>7} {'predicted':>9} {'ratio':>6} {'dv':>3} {'dval':>4}")
for n, r, sec, work, dv, dval in rows:
    pred = C * model(n, r)
    print(f"{n:5d} {r:3d} {sec:8.2f} {work:7d} {pred:9.0f} {work / pred:6.2f} {dv:3d} {dval:4d}")
