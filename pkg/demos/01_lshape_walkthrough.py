"""Walk through the pipeline on an L-shaped polygon.

Run:  python3 demos/01_lshape_walkthrough.py [outdir]

The L has one reflex vertex, so one motorcycle leaves it and the roof
terrain is the lower envelope of 6 edge slabs and 2 motorcycle slabs.
We print each stage and write an SVG with the leaf cells overlaid.
"""
import sys
from pathlib import Path

import numpy as np

from sskel.assembly import compute_skeleton
from sskel.generators import irregular_l
from sskel.oracle import compare_skeletons, oracle_skeleton
from sskel.render import kp_rings, skeleton_svg
from sskel.skeleton import FLAT, RIDGE, VALLEY

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(".")
P = irregular_l()
print(f"polygon: n={P.n} vertices, r={P.r} reflex")

res = compute_skeleton(P, keep_kp=True)
if res.rotation:
    # one edge of this L is vertical, which would put a skeleton edge on a cut
    print(f"input rotated by {res.rotation:.6f} rad while computing, rotated back after")

g = res.graph
print(f"motorcycle graph: {len(g.motorcycles)} motorcycle(s), {len(g.vertices)} vertices")
for v in g.vertices:
    print(f"   {v.kind:<18} at ({v.xy[0]:.4f}, {v.xy[1]:.4f})")

print(f"slabs: {len(res.slabset)} = n + 2r")

st = res.stats
print(f"subdivision: {st.cells_total} cells, vertical depth {st.depth_dv}, valley depth {st.depth_dval}")
kinds = {}
for leaf in st.leaves():
    kinds[leaf.kind] = kinds.get(leaf.kind, 0) + 1
print("   leaves by kind:", kinds)
print(f"   lower-envelope input size over all cuts and leaves: {st.envelope_work}")

Sp, S = res.refined, res.skeleton
print(f"S': {Sp.count(RIDGE)} ridges, {Sp.count(VALLEY)} valley, {Sp.count(FLAT)} flat edges")
print(f"S : {S.count(RIDGE)} ridges, {S.count(VALLEY)} valley after removing {res.flat_removed} flat edges")
top = S.vertices[np.argmax(S.vertices[:, 2])]
print(f"highest roof point ({top[0]:.4f}, {top[1]:.4f}) at height {top[2]:.4f}")

rep = compare_skeletons(S, oracle_skeleton(P))
print(f"against the wavefront oracle: Hausdorff {rep.hausdorff:.1e}, height deviation {rep.max_height_deviation:.1e}")

cells = kp_rings(res.kp)
if res.rotation:
    from sskel.geom import rotate

    cells = [rotate(c, -res.rotation) for c in cells]
path = out / "lshape.svg"
path.write_text(skeleton_svg(Sp, P, cells))
print(f"wrote {path}")
