"""Offset curves read off the roof.

Run:  python3 demos/02_offsets.py [outdir]

Once the skeleton is known, the polygon shrunk by t is the level set of
the roof at height t. We sweep t on a random polygon with a hole and
report how area and component count change as the offset eats through
narrow parts.
"""
import sys
from pathlib import Path

import numpy as np

from sskel.assembly import compute_skeleton
from sskel.generators import random_polygon
from sskel.geom import Polygon
from sskel.render import skeleton_svg

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(".")
P = random_polygon(28, 9, seed=4, hole=True)
res = compute_skeleton(P)
zmax = res.skeleton.height_range()
print(f"n={P.n}, r={P.r}, roof height {zmax:.4f}")
print(f"{'t':>6} {'parts':>5} {'holes':>5} {'area':>8}")
for t in np.linspace(0, zmax, 9)[:-1]:
    polys = res.offset(float(t))
    area = sum(Polygon(p["outer"], p["holes"]).area() for p in polys)
    holes = sum(len(p["holes"]) for p in polys)
    print(f"{t:6.3f} {len(polys):5d} {holes:5d} {area:8.4f}")

# offsets as extra rings on the SVG
rings = [np.array(r) for t in np.linspace(0.05, zmax, 6)[:-1] for p in res.offset(float(t)) for r in [p["outer"], *p["holes"]]]
(out / "offsets.svg").write_text(skeleton_svg(res.skeleton, P, rings))
print(f"wrote {out / 'offsets.svg'}")
