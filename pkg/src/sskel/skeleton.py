"""Skeleton graph container shared by the pipeline output and the oracle."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .geom import rotate

RIDGE, VALLEY, FLAT, BOUNDARY = "ridge", "valley", "flat", "polygon-boundary"


@dataclass
class Skeleton:
    """Vertices carry their roof height, so the terrain is recoverable.

    ``edges`` holds ``(i, j, label)`` with label one of ridge, valley, flat
    or polygon-boundary. ``faces`` maps a slab id to the boundary loops of
    its face (as coordinate arrays); the oracle leaves it empty.
    """

    vertices: np.ndarray
    edges: list[tuple[int, int, str]]
    faces: dict = field(default_factory=dict)
    provenance: str = "pipeline"

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)

    # -- queries -----------------------------------------------------------

    def segments(self, labels=(RIDGE, VALLEY, FLAT)) -> np.ndarray:
        sel = [(i, j) for i, j, lab in self.edges if lab in labels]
        if not sel:
            return np.zeros((0, 2, 3))
        idx = np.array(sel)
        return np.stack([self.vertices[idx[:, 0]], self.vertices[idx[:, 1]]], axis=1)

    def count(self, label: str) -> int:
        return sum(1 for *_, lab in self.edges if lab == label)

    def degrees(self, labels=(RIDGE, VALLEY, FLAT)) -> Counter:
        deg: Counter = Counter()
        for i, j, lab in self.edges:
            if lab in labels:
                deg[i] += 1
                deg[j] += 1
        return deg

    def height_range(self) -> float:
        return float(self.vertices[:, 2].max()) if len(self.vertices) else 0.0

    def rotated(self, angle: float) -> "Skeleton":
        v = self.vertices.copy()
        v[:, :2] = rotate(v[:, :2], angle)
        faces = {}
        for k, loops in self.faces.items():
            faces[k] = []
            for loop in loops:
                loop = np.array(loop, dtype=float)
                loop[:, :2] = rotate(loop[:, :2], angle)
                faces[k].append(loop)
        return Skeleton(v, list(self.edges), faces, self.provenance)

    # -- serialisation -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "provenance": self.provenance,
            "vertices": self.vertices.tolist(),
            "edges": [[int(i), int(j), lab] for i, j, lab in self.edges],
            "faces": {str(k): [np.asarray(l).tolist() for l in loops] for k, loops in self.faces.items()},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Skeleton":
        faces = {int(k): [np.asarray(l) for l in loops] for k, loops in doc.get("faces", {}).items()}
        return cls(
            np.asarray(doc["vertices"], dtype=float),
            [(int(i), int(j), lab) for i, j, lab in doc["edges"]],
            faces,
            doc.get("provenance", "pipeline"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def build_skeleton(segments, tol: float = 1e-9, provenance: str = "pipeline") -> Skeleton:
    """Weld labelled 3D segments ``(p, q, label)`` into an indexed graph.

    Endpoints closer than ``tol`` in the plane are merged; zero-length and
    duplicate edges are dropped.
    """
    from scipy.spatial import cKDTree

    segs = [(np.asarray(p, float), np.asarray(q, float), lab) for p, q, lab in segments]
    if not segs:
        return Skeleton(np.zeros((0, 3)), [], provenance=provenance)
    pts = np.array([s[k] for s in segs for k in (0, 1)])
    tree = cKDTree(pts[:, :2])
    parent = list(range(len(pts)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in tree.query_pairs(tol):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = {}
    verts = []
    index = np.empty(len(pts), dtype=int)
    for k in range(len(pts)):
        r = find(k)
        if r not in roots:
            roots[r] = len(verts)
            verts.append(pts[r])
        index[k] = roots[r]
    edges = {}
    for k, (_, _, lab) in enumerate(segs):
        i, j = index[2 * k], index[2 * k + 1]
        if i == j:
            continue
        key = (min(i, j), max(i, j))
        if key not in edges or edges[key] == RIDGE and lab != RIDGE:
            edges[key] = lab
    return Skeleton(np.array(verts), [(i, j, lab) for (i, j), lab in edges.items()], provenance=provenance)
