"""Straight skeletons of polygons with holes, computed from the lower
envelope of edge and motorcycle slabs by divide and conquer."""
from .assembly import SkeletonResult, compute_skeleton
from .geom import DegenerateInput, GeometryError, Polygon
from .oracle import compare_skeletons, oracle_skeleton
from .skeleton import Skeleton

__version__ = "0.1.0"

__all__ = [
    "DegenerateInput",
    "GeometryError",
    "Polygon",
    "Skeleton",
    "SkeletonResult",
    "compare_skeletons",
    "compute_skeleton",
    "oracle_skeleton",
]
