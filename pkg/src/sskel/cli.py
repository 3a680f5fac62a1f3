"""``sskel`` command line.

Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 general-position
failure (degenerate input).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .assembly import compute_skeleton
from .geom import DegenerateInput, GeometryError, Polygon, rotate
from .generators import FAMILIES
from .motorcycle import motorcycle_graph
from .oracle import compare_skeletons, oracle_skeleton
from .render import kp_rings, skeleton_svg
from .skeleton import Skeleton

log = logging.getLogger("sskel")

EXIT_IO, EXIT_INVALID, EXIT_DEGENERATE = 1, 2, 3
BENCH_COLUMNS = ["family", "n", "r", "seed", "wall_ms", "envelope_work", "depth_dv", "depth_dval", "cells_total"]


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# input / output


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_INVALID, f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _ring(obj, where: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) < 3:
        raise CliError(EXIT_INVALID, f"{where}: a ring needs at least 3 points")
    for k, p in enumerate(obj):
        if not (isinstance(p, list) and len(p) == 2 and all(isinstance(c, (int, float)) for c in p)):
            raise CliError(EXIT_INVALID, f"{where}[{k}]: expected [x, y], got {json.dumps(p)}")
        if not all(math.isfinite(c) for c in p):
            raise CliError(EXIT_INVALID, f"{where}[{k}]: non-finite coordinate")
    return np.asarray(obj, dtype=float)


def load_polygon(path: str) -> Polygon:
    doc = _read_json(path)
    if not isinstance(doc, dict) or "outer" not in doc:
        raise CliError(EXIT_INVALID, f"{path}: expected an object with an 'outer' ring")
    outer = _ring(doc["outer"], "outer")
    holes = doc.get("holes", [])
    if not isinstance(holes, list):
        raise CliError(EXIT_INVALID, "holes: expected a list of rings")
    holes = [_ring(h, f"holes[{k}]") for k, h in enumerate(holes)]
    try:
        return Polygon(outer, holes)
    except (GeometryError, ValueError) as exc:
        raise CliError(EXIT_INVALID, f"{path}: {exc}") from exc


def load_skeleton(path: str) -> Skeleton:
    doc = _read_json(path)
    try:
        return Skeleton.from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_INVALID, f"{path}: not a skeleton document ({exc})") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror}") from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _skeleton_of(path: str, keep_flat: bool = False):
    poly = load_polygon(path)
    try:
        return compute_skeleton(poly, keep_flat=keep_flat, keep_kp=True)
    except GeometryError as exc:
        raise CliError(EXIT_INVALID, f"invalid polygon: {exc}") from exc
    except DegenerateInput as exc:
        raise CliError(EXIT_DEGENERATE, f"degenerate input: {exc}") from exc


def _cells(res) -> list:
    rings = kp_rings(res.kp)
    return [rotate(r, -res.rotation) for r in rings] if res.rotation else rings


# ---------------------------------------------------------------------------
# subcommands


def cmd_compute(args) -> int:
    res = _skeleton_of(args.input, args.keep_flat)
    _write(args.output, res.skeleton.dumps() + "\n")
    if args.svg:
        _write(args.svg, skeleton_svg(res.skeleton, res.polygon))
    if args.stats:
        _write(args.stats, _dump(res.stats.to_json()))
    return 0


def cmd_oracle(args) -> int:
    poly = load_polygon(args.input)
    try:
        sk = oracle_skeleton(poly)
    except DegenerateInput as exc:
        raise CliError(EXIT_DEGENERATE, f"degenerate input: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_INVALID, str(exc)) from exc
    _write(args.output, sk.dumps() + "\n")
    return 0


def cmd_compare(args) -> int:
    """Compare two skeleton files, or a polygon against the oracle."""
    if args.other is None:
        a = _skeleton_of(args.first).skeleton
        try:
            b = oracle_skeleton(load_polygon(args.first))
        except DegenerateInput as exc:
            raise CliError(EXIT_DEGENERATE, f"degenerate input: {exc}") from exc
    else:
        a, b = load_skeleton(args.first), load_skeleton(args.other)
    rep = compare_skeletons(a, b, args.tol)
    out = rep.to_json()
    out["ok"] = rep.ok(args.tol)
    _write(args.output, _dump(out))
    return 0 if out["ok"] else 4


def cmd_motorcycles(args) -> int:
    poly = load_polygon(args.input)
    try:
        g = motorcycle_graph(poly)
    except DegenerateInput as exc:
        raise CliError(EXIT_DEGENERATE, f"degenerate input: {exc}") from exc
    _write(args.output, _dump(g.to_json()))
    return 0


def cmd_offset(args) -> int:
    if args.t < 0:
        raise CliError(EXIT_INVALID, "offset distance must be non-negative")
    res = _skeleton_of(args.input)
    _write(args.output, _dump({"t": args.t, "polygons": res.offset(args.t)}))
    return 0


def cmd_render(args) -> int:
    """SVG of a polygon's skeleton, optionally over the leaf cells of K(P)."""
    doc = _read_json(args.input)
    if isinstance(doc, dict) and "edges" in doc:
        sk, poly, cells = load_skeleton(args.input), None, None
    else:
        res = _skeleton_of(args.input, args.keep_flat)
        sk, poly = res.skeleton, res.polygon
        cells = _cells(res) if args.cells else None
    _write(args.output, skeleton_svg(sk, poly, cells))
    return 0


def _parse_sizes(text: str, family: str) -> list[tuple[int, int]]:
    """``"256:8,512:16"``; a bare n takes a default r for the family."""
    out = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        if ":" in tok:
            n, r = tok.split(":")
            out.append((int(n), int(r)))
        else:
            n = int(tok)
            out.append((n, max(1, n // 32) if family == "tight" else max(1, n // 8)))
    return out


def bench_one(family: str, n: int, r: int, seed: int) -> dict:
    poly = FAMILIES[family](n, r, seed)
    t0 = time.perf_counter()
    res = compute_skeleton(poly)
    wall = (time.perf_counter() - t0) * 1e3
    st = res.stats
    return dict(family=family, n=n, r=r, seed=seed, wall_ms=round(wall, 3), envelope_work=st.envelope_work,
                depth_dv=st.depth_dv, depth_dval=st.depth_dval, cells_total=st.cells_total)


def _bench_star(job):
    return bench_one(*job)


def cmd_bench(args) -> int:
    try:
        sizes = _parse_sizes(args.sizes, args.family)
    except ValueError as exc:
        raise CliError(EXIT_INVALID, f"bad --sizes: {exc}") from exc
    jobs = [(args.family, n, r, args.seed + k) for n, r in sizes for k in range(args.repetitions)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_bench_star, jobs))
    else:
        rows = [bench_one(*j) for j in jobs]
    out = sys.stdout if args.output in (None, "-") else None
    try:
        fh = out or open(args.output, "w", newline="")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.output}: {exc.strerror}") from exc
    try:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if out is None:
            fh.close()
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sskel", description="Straight skeletons of polygons with holes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="skeleton of a polygon file")
    c.add_argument("input")
    c.add_argument("-o", "--output")
    c.add_argument("--svg", metavar="PATH")
    c.add_argument("--stats", metavar="PATH")
    c.add_argument("--keep-flat", action="store_true", help="return S' with its flat edges")
    c.set_defaults(func=cmd_compute)

    c = sub.add_parser("oracle", help="skeleton by wavefront simulation (small inputs)")
    c.add_argument("input")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_oracle)

    c = sub.add_parser("compare", help="distance between two skeletons, or a polygon vs the oracle")
    c.add_argument("first")
    c.add_argument("other", nargs="?")
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compare)

    c = sub.add_parser("motorcycles", help="motorcycle graph as JSON")
    c.add_argument("input")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_motorcycles)

    c = sub.add_parser("offset", help="inward offset polygons at distance t")
    c.add_argument("input")
    c.add_argument("t", type=float)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_offset)

    c = sub.add_parser("bench", help="timings and work counters as CSV")
    c.add_argument("--family", choices=sorted(FAMILIES), default="tight")
    c.add_argument("--sizes", default="", help="comma list of n or n:r")
    c.add_argument("--repetitions", type=int, default=1)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_bench)

    c = sub.add_parser("render", help="SVG of a polygon's skeleton or of a skeleton file")
    c.add_argument("input")
    c.add_argument("-o", "--output")
    c.add_argument("--cells", action="store_true", help="overlay the leaf cells")
    c.add_argument("--keep-flat", action="store_true")
    c.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"sskel: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
