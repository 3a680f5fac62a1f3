import csv
import io
import json
import xml.etree.ElementTree as ET

import pytest

from sskel.cli import BENCH_COLUMNS, main
from sskel.generators import random_polygon


@pytest.fixture
def square(tmp_path):
    p = tmp_path / "square.json"
    p.write_text(json.dumps({"outer": [[0, 0], [1, 0], [1, 1], [0, 1]], "holes": []}))
    return p


@pytest.fixture
def lfile(tmp_path, lshape):
    p = tmp_path / "lshape.json"
    p.write_text(json.dumps(lshape.to_json()))
    return p


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compute_square(capsys, square):
    code, out, _ = _run(capsys, "compute", square)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["vertices"]) == 5
    assert all(len(v) == 3 for v in doc["vertices"])


def test_compute_lshape_has_one_valley(capsys, lfile):
    code, out, _ = _run(capsys, "compute", lfile)
    labels = [e[2] for e in json.loads(out)["edges"]]
    assert code == 0 and labels.count("valley") == 1 and labels.count("flat") == 0
    code, out, _ = _run(capsys, "compute", lfile, "--keep-flat")
    assert [e[2] for e in json.loads(out)["edges"]].count("flat") == 2


def test_roundtrip_edge_set(capsys, tmp_path, lfile):
    out1 = tmp_path / "a.json"
    assert _run(capsys, "compute", lfile, "-o", out1)[0] == 0
    doc = json.loads(out1.read_text())
    from sskel.skeleton import Skeleton

    sk = Skeleton.from_json(doc)
    again = json.loads(sk.dumps())
    assert {tuple(e) for e in again["edges"]} == {tuple(e) for e in doc["edges"]}


def test_svg_and_stats(capsys, tmp_path, lfile):
    svg, stats = tmp_path / "s.svg", tmp_path / "st.json"
    assert _run(capsys, "compute", lfile, "-o", tmp_path / "o.json", "--svg", svg, "--stats", stats)[0] == 0
    root = ET.parse(svg).getroot()
    paths = [el for el in root.iter() if el.tag.endswith("path")]
    classes = [p.get("class") for p in paths]
    assert sorted(classes) == sorted(set(classes))
    assert {"ridge", "valley", "polygon-boundary"} <= set(classes)
    assert all(p.get("style") for p in paths)
    st = json.loads(stats.read_text())
    assert st["cells_total"] >= 1 and "depth_dv" in st


def test_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"outer": [[0, 0], [1, 1], [1, 0], [0, 1]]}))
    code, _, err = _run(capsys, "compute", bad)
    assert code == 2 and "intersect" in err
    broken = tmp_path / "broken.json"
    broken.write_text('{"outer": [[0, 0],\n [1, 0')
    code, _, err = _run(capsys, "compute", broken)
    assert code == 2 and "broken.json:2:" in err
    short = tmp_path / "short.json"
    short.write_text(json.dumps({"outer": [[0, 0], [1, 0]]}))
    assert _run(capsys, "compute", short)[0] == 2
    assert _run(capsys, "compute", tmp_path / "missing.json")[0] == 1
    # collinear neighbours break general position
    flat = tmp_path / "flat.json"
    flat.write_text(json.dumps({"outer": [[0, 0], [1, 0.1], [2, 0.2], [2.1, 2], [0.1, 2.2]]}))
    assert _run(capsys, "compute", flat)[0] == 3


def test_offset_command(capsys, square):
    code, out, _ = _run(capsys, "offset", square, "0.25")
    (poly,) = json.loads(out)["polygons"]
    xs = sorted(round(x, 9) for x, _ in poly["outer"])
    assert code == 0 and xs == [0.25, 0.25, 0.75, 0.75]
    assert json.loads(_run(capsys, "offset", square, "0.6")[1])["polygons"] == []
    assert _run(capsys, "offset", square, "-1")[0] == 2


def test_oracle_and_compare(capsys, tmp_path, lfile):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert _run(capsys, "oracle", lfile, "-o", a)[0] == 0
    assert _run(capsys, "compute", lfile, "-o", b)[0] == 0
    code, out, _ = _run(capsys, "compare", a, b)
    assert code == 0 and json.loads(out)["ok"]
    code, out, _ = _run(capsys, "compare", lfile)
    assert code == 0 and json.loads(out)["hausdorff"] < 1e-6


def test_motorcycles(capsys, lfile):
    code, out, _ = _run(capsys, "motorcycles", lfile)
    doc = json.loads(out)
    assert code == 0 and len(doc["vertices"]) == 2 and len(doc["edges"]) == 1


def test_render_with_cells(capsys, tmp_path, lfile):
    out = tmp_path / "r.svg"
    assert _run(capsys, "render", lfile, "--cells", "-o", out)[0] == 0
    classes = {el.get("class") for el in ET.parse(out).getroot().iter() if el.tag.endswith("path")}
    assert "cell" in classes


def test_bench_empty_sizes(capsys):
    code, out, _ = _run(capsys, "bench", "--sizes", "")
    assert code == 0 and out.strip() == ",".join(BENCH_COLUMNS)


def test_bench_rows_and_seed(capsys):
    code, out, _ = _run(capsys, "bench", "--family", "random", "--sizes", "32:4,48", "--repetitions", "2", "--seed", "5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4
    assert [r["seed"] for r in rows] == ["5", "6", "5", "6"]
    assert rows[2]["r"] == "6"
    assert all(int(r["envelope_work"]) > 0 for r in rows)
    code, out2, _ = _run(capsys, "bench", "--family", "random", "--sizes", "32:4,48", "--repetitions", "2", "--seed", "5")
    strip = lambda s: [{k: v for k, v in r.items() if k != "wall_ms"} for r in csv.DictReader(io.StringIO(s))]
    assert strip(out) == strip(out2)


def test_bench_jobs(capsys):
    code, out, _ = _run(capsys, "bench", "--family", "tight", "--sizes", "40:4", "--repetitions", "2", "--jobs", "2")
    assert code == 0 and len(list(csv.DictReader(io.StringIO(out)))) == 2


def test_random_family_doubling_ratio():
    """Doubling n on the random family should cost well under 2.6x."""
    import time

    from sskel.assembly import compute_skeleton

    def cost(n):
        best = float("inf")
        for seed in range(3):
            P = random_polygon(n, n // 8, seed)
            t0 = time.perf_counter()
            compute_skeleton(P)
            best = min(best, time.perf_counter() - t0)
        return best

    t = [cost(n) for n in (128, 256, 512)]
    ratios = [b / a for a, b in zip(t, t[1:])]
    assert max(ratios) < 2.6, ratios
