import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from batchgeom.cli import main, speedup_rows
from batchgeom.io import (
    BenchRecord,
    PointFileError,
    dataset_tag,
    format_records,
    parse_records,
    read_points,
    write_points,
)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def records_from(out):
    return parse_records(out)


def test_dataset_tag():
    assert dataset_tag(3, "U", 10**7) == "3D-U-10M"
    assert dataset_tag(2, "IS", 1000) == "2D-IS-1K"
    assert dataset_tag(5, "OC", 1234) == "5D-OC-1234"


def test_generate_file_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    code, out, _ = run(capsys, "generate", "--dist", "U", "-n", 1000, "-d", 2, "-o", a)
    assert code == 0 and out.strip() == "2D-U-1K"
    P = read_points(a)
    assert P.shape == (1000, 2)
    run(capsys, "generate", "--dist", "U", "-n", 1000, "-d", 2, "-o", b)
    assert a.read_bytes() == b.read_bytes()


def test_generate_to_stdout(capsys):
    code, out, err = run(capsys, "generate", "-n", 5, "-d", 3, "--dist", "OS")
    assert code == 0 and err.strip() == "3D-OS-5"
    assert len(out.strip().splitlines()) == 6


def test_point_file_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1 2\n3\n")
    with pytest.raises(PointFileError):
        read_points(p)
    p.write_text("1 nan\n")
    with pytest.raises(PointFileError):
        read_points(p)


def test_hull_dc_tetra(tmp_path, capsys):
    f = tmp_path / "tet.txt"
    write_points(f, np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float))
    out_path = tmp_path / "hull.txt"
    code, out, _ = run(capsys, "hull", f, "--algo", "dc", "--check", "-o", out_path)
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == "# vertices 4" and lines[2] == "# facets 4" and len(lines) == 7
    rec = records_from(out)[0]
    code, out2, _ = run(capsys, "hull", f, "--algo", "dc")
    assert records_from(out2)[0].summary == rec.summary


@pytest.mark.parametrize("algo", ["randinc", "quickhull", "serial", "dc", "pseudo"])
@pytest.mark.parametrize("d", [2, 3])
def test_hull_check_matrix(capsys, algo, d):
    code, out, err = run(capsys, "hull", "-n", 2000, "-d", d, "--dist", "OS", "--algo", algo, "--check")
    assert code == 0, err


def test_hull_threads_same_checksum(capsys):
    sums = []
    for t in (1, 4):
        code, out, _ = run(capsys, "hull", "-n", 5000, "-d", 3, "--dist", "IS", "--algo", "quickhull",
                           "--threads", t)
        rec = records_from(out)[0]
        assert rec.threads == t
        sums.append(rec.summary)
    assert sums[0] == sums[1]


def test_seb_sampling_agrees_with_orthant(tmp_path, capsys):
    f = tmp_path / "p.txt"
    run(capsys, "generate", "-n", 20000, "-d", 3, "--dist", "IS", "-o", f)
    radii = []
    for algo in ("sampling", "orthant"):
        o = tmp_path / f"{algo}.txt"
        code, out, _ = run(capsys, "seb", f, "--algo", algo, "--check", "-o", o)
        assert code == 0
        radii.append(float(o.read_text().splitlines()[1].split()[1]))
    assert math.isclose(radii[0], radii[1], rel_tol=1e-6)


@pytest.mark.parametrize("algo", ["bdl", "bdl-spatial", "static", "static-spatial"])
def test_knn_check(capsys, algo):
    code, out, err = run(capsys, "knn", "-n", 3000, "-d", 3, "--algo", algo, "-k", 4, "--batch", 100, "--check")
    assert code == 0, err


def test_bdl_script(tmp_path, capsys):
    for name, seed in (("a", 1), ("b", 2), ("q", 3)):
        run(capsys, "generate", "-n", 300, "-d", 2, "--seed", seed, "-o", tmp_path / f"{name}.txt")
    script = tmp_path / "s.txt"
    script.write_text("insert a.txt\ninsert b.txt\nknn q.txt 3\nerase a.txt\nknn q.txt 3\n")
    o = tmp_path / "knn.txt"
    code, out, err = run(capsys, "bdl-script", script, "--batch", 16, "--check", "-o", o)
    assert code == 0, err
    assert len(o.read_text().splitlines()) == 600
    assert records_from(out)[0].summary.startswith("live=300")


def test_exit_codes(tmp_path, capsys):
    assert run(capsys, "hull", "--algo", "nope", "-n", 10)[0] == 1
    assert run(capsys, "hull")[0] == 1
    assert run(capsys, "knn", "-n", 10, "-k", 0)[0] == 1
    assert run(capsys, "hull", tmp_path / "missing.txt")[0] == 3
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n3\n")
    assert run(capsys, "seb", bad)[0] == 3
    flat = tmp_path / "flat.txt"
    write_points(flat, np.array([[0, 0], [1, 1], [2, 2]], dtype=float))
    assert run(capsys, "hull", flat)[0] == 1
    script = tmp_path / "s.txt"
    script.write_text("frobnicate x\n")
    assert run(capsys, "bdl-script", script)[0] == 1
    assert run(capsys, "generate", "-n", 10, "-o", tmp_path / "no" / "such" / "dir.txt")[0] == 3


def test_report_speedups(tmp_path, capsys):
    recs = [
        BenchRecord("hull-dc", "2D-U-1M", 10**6, 2, 1, 10.0, "x"),
        BenchRecord("hull-dc", "2D-U-1M", 10**6, 2, 8, 2.0, "x"),
        BenchRecord("seb-orthant", "2D-U-1M", 10**6, 2, 8, 1.0, "y"),
    ]
    f = tmp_path / "r.csv"
    f.write_text(format_records(recs))
    code, out, err = run(capsys, "report", f)
    assert code == 0 and "no 1-thread record for seb-orthant" in err
    lines = out.strip().splitlines()
    assert lines[0].endswith("t1_seconds,speedup") and len(lines) == 3
    assert float(lines[2].split(",")[-1]) == 5.0
    assert float(lines[1].split(",")[-1]) == 1.0


def test_single_record_speedup_is_one():
    rows = speedup_rows([BenchRecord("a", "b", 1, 2, 1, 3.0, "s")])
    assert float(rows[0]["speedup"]) == 1.0


text = st.text(st.characters(blacklist_categories=("Cs",), blacklist_characters="\r\x00"), max_size=12)


@given(st.lists(st.builds(
    BenchRecord, text.filter(lambda s: s != "algorithm"), text, st.integers(0, 10**9), st.integers(1, 9),
    st.integers(1, 64), st.floats(0, 1e6, allow_nan=False), text,
), max_size=5))
def test_records_round_trip(recs):
    assert parse_records(format_records(recs)) == recs
    assert parse_records(format_records(recs) + format_records(recs)) == recs + recs
