"""Command-line harness: generate data, run and time algorithms, tabulate speedups."""

from __future__ import annotations

import argparse
import sys
import time
import zlib
from collections import Counter
from pathlib import Path

import numpy as np

from . import hull as H
from . import seb as S
from .bdltree import BUFFER_SIZE, BDLTree, bdl_build, bdl_erase, bdl_insert, bdl_knn
from .core import DegenerateInputError, num_workers, set_num_workers
from .generators import DISTRIBUTIONS, generate
from .io import (
    BenchRecord,
    PointFileError,
    RECORD_COLUMNS,
    dataset_tag,
    format_points,
    format_records,
    parse_records,
    read_points,
    write_points,
)
from .kdtree import OBJECT_MEDIAN, SPATIAL_MEDIAN, build_veb, knn_batch

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3

HULL_ALGOS = ["randinc", "quickhull", "serial", "dc", "pseudo"]
SEB_ALGOS = ["orthant", "sampling", "welzl", "welzl-mtf", "welzl-mtf-pivot"]
KNN_ALGOS = ["bdl", "bdl-spatial", "static", "static-spatial"]


class UsageError(Exception):
    pass


class CheckFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _checksum(ids) -> str:
    arr = np.asarray(sorted(int(i) for i in ids), dtype=np.int64)
    return f"{zlib.crc32(arr.tobytes()):08x}"


# --------------------------------------------------------------------------
# inputs
# --------------------------------------------------------------------------


def _load(args) -> tuple[np.ndarray, str]:
    if args.input:
        try:
            P = read_points(args.input)
        except OSError as e:
            raise IOError(f"cannot read {args.input}: {e.strerror or e}") from None
        except PointFileError as e:
            raise IOError(str(e)) from None
        if len(P) == 0:
            raise UsageError("input file holds no points")
        return P, dataset_tag(P.shape[1], Path(args.input).stem, len(P))
    if args.n is None:
        raise UsageError("give an input file or -n to generate points")
    P = _generate(args)
    return P, dataset_tag(args.d, args.dist, args.n)


def _generate(args) -> np.ndarray:
    try:
        return generate(args.dist, args.n, args.d, args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise IOError(f"cannot write {path}: {e.strerror or e}") from None


def _emit(rec: BenchRecord) -> None:
    sys.stdout.write(format_records([rec]))


# --------------------------------------------------------------------------
# hull
# --------------------------------------------------------------------------


def _run_hull(P, algo, c, seed):
    d = P.shape[1]
    if d not in (2, 3):
        raise UsageError("hulls are supported in 2 and 3 dimensions")
    if algo == "quickhull" and d == 2:
        return H.hull2d_quickhull(P)
    if algo == "randinc":
        return H.hull_randinc(P, c=c, seed=seed)
    if algo == "quickhull":
        return H.hull_quickhull(P, c=c)
    if algo == "serial":
        return H.serial_quickhull(P)
    if algo == "dc":
        return H.hull_divide_conquer(P, c=c)
    return H.hull_pseudo_quickhull(P, c=c)


def _hull_output(P, result):
    if isinstance(result, list):
        verts = sorted(result)
        facets = [(result[i], result[(i + 1) % len(result)]) for i in range(len(result))]
    else:
        verts = result.vertices().tolist()
        facets = [tuple(f) for f in result.facet_array().tolist()]
    lines = [f"# vertices {len(verts)}", " ".join(map(str, verts)), f"# facets {len(facets)}"]
    lines += [" ".join(map(str, f)) for f in facets]
    return verts, "\n".join(lines) + "\n"


def _cycle_problems(P, cycle) -> list[str]:
    out = []
    C = P[cycle]
    nxt = np.roll(C, -1, axis=0)
    edge = nxt - C
    tol = 1e-12 * float(np.max(np.abs(P))) ** 2
    for i in range(len(C)):
        cr = edge[i, 0] * (P[:, 1] - C[i, 1]) - edge[i, 1] * (P[:, 0] - C[i, 0])
        if np.any(cr < -tol):
            out.append(f"point outside hull edge {i}")
            break
    return out


def _check_hull(P, algo, result, c, seed):
    if isinstance(result, list):
        problems = _cycle_problems(P, result)
        verts = set(result)
    else:
        problems = H.mesh_problems(result, all_points=True)
        verts = set(result.vertices().tolist())
    other = H.serial_quickhull(P) if algo != "serial" else H.hull_quickhull(P, c=c)
    if verts != set(other.vertices().tolist()):
        problems.append("vertex set differs from the cross-check hull")
    if problems:
        raise CheckFailure("; ".join(problems))


def cmd_hull(args):
    P, tag = _load(args)
    c = args.batch or H.DEFAULT_ROUND_MULTIPLIER
    t0 = time.perf_counter()
    try:
        result = _run_hull(P, args.algo, c, args.seed)
    except DegenerateInputError as e:
        raise UsageError(f"degenerate input: {e} (extreme ids {e.extremes})") from None
    dt = time.perf_counter() - t0
    verts, text = _hull_output(P, result)
    if args.o:
        _write(args.o, text)
    if args.check:
        _check_hull(P, args.algo, result, c, args.seed)
    _emit(BenchRecord(f"hull-{args.algo}", tag, len(P), P.shape[1], num_workers(), dt,
                      f"h={len(verts)}:{_checksum(verts)}"))


# --------------------------------------------------------------------------
# seb
# --------------------------------------------------------------------------


def _run_seb(P, algo, seg, seed):
    if algo == "orthant":
        return S.seb_orthant(P)
    if algo == "sampling":
        return S.seb_sampling(P, c=seg, seed=seed)
    return S.welzl_parallel(P, mtf="mtf" in algo, pivot="pivot" in algo, seed=seed)


def _check_seb(P, algo, ball):
    problems = []
    if not ball.encloses(P):
        problems.append("ball does not enclose every point")
    sup = P[list(ball.support)]
    gap = np.abs(np.linalg.norm(sup - ball.center, axis=1) - ball.radius)
    if np.any(gap > S.EPS_BALL * max(ball.radius, 1e-300)):
        problems.append("a support point is off the boundary")
    ref = S.welzl_seq(P) if algo != "welzl" else S.seb_orthant(P)
    if abs(ref.radius - ball.radius) > 1e-6 * max(ref.radius, 1e-300):
        problems.append(f"radius {ball.radius!r} disagrees with cross-check {ref.radius!r}")
    if problems:
        raise CheckFailure("; ".join(problems))


def cmd_seb(args):
    P, tag = _load(args)
    t0 = time.perf_counter()
    ball = _run_seb(P, args.algo, args.batch or S.DEFAULT_SEGMENT, args.seed)
    dt = time.perf_counter() - t0
    if args.o:
        text = "center " + " ".join("%.17g" % x for x in ball.center) + "\n"
        text += "radius %.17g\n" % ball.radius
        text += "support " + " ".join(map(str, ball.support)) + "\n"
        _write(args.o, text)
    if args.check:
        _check_seb(P, args.algo, ball)
    _emit(BenchRecord(f"seb-{args.algo}", tag, len(P), P.shape[1], num_workers(), dt, f"r={ball.radius:.12g}"))


# --------------------------------------------------------------------------
# knn
# --------------------------------------------------------------------------


def _linear_knn(P, ids, q, k):
    d2 = np.einsum("ij,ij->i", P - q, P - q)
    sel = np.lexsort((ids, d2))[:k]
    return ids[sel], d2[sel]


def _knn_lines(ids) -> str:
    return "".join(" ".join(str(i) for i in row if i >= 0) + "\n" for row in ids)


def cmd_knn(args):
    P, tag = _load(args)
    k = args.k
    split = SPATIAL_MEDIAN if args.algo.endswith("spatial") else OBJECT_MEDIAN
    t0 = time.perf_counter()
    if args.algo.startswith("bdl"):
        T = bdl_build(P, X=args.batch or BUFFER_SIZE, heuristic=split)
        ids, d2 = bdl_knn(T, P, k)
    else:
        tree = build_veb(P, split)
        bufs = knn_batch(tree, P, k)
        ids = np.full((len(P), k), -1, dtype=np.int64)
        d2 = np.full((len(P), k), np.inf)
        for j, b in enumerate(bufs):
            i, dd = b.extract()
            ids[j, :len(i)], d2[j, :len(i)] = i, dd
    dt = time.perf_counter() - t0
    if args.o:
        _write(args.o, _knn_lines(ids))
    if args.check:
        all_ids = np.arange(len(P), dtype=np.int64)
        sample = np.linspace(0, len(P) - 1, min(len(P), 256)).astype(np.int64)
        for j in np.unique(sample):
            ri, rd = _linear_knn(P, all_ids, P[j], k)
            if ids[j, :len(ri)].tolist() != ri.tolist() or not np.array_equal(d2[j, :len(rd)], rd):
                raise CheckFailure(f"query {j} disagrees with the linear scan")
    _emit(BenchRecord(f"knn-{args.algo}", tag, len(P), P.shape[1], num_workers(), dt,
                      f"k={k}:{zlib.crc32(ids.tobytes()):08x}"))


# --------------------------------------------------------------------------
# bdl-script
# --------------------------------------------------------------------------


def _read_script(path):
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise IOError(f"cannot read {path}: {e.strerror or e}") from None
    base = Path(path).parent
    steps = []
    for no, raw in enumerate(lines, 1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        op = parts[0]
        if op in ("insert", "erase") and len(parts) == 2:
            steps.append((op, base / parts[1], None))
        elif op == "knn" and len(parts) == 3 and parts[2].isdigit() and int(parts[2]) >= 1:
            steps.append((op, base / parts[1], int(parts[2])))
        else:
            raise UsageError(f"{path}:{no}: expected 'insert <file>', 'erase <file>' or 'knn <file> <k>'")
    return steps


def cmd_bdl_script(args):
    if not args.input:
        raise UsageError("bdl-script needs a script file")
    steps = _read_script(args.input)
    loaded = {}
    for _, f, _ in steps:
        if f not in loaded:
            try:
                loaded[f] = read_points(f)
            except OSError as e:
                raise IOError(f"cannot read {f}: {e.strerror or e}") from None
            except PointFileError as e:
                raise IOError(str(e)) from None
    dims = {P.shape[1] for P in loaded.values() if len(P)}
    if len(dims) > 1:
        raise UsageError("script files disagree on the dimension")
    d = dims.pop() if dims else 2
    split = SPATIAL_MEDIAN if args.algo.endswith("spatial") else OBJECT_MEDIAN
    T = BDLTree(d, X=args.batch or BUFFER_SIZE, heuristic=split)
    model: Counter = Counter()
    out = []
    total = 0.0
    for op, f, k in steps:
        P = loaded[f]
        t0 = time.perf_counter()
        if op == "insert":
            bdl_insert(T, P)
        elif op == "erase":
            bdl_erase(T, P)
        else:
            ids, d2 = bdl_knn(T, P, k)
        total += time.perf_counter() - t0
        if op == "knn":
            out.append(_knn_lines(ids))
        if args.check:
            if op == "insert":
                model.update(map(tuple, P.tolist()))
            elif op == "erase":
                for p in map(tuple, P.tolist()):
                    model.pop(p, None)
            live, _ = T.live_points()
            if Counter(map(tuple, live.tolist())) != model:
                raise CheckFailure(f"after {op} {f.name}: stored points differ from the reference model")
            if op == "knn":
                ref = np.array(sorted(model.elements()), dtype=np.float64).reshape(-1, d)
                for j, q in enumerate(P):
                    rd = np.sort(np.einsum("ij,ij->i", ref - q, ref - q))[:k]
                    if not np.array_equal(d2[j, :len(rd)], rd):
                        raise CheckFailure(f"knn query {j} of {f.name} disagrees with the linear scan")
    if args.o:
        _write(args.o, "".join(out))
    _emit(BenchRecord(f"bdl-{args.algo}", Path(args.input).stem, len(T), d, num_workers(), total,
                      f"live={len(T)}:F={T.F}"))


# --------------------------------------------------------------------------
# generate / report
# --------------------------------------------------------------------------


def cmd_generate(args):
    if args.n is None:
        raise UsageError("generate needs -n")
    P = _generate(args)
    tag = dataset_tag(args.d, args.dist, args.n)
    if args.o:
        try:
            write_points(args.o, P)
        except OSError as e:
            raise IOError(f"cannot write {args.o}: {e.strerror or e}") from None
        print(tag)
    else:
        sys.stdout.write(format_points(P))
        print(tag, file=sys.stderr)


def speedup_rows(records, warn=None):
    """Report rows with the self-relative speedup ``T1 / Tp`` per algorithm and dataset."""
    t1 = {}
    for r in records:
        if r.threads == 1:
            key = (r.algorithm, r.dataset)
            t1[key] = min(t1.get(key, np.inf), r.seconds)
    rows = []
    for r in records:
        base = t1.get((r.algorithm, r.dataset))
        if base is None:
            if warn:
                warn(f"warning: no 1-thread record for {r.algorithm} on {r.dataset}; skipped")
            continue
        row = {k: getattr(r, k) for k in RECORD_COLUMNS}
        row["t1_seconds"] = repr(base)
        row["speedup"] = repr(base / r.seconds) if r.seconds > 0 else "inf"
        rows.append(row)
    return rows


def cmd_report(args):
    if not args.records:
        raise UsageError("report needs at least one record file")
    records = []
    for path in args.records:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise IOError(f"cannot read {path}: {e.strerror or e}") from None
        try:
            records += parse_records(text)
        except ValueError as e:
            raise IOError(f"{path}: {e}") from None
    rows = speedup_rows(records, warn=lambda m: print(m, file=sys.stderr))
    text = format_records(rows, ["t1_seconds", "speedup"])
    if args.o:
        _write(args.o, text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="batchgeom", description=__doc__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(sp, algos=None, default=None):
        sp.add_argument("input", nargs="?", help="point file (omit to generate with -n/-d/--dist)")
        sp.add_argument("-n", type=int, help="number of points to generate")
        sp.add_argument("-d", type=int, default=2, help="dimension of generated points")
        sp.add_argument("--dist", choices=sorted(DISTRIBUTIONS), default="U", help="generator")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=0, help="pool width (0: all cores)")
        sp.add_argument("--check", action="store_true", help="verify the result; exit 2 on mismatch")
        sp.add_argument("-o", metavar="PATH", help="result file")
        if algos:
            sp.add_argument("--algo", choices=algos, default=default)

    g = sub.add_parser("generate", help="write a synthetic point set")
    g.add_argument("-n", type=int)
    g.add_argument("-d", type=int, default=2)
    g.add_argument("--dist", choices=sorted(DISTRIBUTIONS), default="U")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", metavar="PATH")
    g.set_defaults(func=cmd_generate, threads=0)

    h = sub.add_parser("hull", help="convex hull (2D/3D)")
    common(h, HULL_ALGOS, "quickhull")
    h.add_argument("--batch", type=int, help="round-size multiplier c")
    h.set_defaults(func=cmd_hull)

    s = sub.add_parser("seb", help="smallest enclosing ball")
    common(s, SEB_ALGOS, "sampling")
    s.add_argument("--batch", type=int, help="sampling segment size")
    s.set_defaults(func=cmd_seb)

    k = sub.add_parser("knn", help="k nearest neighbours of every point")
    common(k, KNN_ALGOS, "bdl")
    k.add_argument("-k", type=int, default=5)
    k.add_argument("--batch", type=int, help="BDL buffer size")
    k.set_defaults(func=cmd_knn)

    b = sub.add_parser("bdl-script", help="run an insert/erase/knn script against a BDL-tree")
    b.add_argument("input", nargs="?", help="script file")
    b.add_argument("--algo", choices=["object", "spatial"], default="object")
    b.add_argument("--threads", type=int, default=0)
    b.add_argument("--batch", type=int, help="BDL buffer size")
    b.add_argument("--check", action="store_true")
    b.add_argument("-o", metavar="PATH")
    b.set_defaults(func=cmd_bdl_script)

    r = sub.add_parser("report", help="speedup table from benchmark CSV files")
    r.add_argument("records", nargs="*")
    r.add_argument("-o", metavar="PATH")
    r.set_defaults(func=cmd_report, threads=0)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits on --help and on usage errors
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        for name in ("n", "k", "batch", "threads"):
            v = getattr(args, name, None)
            if v is not None and v < (0 if name == "threads" else 1):
                raise UsageError(f"-{'-' if len(name) > 1 else ''}{name} must be positive")
        if getattr(args, "d", 2) < 1:
            raise UsageError("-d must be positive")
        set_num_workers(args.threads or None)
        args.func(args)
    except UsageError as e:
        print(f"batchgeom: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CheckFailure as e:
        print(f"batchgeom: check failed: {e}", file=sys.stderr)
        return EXIT_CHECK
    except IOError as e:
        print(f"batchgeom: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"batchgeom: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
