"""Command-line interface: ``symupdate {update,bench,compare,locate}``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from symupdate import bench, fileio
from symupdate.core import LowRankUpdate, SpectralDecomposition, UpdateError
from symupdate.eigvec import update_decomposition
from symupdate.locate import locate_rank2, locate_rank_k, shift_kind
from symupdate.secular import deflate_problem, transform_update

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    """Malformed or inconsistent input; maps to exit code 2."""


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        a, b = text.split("..", 1)
        out = list(range(int(a), int(b) + 1))
    else:
        out = [int(x) for x in text.split(",") if x.strip()]
    if not out:
        raise argparse.ArgumentTypeError(f"empty list {text!r}")
    return out


def _decomposition(args) -> SpectralDecomposition:
    if args.matrix:
        a = fileio.read_matrix_market(args.matrix)
        lam, q = np.linalg.eigh(a.entries)
        return SpectralDecomposition(q, lam)
    q_path, lam_path = args.eigen
    return fileio.read_eigen_csv(q_path, lam_path)


def _inputs(args):
    try:
        d = _decomposition(args)
        signs = fileio.parse_signs(args.signs) if args.signs else None
        upd = fileio.read_update_csv(args.update, signs)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    if upd.n != d.n:
        raise InputError(f"update has {upd.n} rows, decomposition has dimension {d.n}")
    return d, upd


def _add_inputs(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="symmetric matrix in Matrix Market format")
    src.add_argument("--eigen", nargs=2, metavar=("Q_CSV", "LAMBDA_CSV"),
                     help="known eigenvectors (columns) and ascending eigenvalues")
    p.add_argument("--update", required=True, help="n x k factor K as CSV (optional '# signs:' line)")
    p.add_argument("--signs", help="comma-separated +1/-1 per column, overrides the file")


def cmd_update(args) -> int:
    d, upd = _inputs(args)
    need = {"rank1": 1, "rank2": 2}.get(args.method)
    if need is not None and upd.k != need:
        raise InputError(f"--method {args.method} needs a rank-{need} update, got rank {upd.k}")
    res = update_decomposition(d, upd, tol=args.tol, method=args.method, parallel=args.parallel,
                               reorthogonalize=args.reorthogonalize)
    out = res.decomposition
    fileio.write_vector_csv(f"{args.out}_lambda.csv", out.lam)
    fileio.write_matrix_csv(f"{args.out}_q.csv", out.q)
    print(json.dumps({"n": out.n, "k": upd.k, "residual_fro": res.residual_fro,
                      "ortho_err": res.ortho_err, "wall_time": res.wall_time}))
    return EXIT_OK


def cmd_locate(args) -> int:
    d, upd = _inputs(args)
    tu = transform_update(d, upd)
    prob = deflate_problem(d.lam, tu.u, tu.signs, d.q)
    c = prob.coeffs
    if c.size == 0:
        print("lo,hi,count")
        return EXIT_OK
    if upd.k == 2 and args.method in ("auto", "rank2"):
        loc = locate_rank2(c.weights, shift_kind(upd.signs))
    else:
        loc = locate_rank_k(c, max_per_interval=upd.k)
    edges = np.concatenate([[-np.inf], c.poles, [np.inf]])
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["lo", "hi", "count"])
    for i, n in enumerate(loc.counts):
        w.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), int(n)])
    return EXIT_OK


def cmd_bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in bench.METHODS]
    if bad or not methods:
        raise InputError(f"unknown methods {bad}; choose from {', '.join(bench.METHODS)}")
    if any(n < 2 for n in args.sizes) or args.trials < 1 or not 1 <= args.rank:
        raise InputError("sizes must be >= 2, trials >= 1, rank >= 1")
    if max(args.rank, 2) > min(args.sizes):
        raise InputError("rank exceeds the smallest size")
    records = bench.run_bench(args.sizes, args.rank, args.trials, methods, args.seed, args.norm,
                              args.parallel)
    out = Path(args.out)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(bench.record_header())
        for r in records:
            w.writerow(bench.record_row(r))
    fit_path = out.with_name(out.stem + "_fit.csv")
    try:
        fits = bench.fit_records(records, methods)
    except ValueError as exc:
        print(f"exponent fit skipped: {exc}", file=sys.stderr)
        return EXIT_OK
    with fit_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "p", "r2", "sizes", "reference_p"])
        for f in fits:
            ref = bench.REFERENCE_P.get(f.method, "")
            w.writerow([f.method, f.p, f.r2, ";".join(map(str, f.sizes)), ref])
            print(f"{f.method}: p = {f.p:.3f} (r2 {f.r2:.3f}, reference {ref or 'n/a'})")
    return EXIT_OK


def cmd_compare(args) -> int:
    if any(k < 1 for k in args.ranks) or max(args.ranks) > args.n:
        raise InputError(f"ranks must lie in 1..{args.n}")
    if not args.norm > 0:
        raise InputError("norm must be positive")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(bench.COMPARE_HEADER)
        for k in args.ranks:
            for row in bench.compare_rank(args.n, k, args.norm, args.seed, args.signs):
                w.writerow(row)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symupdate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("update", help="update a decomposition and write the new eigenpairs")
    _add_inputs(p)
    p.add_argument("--tol", type=float, default=None, help="root tolerance (default: machine precision)")
    p.add_argument("--method", choices=["auto", "rank1", "rank2", "sturm"], default="auto")
    p.add_argument("--out", default="updated", help="output prefix")
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--reorthogonalize", action="store_true")
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("locate", help="print how many new eigenvalues fall between old ones")
    _add_inputs(p)
    p.add_argument("--method", choices=["auto", "rank2", "sturm"], default="auto")
    p.set_defaults(func=cmd_locate)

    p = sub.add_parser("bench", help="timing sweep with log-log exponent fit")
    p.add_argument("--sizes", type=_int_list, default=[50, 100, 200, 400])
    p.add_argument("--rank", type=int, default=3, help="rank for rank_k_sturm, direct_evd, perturbation")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--methods", default=",".join(bench.METHODS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--norm", type=float, default=1.0, help="Frobenius norm of K")
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--parallel", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compare", help="accuracy of proposed vs perturbation vs direct per rank")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--ranks", type=_int_list, default=list(range(1, 11)))
    p.add_argument("--norm", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--signs", choices=["positive", "mixed"], default="positive")
    p.add_argument("--out", default="compare.csv")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UpdateError as exc:
        print(f"numerical failure in stage '{exc.stage}': {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
