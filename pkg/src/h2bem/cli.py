"""Batch command-line entry points: convergence studies, compression
benchmarks and oracle comparisons, all emitting CSV."""

import argparse
import csv
import sys
import time

import numpy as np

from . import driver, kernels
from ._util import hardware_threads
from .containers import assemble_dense, storage_total
from .mesh import read_mesh
from .params import DENSE, GCA, HCA, METHODS, RunParams

CONVERGENCE_FIELDS = [
    "n", "h", "method", "problem", "case", "l2_error", "energy_error", "iters", "seconds", "bytes",
]
BENCH_FIELDS = [
    "n", "h", "method", "seconds_per_triangle", "bytes_per_triangle", "max_rank", "mean_rank",
]

_OPERATORS = {"slp": kernels.SLP, "dlp": kernels.DLP, "hyp": kernels.HYP}


def _add_common(p):
    p.add_argument("--mesh", help="mesh file (text format: 'V F' header)")
    p.add_argument("--sphere-level", type=int, help="sphere refinement level")
    p.add_argument("--method", choices=METHODS, default=GCA)
    p.add_argument("--order", type=int, default=3, help="interpolation/Green quadrature order m")
    p.add_argument("--quad-order", type=int, default=4, help="nearfield quadrature order")
    p.add_argument("--leaf-size", type=int, default=16)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--eps-aca", type=float, default=1e-4)
    p.add_argument("--eps-solver", type=float, default=None)
    p.add_argument("--max-it", type=int, default=2000)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--threads", type=int, default=0, help="0 = hardware parallelism")
    p.add_argument("--out", help="output CSV path (default stdout)")


def _params(args, method=None):
    return RunParams(
        method=method or args.method,
        order=args.order,
        q_near=args.quad_order,
        r_leaf=args.leaf_size,
        eta=args.eta,
        eps_aca=args.eps_aca,
        eps_solver=args.eps_solver,
        max_it=args.max_it,
        seed=args.seed,
        threads=args.threads if args.threads > 0 else hardware_threads(),
    ).resolved()


def _setup(args, params):
    if args.mesh:
        return driver.ProblemSetup(read_mesh(args.mesh), params)
    level = args.sphere_level if args.sphere_level is not None else 2
    return driver.setup_sphere(level, params)


def _emit(rows, fields, out):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    finally:
        if out:
            fh.close()


def cmd_convergence(args):
    """Sphere convergence study across refinement levels."""
    from .params import sphere_schedule

    rows = []
    for level in range(args.level_min, args.level_max + 1):
        p = sphere_schedule(level, args.method)
        if args.override_eps is not None:
            p.eps_aca = args.override_eps * 10.0 ** (args.level_max - level)
            p = p.resolved()
        p.threads = args.threads if args.threads > 0 else hardware_threads()
        setup = driver.setup_sphere(level, p)
        rec = driver.run_problem(setup, args.problem, args.test_case)
        rows.append(rec)
    _emit(rows, CONVERGENCE_FIELDS, args.out)
    return 0


def cmd_compress_bench(args):
    """Setup time, storage and rank statistics per level and method."""
    rows = []
    for level in range(args.level_min, args.level_max + 1):
        for method in args.methods:
            p = _params(args, method)
            setup = _bench_setup(args, level, p)
            n = setup.mesh.n_triangles
            if method == DENSE and n > p.oracle_cap:
                continue
            t0 = time.perf_counter()
            op = setup.operator(_OPERATORS[args.operator], method)
            seconds = time.perf_counter() - t0
            report = op.storage_report()
            if hasattr(op, "rank_stats"):
                stats = op.rank_stats()
            elif hasattr(op, "max_rank"):
                stats = {"max": op.max_rank(), "mean": float(np.mean([f.rank for _, f in op.far])) if op.far else 0.0}
            else:
                stats = {"max": 0, "mean": 0.0}
            rows.append(
                {
                    "n": n,
                    "h": driver.mesh_width(setup.mesh),
                    "method": method,
                    "seconds_per_triangle": seconds / n,
                    "bytes_per_triangle": storage_total(report) / n,
                    "max_rank": stats["max"],
                    "mean_rank": stats["mean"],
                }
            )
    _emit(rows, BENCH_FIELDS, args.out)
    return 0


def _bench_setup(args, level, p):
    if args.mesh:
        return driver.ProblemSetup(read_mesh(args.mesh), p)
    return driver.setup_sphere(level, p)


def cmd_oracle_check(args):
    """Dense-vs-compressed comparison; exit 0 iff all errors <= 10 eps_aca."""
    p = _params(args)
    setup = _setup(args, p)
    n = setup.mesh.n_triangles
    if n > p.oracle_cap:
        print(f"error: n = {n} exceeds oracle cap {p.oracle_cap}", file=sys.stderr)
        return 2
    rng = np.random.default_rng(p.seed)
    tol = 10.0 * p.eps_aca
    ok = True
    methods = [m for m in (args.methods or [p.method]) if m != DENSE]
    for opname in args.operators:
        kind = _OPERATORS[opname]
        dense = assemble_dense(setup.ctx, kind, p.q_near, cap=p.oracle_cap)
        norm_d = np.linalg.norm(dense)
        for method in methods:
            op = setup.operator(kind, method)
            if args.inject_fault and method == methods[0] and opname == args.operators[0]:
                _corrupt_first_far_block(op)
            approx = op.to_dense()
            frob = np.linalg.norm(approx - dense) / norm_d
            mv_err = 0.0
            for _ in range(10):
                x = rng.standard_normal(op.shape[1])
                ref = dense @ x
                mv_err = max(mv_err, np.linalg.norm(op.matvec(x) - ref) / np.linalg.norm(ref))
            passed = frob <= tol and mv_err <= tol
            ok &= passed
            status = "pass" if passed else "FAIL"
            detail = ""
            if not passed:
                detail = f"  worst block: {_worst_block(op, dense)}"
            print(f"{opname} {method}: frobenius {frob:.3e} matvec {mv_err:.3e} [{status}]{detail}")
    return 0 if ok else 1


def _corrupt_first_far_block(op):
    """Fault-injection hook used to test failure reporting."""
    if op.far:
        b, payload = op.far[0]
        if hasattr(payload, "A"):
            payload.A *= 2.0
        else:
            op.far[0] = (b, payload * 2.0)


def _worst_block(op, dense):
    rt, ct = op.row_tree, op.col_tree
    dperm = dense[np.ix_(rt.perm, ct.perm)]
    worst, where = -1.0, None
    for b, payload in op.far:
        sub = dperm[b.row.start : b.row.end, b.col.start : b.col.end]
        if hasattr(payload, "to_dense"):
            approx = payload.to_dense()
        else:
            approx = op.row_basis.expand(b.row) @ payload @ op.col_basis.expand(b.col).T
        err = np.linalg.norm(approx - sub)
        if err > worst:
            worst, where = err, b
    return f"rows [{where.row.start}:{where.row.end}) x cols [{where.col.start}:{where.col.end}), abs error {worst:.3e}"


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="h2bem",
        description="Compressed Galerkin boundary element solver for the Laplace equation",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("convergence", help="convergence study over sphere levels")
    _add_common(pc)
    pc.add_argument("--level-min", type=int, default=2)
    pc.add_argument("--level-max", type=int, default=4)
    pc.add_argument("--problem", choices=("dtn", "ntd"), default="dtn")
    pc.add_argument("--test-case", choices=("poly", "point1", "point2"), default="poly")
    pc.add_argument(
        "--override-eps", type=float, default=None,
        help="eps_aca at level-max; coarser levels get x10 per level (default: schedule)",
    )
    pc.set_defaults(fn=cmd_convergence)

    pb = sub.add_parser("compress-bench", help="setup time / storage / rank statistics")
    _add_common(pb)
    pb.add_argument("--level-min", type=int, default=2)
    pb.add_argument("--level-max", type=int, default=4)
    pb.add_argument("--methods", nargs="+", choices=METHODS, default=[HCA, GCA])
    pb.add_argument("--operator", choices=tuple(_OPERATORS), default="slp")
    pb.set_defaults(fn=cmd_compress_bench)

    po = sub.add_parser("oracle-check", help="compare compressed operators against dense assembly")
    _add_common(po)
    po.add_argument("--methods", nargs="+", choices=METHODS, default=[HCA, GCA])
    po.add_argument("--operators", nargs="+", choices=tuple(_OPERATORS), default=["slp"])
    po.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    po.set_defaults(fn=cmd_oracle_check)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
