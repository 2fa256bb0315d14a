"""Command-line interface: solve problem files, generate custom solvers,
and run the benchmark sweep."""

from __future__ import annotations

import argparse
import sys


def _cmd_solve(args) -> int:
    from . import Settings, Status, read_problem, solve

    prob = read_problem(args.file)
    st = Settings(
        eps_abs=args.abstol,
        eps_rel=args.reltol,
        max_iters=args.max_iters,
        natural_order=args.natural_order,
        verbose=args.verbose,
    )
    sol = solve(prob, st)
    print(f"status:      {sol.status.value}")
    print(f"iterations:  {sol.iterations}")
    print(f"objective:   {sol.primal_obj:.12e}")
    print(f"residuals:   stat {sol.res_stat:.3e}  feas {sol.res_feas:.3e}  "
          f"gap {sol.gap:.3e}")
    print(f"setup time:  {sol.setup_time * 1e3:.3f} ms")
    print(f"solve time:  {sol.solve_time * 1e3:.3f} ms")
    return 0 if sol.status == Status.OPTIMAL else 1


def _cmd_codegen(args) -> int:
    from . import read_problem
    from .codegen import build_solver, generate_solver

    prob = read_problem(args.file)
    plan = generate_solver(
        prob, args.out, module_name=args.module,
        with_runtest=not args.no_test_runner,
    )
    nstmt = plan.total_ops
    print(f"generated solver '{args.module}' in {args.out}")
    print(f"kkt dimension {plan.N}, factor nonzeros {plan.lnz}, "
          f"about {nstmt} scalar operations per iteration")
    if args.build:
        so = build_solver(args.out)
        print(f"built extension: {so}")
    else:
        print(f"build with: python setup.py build_ext --inplace  (in {args.out})")
    return 0


def _cmd_bench(args) -> int:
    from .bench import run_bench

    classes = tuple(c.strip() for c in args.classes.split(",") if c.strip())
    solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    run_bench(
        classes=classes, sizes=args.sizes, instances=args.instances,
        repeats=args.repeats, solvers=solvers, out_dir=args.out,
        skip_ldl=args.skip_ldl, verbose=True,
    )
    print(f"report written to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="forge",
        description="Quadratic-objective second-order cone solver tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a problem file")
    ps.add_argument("file", help="problem file (.qsf)")
    ps.add_argument("--abstol", type=float, default=1e-7,
                    help="absolute tolerance (default 1e-7)")
    ps.add_argument("--reltol", type=float, default=1e-7,
                    help="relative tolerance (default 1e-7)")
    ps.add_argument("--max-iters", type=int, default=200,
                    help="iteration limit (default 200)")
    ps.add_argument("--natural-order", action="store_true",
                    help="skip fill-reducing ordering")
    ps.add_argument("--verbose", action="store_true",
                    help="print per-iteration progress")
    ps.set_defaults(func=_cmd_solve)

    pc = sub.add_parser("codegen", help="generate a custom solver")
    pc.add_argument("file", help="problem file (.qsf)")
    pc.add_argument("--out", required=True, help="output directory")
    pc.add_argument("--module", default="cfsolver",
                    help="generated module name (default cfsolver)")
    pc.add_argument("--no-test-runner", action="store_true",
                    help="skip emitting runtest.py")
    pc.add_argument("--build", action="store_true",
                    help="compile the generated extension now")
    pc.set_defaults(func=_cmd_codegen)

    pb = sub.add_parser("bench", help="run the benchmark sweep")
    pb.add_argument("--classes", default="rkf,lcvx,lasso,portfolio,oscmass",
                    help="comma-separated problem classes")
    pb.add_argument("--sizes", default="small",
                    choices=("small", "medium", "large"),
                    help="size preset (default small)")
    pb.add_argument("--instances", type=int, default=20,
                    help="instances per class (default 20)")
    pb.add_argument("--repeats", type=int, default=10,
                    help="timing repeats per solve, min taken (default 10)")
    pb.add_argument("--solvers", default="library,generated",
                    help="comma-separated: library, generated, library-pure")
    pb.add_argument("--out", default="report", help="report directory")
    pb.add_argument("--skip-ldl", action="store_true",
                    help="skip the LQR factorization study")
    pb.set_defaults(func=_cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
