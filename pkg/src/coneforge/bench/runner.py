"""Benchmark sweep: solve generated instances, record results, write reports.

Outputs under the report directory:
  records.csv      one row per (problem, solver) attempt
  sgm.csv          shifted geometric means per solver, normalized
  profiles.svg     relative and absolute performance profiles
  ldl_compare.csv  generic sparse vs unrolled LDL factor times on the
                   LQR KKT study matrices

Solvers: "library" (in-process, current kernel lane), "generated"
(code-generated, compiled, and loaded per instance), and "library-pure"
(library solver in a subprocess forced onto the pure-Python kernel lane
via CONEFORGE_PURE=1, for lane comparisons).
"""

from __future__ import annotations

import csv
import json
import os
import subprocess
import sys
import time
from dataclasses import dataclass

import numpy as np

from .. import Settings, qsf, solve
from ..kkt import assemble_kkt
from ..sparse._lane import kernels
from . import generators as gens
from .generators import problem_size
from .metrics import (FAILURE_CAP, normalize, performance_profiles,
                      shifted_geometric_mean)

CLASSES = {
    "rkf": gens.gen_robust_kalman,
    "lcvx": gens.gen_lcvx,
    "lasso": gens.gen_group_lasso,
    "portfolio": gens.gen_portfolio,
    "oscmass": gens.gen_oscillating_masses,
}

SIZE_TABLES = {
    "rkf": (25, 50, 75, 125, 175, 225, 300, 375, 450, 500),
    "lcvx": (15, 50, 75, 100, 125, 150, 200, 250, 300, 350),
    "lasso": (1, 2, 3, 4, 5, 8, 10, 12, 14, 16),
    "portfolio": (2, 4, 6, 8, 10, 15, 20, 25, 30, 35),
    "oscmass": (8, 20, 32, 44, 56, 76, 96, 116, 136, 156),
}

SIZE_PRESETS = {"small": 0, "medium": 1, "large": 2}

LDL_HORIZONS = (5, 15, 50)


@dataclass
class BenchRecord:
    problem: str
    pclass: str
    size: int          # nnz(A) + nnz(G) + nnz(triu P)
    solver: str
    status: str
    runtime: float     # min over repeats; failure cap when not Optimal
    iterations: int

    @property
    def failed(self) -> bool:
        return self.status != "Optimal"


def _run_library(prob, repeats: int):
    best = float("inf")
    sol = None
    for _ in range(repeats + 1):  # one warmup, then timed repeats
        sol = solve(prob)
        t = sol.setup_time + sol.solve_time
        if sol is not None and t < best:
            best = t
    return sol.status.value, best, sol.iterations


def _run_generated(prob, repeats: int, workdir: str, module_name: str):
    from ..codegen import build_solver, generate_solver, load_solver

    generate_solver(prob, workdir, module_name=module_name, with_runtest=False)
    build_solver(workdir)
    mod = load_solver(workdir, module_name)
    best = float("inf")
    for _ in range(repeats + 1):
        mod.solve()
        best = min(best, mod.get_solve_time())
    return mod.get_status_str(), best, mod.get_iterations()


def _run_pure(prob, repeats: int, workdir: str, tag: str):
    path = os.path.join(workdir, f"{tag}.qsf")
    qsf.write_problem(prob, path)
    env = dict(os.environ, CONEFORGE_PURE="1")
    out = subprocess.run(
        [sys.executable, "-m", "coneforge.bench._pure_worker", path, str(repeats)],
        capture_output=True, text=True, env=env, check=True,
    )
    rep = json.loads(out.stdout.strip().splitlines()[-1])
    return rep["status"], rep["runtime"], rep["iterations"]


def run_bench(classes=("rkf", "lcvx", "lasso", "portfolio", "oscmass"),
              sizes: str = "small", instances: int = 20, repeats: int = 10,
              solvers=("library", "generated"), out_dir: str = "report",
              skip_ldl: bool = False, verbose: bool = True) -> list[BenchRecord]:
    """Sweep the requested classes and write the report files.

    Individual failures are recorded (with the failure-cap runtime) and
    never abort the sweep.
    """
    os.makedirs(out_dir, exist_ok=True)
    gen_root = os.path.join(out_dir, "gen")
    records: list[BenchRecord] = []
    for cname in classes:
        if cname not in CLASSES:
            raise ValueError(f"unknown problem class: {cname}")
        size_param = SIZE_TABLES[cname][SIZE_PRESETS[sizes]]
        for inst in range(instances):
            prob = CLASSES[cname](size_param, inst)
            pid = f"{cname}{size_param}-{inst:02d}"
            metric = problem_size(prob)
            for solver in solvers:
                try:
                    if solver == "library":
                        status, rt, iters = _run_library(prob, repeats)
                    elif solver == "generated":
                        wd = os.path.join(gen_root, pid)
                        os.makedirs(wd, exist_ok=True)
                        mname = f"cf_{cname}{size_param}_{inst}"
                        status, rt, iters = _run_generated(prob, repeats, wd, mname)
                    elif solver == "library-pure":
                        os.makedirs(gen_root, exist_ok=True)
                        status, rt, iters = _run_pure(prob, repeats, gen_root, pid)
                    else:
                        raise ValueError(f"unknown solver: {solver}")
                except Exception as exc:  # record, keep sweeping
                    status, rt, iters = f"Error({type(exc).__name__})", FAILURE_CAP, 0
                rec = BenchRecord(pid, cname, metric, solver, status,
                                  FAILURE_CAP if status != "Optimal" else rt,
                                  iters)
                records.append(rec)
                if verbose:
                    print(f"  {pid:18s} {solver:12s} {rec.status:10s} "
                          f"{rec.runtime * 1e3:9.3f} ms  it={rec.iterations}")
    _write_records(os.path.join(out_dir, "records.csv"), records)
    _write_sgm(os.path.join(out_dir, "sgm.csv"), records, list(solvers))
    _write_profiles(os.path.join(out_dir, "profiles.svg"), records, list(solvers))
    if not skip_ldl:
        ldl_compare(out_dir, verbose=verbose)
    return records


def _write_records(path: str, records: list[BenchRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["problem", "class", "size", "solver", "status",
                    "runtime", "iterations"])
        for r in records:
            w.writerow([r.problem, r.pclass, r.size, r.solver, r.status,
                        f"{r.runtime:.9e}", r.iterations])


def _collect_matrix(records: list[BenchRecord], solvers: list[str]):
    problems = sorted({r.problem for r in records})
    times = np.full((len(solvers), len(problems)), FAILURE_CAP)
    failed = np.ones((len(solvers), len(problems)), dtype=bool)
    pidx = {p: i for i, p in enumerate(problems)}
    sidx = {s: i for i, s in enumerate(solvers)}
    for r in records:
        if r.solver in sidx:
            times[sidx[r.solver], pidx[r.problem]] = r.runtime
            failed[sidx[r.solver], pidx[r.problem]] = r.failed
    return problems, times, failed


def _write_sgm(path: str, records: list[BenchRecord], solvers: list[str]) -> None:
    _, times, failed = _collect_matrix(records, solvers)
    gs = np.array([
        shifted_geometric_mean(times[i], failed[i]) for i in range(len(solvers))
    ])
    rs = normalize(gs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["solver", "sgm_seconds", "normalized", "solved", "total"])
        for i, s in enumerate(solvers):
            w.writerow([s, f"{gs[i]:.9e}", f"{rs[i]:.2f}",
                        int(np.sum(~failed[i])), failed.shape[1]])


def _write_profiles(path: str, records: list[BenchRecord], solvers: list[str]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    _, times, failed = _collect_matrix(records, solvers)
    curves = performance_profiles(times, failed)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    for i, s in enumerate(solvers):
        ax1.step(curves.rel_tau, curves.rel[i], where="post", label=s)
        ax2.step(curves.abs_tau, curves.abs[i], where="post", label=s)
    ax1.set_xscale("log")
    ax1.set_xlabel("performance ratio tau")
    ax1.set_ylabel("fraction of problems solved")
    ax1.set_title("relative performance profile")
    ax1.set_ylim(0.0, 1.05)
    ax1.legend()
    ax2.set_xscale("log")
    ax2.set_xlabel("runtime (s)")
    ax2.set_ylabel("fraction of problems solved")
    ax2.set_title("absolute performance profile")
    ax2.set_ylim(0.0, 1.05)
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def lqr_factor_times(T: int, out_root: str, reps: int = 200, batches: int = 5,
                     seed: int = 0):
    """Per-factor seconds for generic sparse and unrolled kernels on the
    LQR KKT matrix, plus the factor dimension and nnz(L).

    Both kernels are compiled and both time a bare reps-loop natively,
    so the comparison excludes interpreter call overhead.  The values
    factored are the KKT matrix itself (static regularization removed
    from the (1,1) block so it matches the study matrix exactly).
    """
    from ..codegen import build_solver, generate_solver, load_solver

    prob = gens.lqr_problem(T, seed)
    st = Settings()
    kkt = assemble_kkt(prob, st)
    kx = kkt.Kx.copy()
    kx[kkt.xdiag] -= st.eps_static  # (1,1) block back to bare P
    f = kkt.factors
    symb = f.symb

    def sparse_once() -> float:
        total, _ = kernels.factor_timed(
            reps, symb.N, kkt.Kp, kkt.Ki, kx, symb.Lp, symb.Li, f.Lx,
            f.D, f.Dinv, symb.etree, f.signs, st.eps_dyn, f.reg,
            f._yvals, f._marks, f._elim, f._stack, f._cursor)
        return total / reps

    wd = os.path.join(out_root, f"lqr{T}")
    os.makedirs(wd, exist_ok=True)
    mname = f"cf_lqr{T}"
    generate_solver(prob, wd, module_name=mname, with_runtest=False)
    build_solver(wd)
    mod = load_solver(wd, mname)

    def unrolled_once() -> float:
        return mod.bench_factor(kx, reps) / reps

    sparse_once(); unrolled_once()  # warmup
    t_sparse = min(sparse_once() for _ in range(batches))
    t_unrolled = min(unrolled_once() for _ in range(batches))
    return symb.N, int(symb.lnz), t_sparse, t_unrolled


def ldl_compare(out_dir: str, horizons=LDL_HORIZONS, reps: int = 200,
                verbose: bool = True) -> None:
    """Write ldl_compare.csv for the LQR factorization study."""
    rows = []
    for T in horizons:
        dim, lnz, ts, tu = lqr_factor_times(T, os.path.join(out_dir, "gen"),
                                            reps=reps)
        rows.append([T, dim, lnz, f"{ts:.9e}", f"{tu:.9e}", f"{tu / ts:.4f}"])
        if verbose:
            print(f"  lqr T={T:3d}  dim={dim:5d}  nnz(L)={lnz:6d}  "
                  f"sparse {ts * 1e6:8.2f} us  unrolled {tu * 1e6:8.2f} us  "
                  f"ratio {tu / ts:.3f}")
    with open(os.path.join(out_dir, "ldl_compare.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "dimension", "nnz_L", "sparse_time", "unrolled_time",
                    "ratio"])
        w.writerows(rows)
