"""Tests for the solver generator: kernel unrolling, planning, source
emission, and equivalence of compiled generated solvers with the library."""

import json
import subprocess
import sys
import tracemalloc

import numpy as np
import pytest

from coneforge.codegen import (GenSpec, build_solver, emit, generate_solver,
                               load_solver, plan, unroll_ldl, unroll_spmv,
                               unroll_spmv_sym)
from coneforge.codegen.ir import KernelProgram, execute, ld, mul, render_stmt
from coneforge.ipm import Workspace
from coneforge.kkt import assemble_kkt, refactor
from coneforge.problem import (ConeSpec, ProblemData, Settings, SparseMat,
                               SparseSym)
from coneforge.sparse import pykernels as pk
from coneforge.sparse.ldl import LDLFactors, numeric_factor
from coneforge.sparse.symbolic import symbolic_factor


def sample_problem():
    P = np.diag([2.0, 2.0, 2.0, 0.0])
    A = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 1.0, 0.0]])
    return ProblemData(
        n=4, p=2, P=SparseSym.from_dense(P), c=np.array([0.0, 0.0, 0.0, 1.0]),
        A=SparseMat.from_dense(A), b=np.array([1.0, 1.0]),
        G=SparseMat.from_dense(-np.eye(4)), h=np.zeros(4),
        cones=ConeSpec(l=1, soc_dims=[3]))


def mixed_problem(seed=3, n=6, p=2, l=3, q=(4,)):
    """Random strictly convex QP with a feasible interior point."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    P = M @ M.T * 0.5 + 0.1 * np.eye(n)
    A = rng.standard_normal((p, n))
    G = np.vstack([-np.eye(n)[:l], rng.standard_normal((sum(q), n))])
    x0 = rng.standard_normal(n)
    s0 = [rng.uniform(0.5, 2.0, l)]
    for qi in q:
        tail = rng.standard_normal(qi - 1)
        s0.append([np.linalg.norm(tail) + rng.uniform(0.5, 1.5)])
        s0.append(tail)
    s0 = np.concatenate(s0)
    return ProblemData(
        n=n, p=p, P=SparseSym.from_dense(P), c=rng.standard_normal(n),
        A=SparseMat.from_dense(A), b=A @ x0,
        G=SparseMat.from_dense(G), h=G @ x0 + s0,
        cones=ConeSpec(l=l, soc_dims=list(q)))


def random_csc(rng, nrows, ncols, density=0.1):
    dense = rng.standard_normal((nrows, ncols))
    dense[rng.random((nrows, ncols)) > density] = 0.0
    return SparseMat.from_dense(dense)


def upper_quasidefinite(rng, n, npos):
    """Random quasidefinite matrix in upper CSC with a full diagonal."""
    B = rng.standard_normal((npos, npos))
    C = rng.standard_normal((n - npos, n - npos))
    E = rng.standard_normal((npos, n - npos))
    K = np.zeros((n, n))
    K[:npos, :npos] = B @ B.T + 0.5 * np.eye(npos)
    K[npos:, npos:] = -(C @ C.T) - 0.5 * np.eye(n - npos)
    K[:npos, npos:] = E
    K[npos:, :npos] = E.T
    mask = rng.random((n, n)) < 0.5
    mask = mask & mask.T
    np.fill_diagonal(mask, True)
    K = np.where(mask, K, 0.0)
    signs = np.concatenate([np.ones(npos), -np.ones(n - npos)])
    U = np.triu(K)
    cp = [0]
    ri, vals = [], []
    for j in range(n):
        for i in range(n):
            if i <= j and (U[i, j] != 0.0 or i == j):
                ri.append(i)
                vals.append(U[i, j])
        cp.append(len(ri))
    return (np.array(cp), np.array(ri), np.array(vals), signs)


class TestUnrollSpmv:
    def test_one_statement_per_nonzero_with_zero_stores(self):
        # column 0 holds rows {0, 2}, column 2 holds row {0}; row 1 is empty
        M = SparseMat(3, 3, np.array([0, 2, 2, 3]), np.array([0, 2, 0]),
                      np.array([5.0, 6.0, 7.0]))
        prog = unroll_spmv(M, name="demo")
        lines = []
        for g in prog.groups:
            for st in g:
                lines.extend(render_stmt(st, {"d": "d", "x": "x", "y": "y"},
                                         {}))
        assert lines == [
            "y[0] = ((d[0] * x[0]) + (d[2] * x[2]))",
            "y[1] = 0.0",
            "y[2] = (d[1] * x[0])",
        ]
        # exactly one multiply per stored nonzero
        assert sum(ln.count("*") for ln in lines) == M.nnz

    def test_empty_matrix_emits_only_zero_stores(self):
        M = SparseMat.zeros(4, 2)
        prog = unroll_spmv(M, name="z")
        stmts = [st for g in prog.groups for st in g]
        assert len(stmts) == 4
        assert all(st[3] == ("k", 0.0) for st in stmts)

    def test_matches_generic_kernel_bitwise(self):
        rng = np.random.default_rng(11)
        M = random_csc(rng, 20, 30, 0.12)
        x = rng.standard_normal(30)
        xt = rng.standard_normal(20)

        y = np.zeros(20)
        pk.spmv_add(M.colptr, M.rowidx, M.vals, x, y, M.ncols)
        b = {"d": M.vals.copy(), "x": x.copy(), "y": np.zeros(20)}
        execute(unroll_spmv(M), b)
        assert np.array_equal(b["y"], y)

        ysub = rng.standard_normal(20)
        b = {"d": M.vals.copy(), "x": x.copy(), "y": ysub.copy()}
        pk.spmv_sub(M.colptr, M.rowidx, M.vals, x, ysub, M.ncols)
        execute(unroll_spmv(M, mode="sub"), b)
        assert np.array_equal(b["y"], ysub)

        yt = np.zeros(30)
        pk.spmvT_add(M.colptr, M.rowidx, M.vals, xt, yt, M.ncols)
        b = {"d": M.vals.copy(), "x": xt.copy(), "y": np.zeros(30)}
        execute(unroll_spmv(M, transpose=True), b)
        assert np.array_equal(b["y"], yt)

    def test_symmetric_matches_generic_kernel_bitwise(self):
        rng = np.random.default_rng(12)
        n = 15
        dense = rng.standard_normal((n, n))
        dense[rng.random((n, n)) > 0.3] = 0.0
        S = SparseSym.from_dense(np.triu(dense) + np.triu(dense).T)
        x = rng.standard_normal(n)
        y = np.zeros(n)
        pk.symspmv_add(S.colptr, S.rowidx, S.vals, x, y, n)
        b = {"d": S.vals.copy(), "x": x.copy(), "y": np.zeros(n)}
        execute(unroll_spmv_sym(n, S.colptr, S.rowidx), b)
        assert np.array_equal(b["y"], y)

        ysub = rng.standard_normal(n)
        b = {"d": S.vals.copy(), "x": x.copy(), "y": ysub.copy()}
        pk.symspmv_sub(S.colptr, S.rowidx, S.vals, x, ysub, n)
        execute(unroll_spmv_sym(n, S.colptr, S.rowidx, mode="sub"), b)
        assert np.array_equal(b["y"], ysub)

    def test_out_of_bounds_index_is_rejected(self):
        prog = KernelProgram("bad", arrays={"d": 2, "x": 2, "y": 2})
        prog.append([("set", "y", 0, mul(ld("d", 5), ld("x", 0)))])
        with pytest.raises(ValueError):
            prog.validate()

    def test_undefined_local_is_rejected(self):
        prog = KernelProgram("bad", arrays={"y": 1})
        prog.append([("set", "y", 0, ("loc", "nope"))])
        with pytest.raises(ValueError):
            prog.validate()


class TestUnrollLdl:
    def factor_both(self, cp, ri, vals, signs, eps=1e-8):
        n = len(cp) - 1
        symb = symbolic_factor(n, cp, ri, np.arange(n))
        fac = numeric_factor(cp, ri, vals.copy(), symb, signs, eps)
        prog = unroll_ldl(symb, signs, cp, ri)
        b = {"Kx": vals.copy(), "Lx": np.zeros(max(symb.lnz, 1)),
             "D": np.zeros(n), "Dinv": np.zeros(n), "yw": np.zeros(n)}
        nreg = execute(prog, b, eps=eps)
        return fac, b, nreg, prog

    def test_two_by_two_quasidefinite_bitwise(self):
        cp = np.array([0, 1, 3])
        ri = np.array([0, 0, 1])
        vals = np.array([2.0, 0.5, -1.0])
        signs = np.array([1.0, -1.0])
        fac, b, nreg, _ = self.factor_both(cp, ri, vals, signs)
        assert np.array_equal(b["D"], fac.D)
        assert np.array_equal(b["Lx"], fac.Lx)
        assert np.array_equal(b["Dinv"], fac.Dinv)
        assert nreg == fac.nreg == 0

    def test_wrong_sign_pivot_regularized_like_library(self):
        # trailing pivot comes out positive where a negative is expected
        cp = np.array([0, 1, 3])
        ri = np.array([0, 0, 1])
        vals = np.array([2.0, 0.5, 1.0])
        signs = np.array([1.0, -1.0])
        fac, b, nreg, _ = self.factor_both(cp, ri, vals, signs)
        assert nreg == fac.nreg == 1
        assert np.array_equal(b["D"], fac.D)
        assert np.array_equal(b["Dinv"], fac.Dinv)

    def test_diagonal_matrix_unrolls_to_zero_macs(self):
        n = 6
        cp = np.arange(n + 1)
        ri = np.arange(n)
        vals = np.arange(1.0, n + 1.0)
        signs = np.ones(n)
        fac, b, nreg, prog = self.factor_both(cp, ri, vals, signs)
        assert prog.mac_count() == 0
        assert np.array_equal(b["D"], fac.D)

    def test_random_quasidefinite_bitwise(self):
        rng = np.random.default_rng(21)
        for trial in range(10):
            cp, ri, vals, signs = upper_quasidefinite(rng, 12, 7)
            fac, b, nreg, _ = self.factor_both(cp, ri, vals, signs)
            assert np.array_equal(b["D"], fac.D)
            assert np.array_equal(b["Lx"], fac.Lx)
            assert nreg == fac.nreg

    def test_triangular_solves_bitwise(self):
        rng = np.random.default_rng(22)
        cp, ri, vals, signs = upper_quasidefinite(rng, 12, 7)
        n = 12
        gp = plan(GenSpec.from_problem(sample_problem()))
        fac, _, _, _ = self.factor_both(cp, ri, vals, signs)
        from coneforge.codegen.plan import (_unroll_dsolve, _unroll_lsolve,
                                            _unroll_ltsolve)
        x = rng.standard_normal(n)
        xr = x.copy()
        pk.lsolve(n, fac.symb.Lp, fac.symb.Li, fac.Lx, xr)
        pk.dsolve(n, fac.Dinv, xr)
        pk.ltsolve(n, fac.symb.Lp, fac.symb.Li, fac.Lx, xr)
        b = {"Lx": fac.Lx.copy(), "Dinv": fac.Dinv.copy(), "x": x.copy()}
        execute(_unroll_lsolve(fac.symb), b)
        execute(_unroll_dsolve(n), b)
        execute(_unroll_ltsolve(fac.symb), b)
        assert np.array_equal(b["x"], xr)


class TestPlan:
    def test_sample_problem_plan(self):
        gp = plan(GenSpec.from_problem(sample_problem()))
        assert gp.N == 10
        assert gp.lnz == gp.kkt.symb.lnz
        assert gp.ldl_mac_count == gp.programs["ldl_factor"].mac_count()
        assert set(gp.programs) == {
            "symspmv_P", "spmvT_A", "spmvT_G", "spmv_A", "spmv_G",
            "spmv_G_sub", "symspmv_K_sub", "ldl_factor", "lsolve", "dsolve",
            "ltsolve"}
        assert gp.total_ops >= sum(p.flop_count()
                                   for p in gp.programs.values())

    def test_unrolled_factor_matches_library_after_assembly(self):
        prob = mixed_problem()
        gp = plan(GenSpec.from_problem(prob))
        st = Settings()
        kkt = assemble_kkt(prob, st)
        refactor(kkt, st.eps_dyn)
        b = {"Kx": kkt.Kx.copy(), "Lx": np.zeros(max(gp.lnz, 1)),
             "D": np.zeros(gp.N), "Dinv": np.zeros(gp.N),
             "yw": np.zeros(gp.N)}
        nreg = execute(gp.programs["ldl_factor"], b, eps=st.eps_dyn)
        assert np.array_equal(b["D"], kkt.factors.D)
        assert np.array_equal(b["Lx"], kkt.factors.Lx)
        assert nreg == kkt.factors.nreg

    def test_structure_only_determinism(self, tmp_path):
        """Same pattern with different values yields identical kernel and
        driver source; only the embedded data tables differ."""
        prob1 = mixed_problem(seed=5)
        prob2 = mixed_problem(seed=5)
        prob2.P.vals[:] = prob1.P.vals * 1.7 + 0.1
        prob2.A.vals[:] = prob1.A.vals * -0.3
        prob2.G.vals[:] = prob1.G.vals * 2.5
        prob2.c[:] = prob1.c + 3.0
        prob2.b[:] = prob1.b * 0.5
        prob2.h[:] = prob1.h + 1.0
        d1, d2 = tmp_path / "a", tmp_path / "b"
        emit(plan(GenSpec.from_problem(prob1, module_name="sdet")), d1)
        emit(plan(GenSpec.from_problem(prob2, module_name="sdet")), d2)
        for fname in ("kernels.pxi", "cone.pxi", "utils.pxi", "solver.pyx"):
            assert (d1 / fname).read_text() == (d2 / fname).read_text(), fname
        assert (d1 / "workspace.pxi").read_text() != \
            (d2 / "workspace.pxi").read_text()

    def test_no_ordering_or_allocation_in_generated_source(self, tmp_path):
        """Generated code contains no ordering/symbolic machinery and no
        allocation constructs on the solve path."""
        emit(plan(GenSpec.from_problem(sample_problem(),
                                       module_name="scan1")), tmp_path)
        kernel_text = "".join((tmp_path / f).read_text() for f in
                              ("kernels.pxi", "cone.pxi", "utils.pxi"))
        driver = (tmp_path / "solver.pyx").read_text()
        driver_c = driver.split("def solve()")[0]
        low = (kernel_text + driver_c).lower()
        for token in ("amd", "etree", "symbolic", "ordering", "numpy",
                      "malloc", "append"):
            assert token not in low, token
        # C-level cimports only; no Python-level imports anywhere
        for ln in low.splitlines():
            ln = ln.strip()
            if ln.startswith("import ") or (ln.startswith("from ")
                                            and " cimport " not in ln):
                raise AssertionError(ln)

    def test_op_budget_warning(self, tmp_path):
        spec = GenSpec.from_problem(sample_problem(), module_name="tiny",
                                    op_budget=10)
        gp = plan(spec)
        with pytest.warns(UserWarning, match="budget"):
            emit(gp, tmp_path)

    def test_rejects_bad_module_name(self):
        with pytest.raises(ValueError):
            GenSpec.from_problem(sample_problem(), module_name="not-a-name")

    def test_no_test_runner_option(self, tmp_path):
        emit(plan(GenSpec.from_problem(sample_problem(), module_name="nrt",
                                       with_runtest=False)), tmp_path)
        assert not (tmp_path / "runtest.py").exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "runtest.py" not in manifest["files"]


@pytest.fixture(scope="module")
def built_sample(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen_sample")
    gp = generate_solver(sample_problem(), out, module_name="gtsample")
    build_solver(out)
    return out, gp, load_solver(out, "gtsample")


@pytest.fixture(scope="module")
def built_mixed(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen_mixed")
    gp = generate_solver(mixed_problem(), out, module_name="gtmixed")
    build_solver(out)
    return out, gp, load_solver(out, "gtmixed")


def fresh_solve(mod):
    mod.set_default_settings()
    mod.load_data()
    mod.solve()


class TestCompiled:
    def test_runtest_exits_zero_on_optimal(self, built_sample):
        out, _, _ = built_sample
        proc = subprocess.run([sys.executable, "runtest.py"], cwd=out,
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert "Optimal" in proc.stdout

    def test_equivalent_to_library_on_sample(self, built_sample):
        _, _, mod = built_sample
        fresh_solve(mod)
        work = Workspace(sample_problem())
        sol = work.solve()
        assert mod.get_status_str() == "Optimal"
        assert sol.iterations == mod.get_iterations()
        gx = np.array(mod.get_x())
        assert np.max(np.abs(gx - sol.x)) <= 1e-9 * (1 + np.max(np.abs(sol.x)))
        for rec, g in zip(work.trace, mod.get_trace()):
            assert rec.mu == g["mu"]
            assert rec.alpha == g["alpha"]
            assert rec.sigma == g["sigma"]
            assert rec.refine_passes == g["refine_passes"]

    def test_equivalent_to_library_on_mixed_cones(self, built_mixed):
        _, _, mod = built_mixed
        fresh_solve(mod)
        sol = cfsolve_mixed()
        assert mod.get_status_str() == sol.status.value
        assert sol.iterations == mod.get_iterations()
        gx = np.array(mod.get_x())
        assert np.max(np.abs(gx - sol.x)) <= 1e-9 * (1 + np.max(np.abs(sol.x)))
        assert np.array_equal(np.array(mod.get_z()), sol.z)

    def test_kkt_assembly_matches_library_bitwise(self, built_sample):
        _, _, mod = built_sample
        kkt = assemble_kkt(sample_problem(), Settings())
        assert np.array_equal(np.array(mod.debug_kkt_values()), kkt.Kx)

    def test_ldl_kernel_bitwise_vs_library(self, built_mixed):
        _, gp, mod = built_mixed
        rng = np.random.default_rng(9)
        kkt = assemble_kkt(mixed_problem(), Settings())
        kx = kkt.Kx.copy()
        # random symmetric perturbation on the NT block keeps the pattern
        kx[kkt.nt_slots] -= np.abs(rng.standard_normal(len(kkt.nt_slots)))
        fac = numeric_factor(kkt.Kp, kkt.Ki, kx.copy(), kkt.symb, kkt.signs,
                             Settings().eps_dyn)
        Lx, D, Dinv, nreg, rc = mod.debug_factor(list(kx))
        assert rc == 0
        assert np.array_equal(np.array(D), fac.D)
        assert np.array_equal(np.array(Lx), fac.Lx)
        assert nreg == fac.nreg

    def test_update_values_resolve_identically(self, built_sample):
        _, _, mod = built_sample
        fresh_solve(mod)
        work = Workspace(sample_problem())
        newc = np.array([0.3, -0.2, 0.05, 1.4])
        newb = np.array([1.2, 0.9])
        mod.update_c(list(newc))
        mod.update_b(list(newb))
        mod.solve()
        work.update_c(newc)
        work.update_b(newb)
        sol = work.solve()
        assert sol.iterations == mod.get_iterations()
        assert np.array_equal(np.array(mod.get_x()), sol.x)

    def test_update_rejects_bad_input(self, built_sample):
        _, _, mod = built_sample
        with pytest.raises(ValueError):
            mod.update_c([1.0, 2.0])
        with pytest.raises(ValueError):
            mod.update_c([1.0, float("nan"), 0.0, 0.0])
        with pytest.raises(ValueError):
            mod.update_h([1.0, float("inf"), 0.0, 0.0])

    def test_solve_allocates_nothing(self, built_sample):
        _, _, mod = built_sample
        fresh_solve(mod)
        mod.solve()
        tracemalloc.start()
        before = tracemalloc.take_snapshot()
        mod.solve()
        after = tracemalloc.take_snapshot()
        tracemalloc.stop()
        flt = [tracemalloc.Filter(False, tracemalloc.__file__)]
        stats = after.filter_traces(flt).compare_to(
            before.filter_traces(flt), "lineno")
        leaked = sum(s.size_diff for s in stats if s.size_diff > 0)
        assert leaked == 0, stats[:5]

    def test_max_iters_setting_respected(self, built_sample):
        _, _, mod = built_sample
        fresh_solve(mod)
        full = mod.get_iterations()
        mod.set_setting("max_iters", 2)
        mod.solve()
        assert mod.get_status_str() == "MaxIters"
        assert mod.get_iterations() == 2 < full
        mod.set_default_settings()
        with pytest.raises(ValueError):
            mod.set_setting("max_iters", 10 ** 9)

    def test_manifest_structure(self, built_sample):
        out, gp, _ = built_sample
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["module"] == "gtsample"
        assert manifest["kkt_dim"] == 10
        assert manifest["ldl_nnz"] == gp.lnz
        assert manifest["ldl_mac_count"] == gp.ldl_mac_count
        assert manifest["total_scalar_ops"] == gp.total_ops


def cfsolve_mixed():
    from coneforge.ipm import solve
    return solve(mixed_problem())
