"""Benchmark harness tests: generators, audits, metrics, and the runner."""

import csv
import os

import numpy as np
import pytest

from coneforge import Settings, Status, solve, validate
from coneforge.bench import (AUDITS, CLASSES, SIZE_TABLES, FAILURE_CAP,
                             gen_oscillating_masses, gen_robust_kalman,
                             lqr_kkt, lqr_problem, normalize,
                             performance_profiles, problem_size, run_bench,
                             shifted_geometric_mean)
from coneforge.bench.generators import LQR_EPS, huber, oscmass_system

SMALLEST = {name: SIZE_TABLES[name][0] for name in CLASSES}

AUDIT_TOL = {"budget": 1e-8}


def _same_problem(a, b):
    if not (np.array_equal(a.c, b.c) and np.array_equal(a.b, b.b)
            and np.array_equal(a.h, b.h)):
        return False
    for attr in ("P", "A", "G"):
        ma, mb = getattr(a, attr), getattr(b, attr)
        if not (np.array_equal(ma.colptr, mb.colptr)
                and np.array_equal(ma.rowidx, mb.rowidx)
                and np.array_equal(ma.vals, mb.vals)):
            return False
    return True


class TestGenerators:
    def test_same_seed_identical_bytes(self):
        for name, gen in CLASSES.items():
            assert _same_problem(gen(SMALLEST[name], 5), gen(SMALLEST[name], 5))

    def test_different_seed_differs(self):
        for name, gen in CLASSES.items():
            assert not _same_problem(gen(SMALLEST[name], 5), gen(SMALLEST[name], 6))

    def test_smallest_sizes_solve_optimal_and_audit(self):
        for name, gen in CLASSES.items():
            prob = gen(SMALLEST[name], 0)
            validate(prob)
            sol = solve(prob)
            assert sol.status == Status.OPTIMAL, name
            for check, value in AUDITS[name](prob, sol).items():
                assert value <= AUDIT_TOL.get(check, 1e-6), (name, check, value)

    def test_size_preconditions(self):
        with pytest.raises(ValueError):
            gen_robust_kalman(1, 0)
        with pytest.raises(ValueError):
            lqr_problem(1, 0)

    def test_rkf_zero_noise_recovers_zero(self):
        N = 25
        prob = gen_robust_kalman(N, 0, zero_noise=True)
        sol = solve(prob)
        assert sol.status == Status.OPTIMAL
        wo = 4 * (N + 1)
        w = sol.x[wo : wo + 2 * N]
        assert abs(sol.primal_obj) < 1e-6
        assert np.max(np.abs(w)) < 1e-4

    def test_huber_piecewise(self):
        assert huber(np.array([0.3, 0.4]), rho=2.0) == pytest.approx(0.25)
        assert huber(np.array([3.0, 4.0]), rho=2.0) == pytest.approx(2 * 2 * 5 - 4)

    def test_oscmass_variable_count(self):
        # (T+1) states of dim 8 plus T inputs of dim 4
        prob = gen_oscillating_masses(8, 0)
        assert prob.n == 9 * 8 + 8 * 4 == 104

    def test_oscmass_expm_matches_series_oracle(self):
        Ac, _, Ad, _ = oscmass_system()
        M = Ac * 0.25
        term = np.eye(8)
        series = np.eye(8)
        for k in range(1, 40):
            term = term @ M / k
            series = series + term
        assert np.max(np.abs(Ad - series)) <= 1e-12

    def test_oscmass_expm_zero_dt_is_identity(self):
        from scipy.linalg import expm

        Ac, _, _, _ = oscmass_system()
        assert np.allclose(expm(Ac * 0.0), np.eye(8), atol=1e-15)

    def test_problem_size_counts_all_blocks(self):
        prob = gen_robust_kalman(25, 0)
        assert problem_size(prob) == prob.P.nnz + prob.A.nnz + prob.G.nnz


class TestLqrKkt:
    def test_dimension_and_blocks(self):
        T = 5
        K = lqr_kkt(T, 0)
        N = 15 * T - 3
        assert K.nrows == N
        D = K.to_dense()
        n = 9 * T - 3
        assert np.array_equal(D, D.T)
        assert np.allclose(np.diag(D)[:n], 1.0)
        assert np.allclose(np.diag(D)[n:], -LQR_EPS)
        # (2,1) block is the constraint matrix of the LQR problem
        prob = lqr_problem(T, 0)
        assert np.array_equal(D[n:, :n], prob.A.to_dense())
        assert np.array_equal(D[:n, :n], np.eye(n))

    def test_nnz_formula(self):
        # upper triangle: identity, -eps diagonal, and per-step blocks
        # A (36) + I (6) + B (18) plus the initial-condition identity
        for T in (2, 5, 15):
            K = lqr_kkt(T, 0)
            assert K.nnz == (15 * T - 3) + 60 * (T - 1) + 6


class TestMetrics:
    def test_constant_times(self):
        assert shifted_geometric_mean([4.0, 4.0, 4.0]) == pytest.approx(4.0)

    def test_two_point_example(self):
        g = shifted_geometric_mean([1.0, 3.0], shift=1.0)
        assert abs(g - (2.0 * np.sqrt(2.0) - 1.0)) <= 1e-12

    def test_failure_cap_substitution(self):
        g = shifted_geometric_mean([1.0, 3.0], failures=[False, True], cap=10.0)
        assert abs(g - (np.sqrt(2.0 * 11.0) - 1.0)) <= 1e-12

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        t = rng.random(200) * 5.0
        g1 = shifted_geometric_mean(t)
        g2 = shifted_geometric_mean(t[rng.permutation(200)])
        assert g1 == pytest.approx(g2, rel=1e-12)

    def test_empty_times_rejected(self):
        with pytest.raises(ValueError):
            shifted_geometric_mean([])

    def test_normalize_fastest_is_one(self):
        r = normalize([0.5, 2.0, 1.0])
        assert r[0] == 1.0
        assert r[1] == pytest.approx(4.0)

    def test_profile_single_solver(self):
        curves = performance_profiles([[1.0, 2.0, 3.0]])
        assert curves.rel[0][0] == 1.0  # f_r(1) = 1: always fastest

    def test_profile_two_solver_example(self):
        curves = performance_profiles([[1.0, 2.0], [2.0, 1.0]])
        taus = list(curves.rel_tau)
        i1, i2 = taus.index(1.0), taus.index(2.0)
        for s in range(2):
            assert curves.rel[s][i1] == 0.5
            assert curves.rel[s][i2] == 1.0

    def test_profiles_monotone_terminal_success_rate(self):
        rng = np.random.default_rng(1)
        times = rng.random((3, 40)) + 0.01
        failed = rng.random((3, 40)) < 0.25
        curves = performance_profiles(times, failed)
        for mat in (curves.rel, curves.abs):
            assert np.all(np.diff(mat, axis=1) >= 0.0)
        success = (~failed).mean(axis=1)
        assert np.allclose(curves.rel[:, -1], success)
        assert np.allclose(curves.abs[:, -1], success)

    def test_profile_failures_never_counted(self):
        curves = performance_profiles([[1.0, 1.0]], failures=[[False, True]])
        assert curves.rel[0][-1] == 0.5


class TestRunner:
    def test_small_sweep_writes_reports(self, tmp_path):
        out = str(tmp_path / "report")
        records = run_bench(
            classes=tuple(CLASSES), sizes="small", instances=3, repeats=1,
            solvers=("library",), out_dir=out, skip_ldl=True, verbose=False,
        )
        assert len(records) == 15
        assert all(r.status == "Optimal" for r in records)
        assert all(r.runtime > 0.0 for r in records)
        assert all(r.iterations > 0 for r in records)
        for fname in ("records.csv", "sgm.csv", "profiles.svg"):
            assert os.path.exists(os.path.join(out, fname))
        with open(os.path.join(out, "records.csv")) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 15
        assert {r["solver"] for r in rows} == {"library"}
        with open(os.path.join(out, "sgm.csv")) as fh:
            sgm_rows = list(csv.DictReader(fh))
        assert [r["solver"] for r in sgm_rows] == ["library"]
        assert float(sgm_rows[0]["normalized"]) == 1.0
        assert int(sgm_rows[0]["solved"]) == 15

    def test_repeat_determinism(self):
        prob = CLASSES["portfolio"](SMALLEST["portfolio"], 0)
        s1, s2 = solve(prob), solve(prob)
        assert s1.iterations == s2.iterations
        assert np.array_equal(s1.x, s2.x)

    def test_failed_records_carry_cap(self):
        from coneforge.bench.runner import BenchRecord

        rec = BenchRecord("x", "rkf", 10, "library", "NumericalError",
                          FAILURE_CAP, 3)
        assert rec.failed
        assert rec.runtime == FAILURE_CAP
