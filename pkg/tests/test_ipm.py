"""Tests for the interior-point engine: initialization, residuals,
directions, step selection, termination, and the full solve loop."""

import math

import numpy as np
import pytest

import coneforge as cf
from coneforge import cones as cn
from coneforge.ipm import (Direction, LineSearchStall, Workspace,
                           centering_parameter, check_termination,
                           combined_direction, compute_residuals, initialize,
                           predictor_direction, solve, take_step)
from coneforge.kkt import apply_unregularized, refactor, update_kkt_nt
from coneforge.problem import (ConeSpec, ProblemData, Settings, SparseMat,
                               SparseSym, Status)

from oracles import golden_section_min


def sample_problem():
    """Four-variable QP with one orthant slot and one second-order cone;
    reduces to the scalar problem g(t) = 2(1-t)^2 + t^2 - sqrt(2t-1)."""
    P = np.diag([2.0, 2.0, 2.0, 0.0])
    A = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 1.0, 0.0]])
    return ProblemData(
        n=4, p=2, P=SparseSym.from_dense(P), c=np.array([0.0, 0.0, 0.0, 1.0]),
        A=SparseMat.from_dense(A), b=np.array([1.0, 1.0]),
        G=SparseMat.from_dense(-np.eye(4)), h=np.zeros(4),
        cones=ConeSpec(l=1, soc_dims=[3]))


def bound_qp(c0=0.0):
    """min 1/2 x^2 + c0*x subject to x >= 0 (single orthant slot)."""
    return ProblemData(
        n=1, p=0, P=SparseSym.from_dense([[1.0]]), c=np.array([c0]),
        A=SparseMat.zeros(0, 1), b=np.zeros(0),
        G=SparseMat.from_dense([[-1.0]]), h=np.zeros(1),
        cones=ConeSpec(l=1))


def random_mixed(seed, n=6, p=2, l=3, q=(4,)):
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


class TestInitialize:
    def test_strict_interior_after_init(self):
        work = Workspace(sample_problem())
        initialize(work)
        assert cn.in_cone(work.s, work.prob.cones, strict=True)
        assert cn.in_cone(work.z, work.prob.cones, strict=True)

    def test_no_shift_when_interior(self):
        # min 1/2 x^2 - 2x s.t. x >= 0: the init solve returns x=1,
        # z=-1, so s=-z=1 is already interior and stays untouched while
        # z is shifted to -1 + (1+1) = 1
        work = Workspace(bound_qp(c0=-2.0))
        initialize(work)
        assert abs(work.s[0] - 1.0) < 1e-7
        assert abs(work.z[0] - 1.0) < 1e-7

    def test_m_zero_solves_equality_qp(self):
        prob = ProblemData(
            n=3, p=1, P=SparseSym.from_dense(np.eye(3)), c=np.zeros(3),
            A=SparseMat.from_dense(np.ones((1, 3))), b=np.array([1.0]),
            G=SparseMat.zeros(0, 3), h=np.zeros(0), cones=ConeSpec())
        work = Workspace(prob)
        initialize(work)
        assert work.s.size == 0 and work.z.size == 0
        assert np.max(np.abs(work.x - 1.0 / 3.0)) < 1e-7


class TestResiduals:
    def test_zero_iterate(self):
        work = Workspace(random_mixed(0))
        work.x[:] = 0.0
        work.s[:] = 0.0
        work.y[:] = 0.0
        work.z[:] = 0.0
        compute_residuals(work)
        assert np.array_equal(work._rx, work.prob.c)
        assert np.array_equal(work._ry, -work.prob.b)
        assert np.array_equal(work._rz, -work.prob.h)
        assert work.mu == 0.0

    def test_gradient_matches_finite_differences(self):
        prob = random_mixed(1)
        work = Workspace(prob)
        rng = np.random.default_rng(2)
        work.x[:] = rng.standard_normal(prob.n)
        work.s[:] = 0.0
        work.y[:] = 0.0
        work.z[:] = 0.0
        compute_residuals(work)

        def obj(v):
            Pd = prob.P.to_dense()
            return 0.5 * v @ Pd @ v + prob.c @ v

        step = 1e-6
        for i in range(prob.n):
            e = np.zeros(prob.n)
            e[i] = step
            fd = (obj(work.x + e) - obj(work.x - e)) / (2.0 * step)
            assert abs(fd - work._rx[i]) < 1e-5

    def test_duality_measure(self):
        work = Workspace(random_mixed(3))
        initialize(work)
        compute_residuals(work)
        assert work.mu == pytest.approx(
            float(work.s @ work.z) / work.prob.m, rel=1e-14)


class TestPredictor:
    def test_one_dim_qp_matches_dense_newton(self):
        # min 1/2 x^2 s.t. x >= 1, iterate x=2, s=1, z=1: the reduced
        # scaled system must reproduce the unreduced 3x3 Newton solve
        prob = ProblemData(
            n=1, p=0, P=SparseSym.from_dense([[1.0]]), c=np.zeros(1),
            A=SparseMat.zeros(0, 1), b=np.zeros(0),
            G=SparseMat.from_dense([[-1.0]]), h=np.array([-1.0]),
            cones=ConeSpec(l=1))
        work = Workspace(prob)
        work._solved = True
        work.x[0] = 2.0
        work.s[0] = 1.0
        work.z[0] = 1.0
        compute_residuals(work)
        sc = cn.compute_scaling(work.s, work.z, prob.cones)
        update_kkt_nt(work.kkt, sc)
        refactor(work.kkt, work.settings.eps_dyn)
        d = predictor_direction(work, sc)

        # dense Newton system in (dx, ds, dz)
        x, s, z = 2.0, 1.0, 1.0
        K3 = np.array([[1.0, 0.0, -1.0],
                       [-1.0, 1.0, 0.0],
                       [0.0, z, s]])
        rx = 1.0 * x + 0.0 + (-1.0) * z
        rz = -x + s - (-1.0)
        rhs3 = np.array([-rx, -rz, -(s * z)])
        ref = np.linalg.solve(K3, rhs3)
        assert abs(d.dx[0] - ref[0]) < 1e-9
        assert abs(d.ds[0] - ref[1]) < 1e-9
        assert abs(d.dz[0] - ref[2]) < 1e-9

    def test_zero_residuals_give_zero_direction(self):
        # at an exact KKT point every residual including the
        # complementarity one vanishes; a zero right-hand side must
        # produce a bitwise-zero direction
        from coneforge.ipm import _direction_rhs_xy, _solve_direction
        prob = random_mixed(4)
        work = Workspace(prob)
        initialize(work)
        compute_residuals(work)
        sc = cn.compute_scaling(work.s, work.z, prob.cones)
        update_kkt_nt(work.kkt, sc)
        refactor(work.kkt, work.settings.eps_dyn)
        work._rx[:] = 0.0
        work._ry[:] = 0.0
        work._rz[:] = 0.0
        _direction_rhs_xy(work)
        m = prob.m
        _solve_direction(work, np.zeros(m), sc, work._dxa, work._dya,
                         work._dza, work._dsa)
        assert not np.any(work._dxa) and not np.any(work._dsa)
        assert not np.any(work._dya) and not np.any(work._dza)

    def test_residual_identity_unregularized(self):
        prob = random_mixed(5)
        work = Workspace(prob)
        initialize(work)
        compute_residuals(work)
        sc = cn.compute_scaling(work.s, work.z, prob.cones)
        update_kkt_nt(work.kkt, sc)
        refactor(work.kkt, work.settings.eps_dyn)
        predictor_direction(work, sc)
        n, p, m = prob.n, prob.p, prob.m
        rhs = work._rhs.copy()
        resid = rhs - apply_unregularized(prob, sc, work._sol)
        assert np.max(np.abs(resid)) <= 1e-8 * (1.0 + np.max(np.abs(rhs)))


class TestCentering:
    def test_zero_direction_full_centering(self):
        cones = ConeSpec(l=2)
        s = np.array([1.0, 2.0])
        z = np.array([3.0, 1.0])
        sigma, rho, a = centering_parameter(s, z, np.zeros(2), np.zeros(2),
                                            cones)
        assert rho == 1.0 and sigma == 1.0 and a == 1.0

    def test_gap_killing_step(self):
        cones = ConeSpec(l=1)
        s = np.array([1.0])
        z = np.array([1.0])
        sigma, rho, a = centering_parameter(s, z, np.array([-1.0]),
                                            np.array([-1.0]), cones)
        assert a == 1.0
        assert rho == 0.0 and sigma == 0.0

    def test_cubed_ratio(self):
        cones = ConeSpec(l=1)
        s = np.array([1.0])
        z = np.array([1.0])
        sigma, rho, _ = centering_parameter(s, z, np.array([-0.5]),
                                            np.zeros(1), cones)
        assert rho == pytest.approx(0.5)
        assert sigma == pytest.approx(0.125)


class TestCombined:
    def _setup(self, prob):
        work = Workspace(prob)
        initialize(work)
        compute_residuals(work)
        sc = cn.compute_scaling(work.s, work.z, prob.cones)
        update_kkt_nt(work.kkt, sc)
        refactor(work.kkt, work.settings.eps_dyn)
        return work, sc

    def _dense_direction(self, work, sc, rs):
        """Dense oracle for the reduced system with a given rs."""
        prob = work.prob
        n, p, m = prob.n, prob.p, prob.m
        Pd = prob.P.to_dense()
        Ad, Gd = prob.A.to_dense(), prob.G.to_dense()
        W = np.zeros((m, m))
        for i in range(m):
            e = np.zeros(m)
            e[i] = 1.0
            W[:, i] = cn.apply_W(sc, e)
        K = np.zeros((n + p + m, n + p + m))
        K[:n, :n] = Pd
        K[:n, n:n + p] = Ad.T
        K[n:n + p, :n] = Ad
        K[:n, n + p:] = Gd.T
        K[n + p:, :n] = Gd
        K[n + p:, n + p:] = -W.T @ W
        rhs = np.concatenate([
            -work._rx, -work._ry,
            -work._rz + W.T @ cn.cone_div(sc.lam, rs, prob.cones)])
        sol = np.linalg.solve(K, rhs)
        return sol[:n], sol[n:n + p], sol[n + p:]

    def test_pure_centering_when_affine_zero(self):
        # sigma=1 with a zero affine direction solves toward the central
        # path target: rs = lam o lam - mu e
        prob = random_mixed(6, q=())
        work, sc = self._setup(prob)
        m = prob.m
        aff = Direction(dx=np.zeros(prob.n), ds=np.zeros(m),
                        dy=np.zeros(prob.p), dz=np.zeros(m))
        d = combined_direction(work, sc, aff, 1.0, work.mu)
        lamlam = cn.cone_product(sc.lam, sc.lam, prob.cones)
        rs = lamlam - work.mu
        dx, dy, dz = self._dense_direction(work, sc, rs)
        assert np.max(np.abs(d.dx - dx)) < 1e-8
        assert np.max(np.abs(d.dz - dz)) < 1e-8

    def test_orthant_correction_is_elementwise(self):
        # with only orthant slots the Jordan correction term reduces to
        # the elementwise product of the affine slack and dual steps
        prob = random_mixed(7, l=4, q=())
        work, sc = self._setup(prob)
        m = prob.m
        rng = np.random.default_rng(8)
        aff = Direction(dx=np.zeros(prob.n), ds=rng.standard_normal(m),
                        dy=np.zeros(prob.p), dz=rng.standard_normal(m))
        sigma = 0.3
        d = combined_direction(work, sc, aff, sigma, work.mu)
        lamlam = cn.cone_product(sc.lam, sc.lam, prob.cones)
        rs = lamlam + aff.ds * aff.dz - sigma * work.mu
        dx, dy, dz = self._dense_direction(work, sc, rs)
        assert np.max(np.abs(d.dx - dx)) < 1e-8
        assert np.max(np.abs(d.dz - dz)) < 1e-8

    def test_residual_identity(self):
        prob = random_mixed(9)
        work, sc = self._setup(prob)
        aff = predictor_direction(work, sc)
        sigma, _, _ = centering_parameter(work.s, work.z, aff.ds, aff.dz,
                                          prob.cones)
        combined_direction(work, sc, aff, sigma, work.mu)
        rhs = work._rhs.copy()
        resid = rhs - apply_unregularized(prob, sc, work._sol)
        assert np.max(np.abs(resid)) <= 1e-8 * (1.0 + np.max(np.abs(rhs)))


class TestTakeStep:
    def _work(self):
        work = Workspace(bound_qp())
        work.x[0] = 1.0
        work.s[0] = 1.0
        work.z[0] = 1.0
        return work

    def test_full_step_when_boundary_far(self):
        work = self._work()
        d = Direction(dx=np.zeros(1), ds=np.array([1.0]), dy=np.zeros(0),
                      dz=np.array([1.0]))
        assert take_step(work, d) == 1.0

    def test_scaled_boundary_step(self):
        work = self._work()
        d = Direction(dx=np.zeros(1), ds=np.array([-1.0]), dy=np.zeros(0),
                      dz=np.zeros(1))
        alpha = take_step(work, d)
        assert alpha == pytest.approx(0.99)
        assert work.s[0] == pytest.approx(1.0 - 0.99)

    def test_zero_direction_keeps_iterate(self):
        work = self._work()
        d = Direction(dx=np.zeros(1), ds=np.zeros(1), dy=np.zeros(0),
                      dz=np.zeros(1))
        assert take_step(work, d) == 1.0
        assert work.s[0] == 1.0 and work.x[0] == 1.0

    def test_stall_raises(self):
        work = self._work()
        d = Direction(dx=np.zeros(1), ds=np.array([-1e12]), dy=np.zeros(0),
                      dz=np.zeros(1))
        with pytest.raises(LineSearchStall):
            take_step(work, d)


class TestTermination:
    def test_exact_kkt_point(self):
        # equality QP optimum: x = e/3, y = -1/3 zeroes every residual
        prob = ProblemData(
            n=3, p=1, P=SparseSym.from_dense(np.eye(3)), c=np.zeros(3),
            A=SparseMat.from_dense(np.ones((1, 3))), b=np.array([1.0]),
            G=SparseMat.zeros(0, 3), h=np.zeros(0), cones=ConeSpec())
        work = Workspace(prob, Settings(eps_abs=1e-300, eps_rel=0.0))
        work.x[:] = 1.0 / 3.0
        work.y[:] = -1.0 / 3.0
        compute_residuals(work)
        assert check_termination(work)

    def test_boundary_is_inclusive(self):
        # min 1/2 x^2 - x s.t. x >= 0 at x=1, s=1, z=eps: the dual
        # residual and the gap both sit exactly at eps_abs
        work = Workspace(bound_qp(c0=-1.0), Settings(eps_rel=0.0))
        eps = work.settings.eps_abs
        work.x[0] = 1.0
        work.s[0] = 1.0
        work.z[0] = eps
        compute_residuals(work)
        ok = check_termination(work)
        assert work.pres == 0.0
        assert work.dres == eps and work.gap == eps
        assert ok
        work.z[0] = math.nextafter(eps, 1.0)
        compute_residuals(work)
        assert not check_termination(work)

    def test_scaled_problem_accepted(self):
        prob = random_mixed(10)
        base = solve(prob)
        assert base.status == Status.OPTIMAL
        scaled = ProblemData(
            n=prob.n, p=prob.p,
            P=SparseSym(prob.n, prob.n, prob.P.colptr, prob.P.rowidx,
                        prob.P.vals * 1e6),
            c=prob.c * 1e6,
            A=SparseMat(prob.p, prob.n, prob.A.colptr, prob.A.rowidx,
                        prob.A.vals * 1e6),
            b=prob.b * 1e6,
            G=SparseMat(prob.m, prob.n, prob.G.colptr, prob.G.rowidx,
                        prob.G.vals * 1e6),
            h=prob.h * 1e6, cones=prob.cones)
        out = solve(scaled)
        assert out.status == Status.OPTIMAL
        assert np.max(np.abs(out.x - base.x)) < 1e-4 * (1 + np.max(np.abs(base.x)))


class TestSolve:
    def test_sample_problem_against_parametric_oracle(self):
        sol = solve(sample_problem())
        assert sol.status == Status.OPTIMAL

        def g(t):
            return 2.0 * (1.0 - t) ** 2 + t * t - math.sqrt(2.0 * t - 1.0)

        tstar, gstar = golden_section_min(g, 0.5, 1.0, tol=1e-12)
        assert abs(sol.primal_obj - gstar) < 1e-6

    def test_equality_only_qp(self):
        prob = ProblemData(
            n=3, p=1, P=SparseSym.from_dense(np.eye(3)), c=np.zeros(3),
            A=SparseMat.from_dense(np.ones((1, 3))), b=np.array([1.0]),
            G=SparseMat.zeros(0, 3), h=np.zeros(0), cones=ConeSpec())
        sol = solve(prob)
        assert sol.status == Status.OPTIMAL
        assert np.max(np.abs(sol.x - 1.0 / 3.0)) < 1e-9
        assert abs(sol.primal_obj - 1.0 / 6.0) < 1e-9

    def test_infeasible_start_converges(self):
        # linear objective over shifted bounds: the init point is far
        # outside the feasible region and must be pulled in
        n = 8
        prob = ProblemData(
            n=n, p=0, P=SparseSym.zeros(n, n), c=np.ones(n),
            A=SparseMat.zeros(0, n), b=np.zeros(0),
            G=SparseMat.from_dense(-np.eye(n)), h=-np.ones(n),
            cones=ConeSpec(l=n))
        sol = solve(prob)
        assert sol.status == Status.OPTIMAL
        assert sol.iterations <= 50
        assert np.max(np.abs(sol.x - 1.0)) < 1e-6

    def test_max_iters_status(self):
        sol = solve(sample_problem(), Settings(max_iters=2))
        assert sol.status == Status.MAX_ITERS
        assert sol.iterations == 2

    def test_invalid_data_status(self):
        prob = sample_problem()
        bad = ProblemData(n=prob.n, p=prob.p, P=prob.P, c=np.zeros(3),
                          A=prob.A, b=prob.b, G=prob.G, h=prob.h,
                          cones=prob.cones)
        sol = solve(bad)
        assert sol.status == Status.INVALID_DATA

    def test_deterministic_bitwise(self):
        prob = random_mixed(11)
        a = solve(prob)
        b = solve(prob)
        assert a.iterations == b.iterations
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.s, b.s)
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.z, b.z)

    def test_termination_soundness_independent_recompute(self):
        # recompute the three stopping criteria from the returned point
        # with plain numpy arithmetic
        for seed in range(6):
            prob = random_mixed(20 + seed)
            st = Settings()
            sol = solve(prob, st)
            assert sol.status == Status.OPTIMAL
            Pd = prob.P.to_dense()
            Ad, Gd = prob.A.to_dense(), prob.G.to_dense()
            x, s, y, z = sol.x, sol.s, sol.y, sol.z
            pres = max(np.max(np.abs(Ad @ x - prob.b), initial=0.0),
                       np.max(np.abs(Gd @ x + s - prob.h), initial=0.0))
            pscale = max(np.max(np.abs(Ad @ x), initial=0.0),
                         np.max(np.abs(prob.b), initial=0.0),
                         np.max(np.abs(Gd @ x), initial=0.0),
                         np.max(np.abs(prob.h), initial=0.0),
                         np.max(np.abs(s), initial=0.0))
            assert pres <= st.eps_abs + st.eps_rel * pscale
            dres = np.max(np.abs(Pd @ x + prob.c + Ad.T @ y + Gd.T @ z))
            dscale = max(np.max(np.abs(Pd @ x)),
                         np.max(np.abs(Ad.T @ y)),
                         np.max(np.abs(Gd.T @ z)),
                         np.max(np.abs(prob.c)))
            assert dres <= st.eps_abs + st.eps_rel * dscale
            pobj = 0.5 * x @ Pd @ x + prob.c @ x
            dobj = -0.5 * x @ Pd @ x - prob.b @ y - prob.h @ z
            assert abs(s @ z) <= st.eps_abs + st.eps_rel * max(
                1.0, abs(pobj), abs(dobj))

    def test_final_iterate_in_cone(self):
        for seed in (30, 31):
            prob = random_mixed(seed)
            sol = solve(prob)
            assert sol.status == Status.OPTIMAL
            assert cn.in_cone(sol.s, prob.cones)
            assert cn.in_cone(sol.z, prob.cones)

    def test_gap_shrinks_along_trace(self):
        work = Workspace(random_mixed(12))
        work.solve()
        mus = [r.mu for r in work.trace]
        assert mus[-1] < 1e-8 * mus[0]

    def test_resolve_reuses_symbolics_bitwise(self):
        prob = random_mixed(13)
        work = Workspace(prob)
        first = work.solve()
        work.update_c(prob.c * 2.0)
        doubled = work.solve()
        work.update_c(prob.c)
        again = work.solve()
        assert first.status == doubled.status == again.status == Status.OPTIMAL
        assert not np.array_equal(first.x, doubled.x)
        assert np.array_equal(first.x, again.x)
        assert first.iterations == again.iterations

    def test_caller_arrays_never_mutated(self):
        prob = random_mixed(14)
        c_snap = prob.c.copy()
        P_snap = prob.P.vals.copy()
        work = Workspace(prob)
        work.update_c(prob.c * 3.0)
        work.update_P(prob.P.vals * 2.0)
        work.solve()
        assert np.array_equal(prob.c, c_snap)
        assert np.array_equal(prob.P.vals, P_snap)
