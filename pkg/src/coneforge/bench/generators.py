"""Benchmark problem generators.

Five problem families exercise the solver across QP and SOCP structure:
robust Kalman filtering with a Huber measurement loss, losslessly
convexified powered descent, group lasso regression, factor-model
portfolio optimization, and oscillating-masses optimal control.  Each
generator is deterministic in (size, seed) and returns a ProblemData in
standard form with orthant rows first, followed by second-order cone
blocks.  Per-class audit functions recheck the returned solution
against the original (pre-reformulation) problem statement.

lqr_kkt builds the quasidefinite KKT matrix of a finite-horizon LQR
problem, the test matrix for the factorization study.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from ..problem import ConeSpec, ProblemData, SparseMat, SparseSym
from .rng import normal, stream, uniform


class _Triplets:
    """Accumulates (row, col, value) entries and assembles CSC."""

    def __init__(self, nrows: int, ncols: int):
        self.nrows = nrows
        self.ncols = ncols
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []

    def add(self, r: int, c: int, v: float) -> None:
        if v != 0.0:
            self.rows.append(r)
            self.cols.append(c)
            self.vals.append(v)

    def add_block(self, r0: int, c0: int, M) -> None:
        M = np.asarray(M, dtype=np.float64)
        for (i, j) in zip(*np.nonzero(M)):
            self.rows.append(r0 + int(i))
            self.cols.append(c0 + int(j))
            self.vals.append(float(M[i, j]))

    def add_eye(self, r0: int, c0: int, n: int, scale: float = 1.0) -> None:
        for i in range(n):
            self.add(r0 + i, c0 + i, scale)

    def tocsc(self) -> sp.csc_matrix:
        M = sp.coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.nrows, self.ncols)
        )
        return M.tocsc()

    def mat(self) -> SparseMat:
        return SparseMat.from_scipy(self.tocsc())


def _diag_sym(d) -> SparseSym:
    """Upper-triangle storage of a diagonal matrix, zeros dropped."""
    d = np.asarray(d, dtype=np.float64)
    n = d.size
    idx = np.flatnonzero(d)
    counts = np.zeros(n, dtype=np.int64)
    counts[idx] = 1
    colptr = np.concatenate(([0], np.cumsum(counts)))
    return SparseSym(n, n, colptr, idx.astype(np.int64), d[idx])


def problem_size(prob: ProblemData) -> int:
    """Size metric: nnz(A) + nnz(G) + nnz of the upper triangle of P."""
    return int(prob.A.nnz + prob.G.nnz + prob.P.nnz)


# ---------------------------------------------------------------------------
# Robust Kalman filtering


RKF_GAMMA = 0.05
RKF_RHO = 2.0
RKF_TAU = 2.0
RKF_HORIZON = 50.0


def _rkf_system(dt: float):
    g = RKF_GAMMA
    A = np.array(
        [
            [1.0, 0.0, (1.0 - 0.5 * g * dt) * dt, 0.0],
            [0.0, 1.0, 0.0, (1.0 - 0.5 * g * dt) * dt],
            [0.0, 0.0, 1.0 - g * dt, 0.0],
            [0.0, 0.0, 0.0, 1.0 - g * dt],
        ]
    )
    B = np.array(
        [
            [0.5 * dt * dt, 0.0],
            [0.0, 0.5 * dt * dt],
            [dt, 0.0],
            [0.0, dt],
        ]
    )
    C = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
    return A, B, C


def gen_robust_kalman(N: int, seed: int, zero_noise: bool = False) -> ProblemData:
    """Estimate a vehicle trajectory from N noisy position measurements.

    minimize   sum_k ||w_k||^2 + tau * huber_rho(v_k)
    subject to x_{k+1} = A x_k + B w_k,  y_k = C x_k + v_k

    The Huber term is transcribed with per-step epigraph variables
    (a_k, b_k): cost a^2 + 2*rho*b with ||v_k|| <= a_k + b_k, a_k <= rho,
    b_k >= 0.  With zero_noise the simulated w, v are zeroed, so the
    optimal objective is zero.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    dt = RKF_HORIZON / (N - 1)
    A, B, C = _rkf_system(dt)

    rng = stream("rkf", N, seed)
    w_sim = normal(rng, size=(N, 2))
    v_sim = normal(rng, size=(N, 2))
    outlier = rng.random((N, 2)) < 0.2
    v_out = normal(rng, 0.0, 20.0, size=(N, 2))
    v_sim = np.where(outlier, v_out, v_sim)
    if zero_noise:
        w_sim = np.zeros((N, 2))
        v_sim = np.zeros((N, 2))

    xs = np.zeros((N + 1, 4))
    ys = np.zeros((N, 2))
    for k in range(N):
        ys[k] = C @ xs[k] + v_sim[k]
        xs[k + 1] = A @ xs[k] + B @ w_sim[k]

    # layout: x (4(N+1)) | w (2N) | v (2N) | a (N) | b (N)
    xo = 0
    wo = 4 * (N + 1)
    vo = wo + 2 * N
    ao = vo + 2 * N
    bo = ao + N
    n = bo + N

    pdiag = np.zeros(n)
    pdiag[wo : wo + 2 * N] = 2.0
    pdiag[ao : ao + N] = 2.0 * RKF_TAU
    c = np.zeros(n)
    c[bo : bo + N] = 2.0 * RKF_TAU * RKF_RHO

    p = 6 * N
    At = _Triplets(p, n)
    b_eq = np.zeros(p)
    for k in range(N):
        r = 4 * k
        At.add_eye(r, xo + 4 * (k + 1), 4)
        At.add_block(r, xo + 4 * k, -A)
        At.add_block(r, wo + 2 * k, -B)
    for k in range(N):
        r = 4 * N + 2 * k
        At.add_block(r, xo + 4 * k, C)
        At.add_eye(r, vo + 2 * k, 2)
        b_eq[r : r + 2] = ys[k]

    l = 2 * N
    m = l + 3 * N
    Gt = _Triplets(m, n)
    h = np.zeros(m)
    for k in range(N):
        Gt.add(k, ao + k, 1.0)  # a_k <= rho
        h[k] = RKF_RHO
        Gt.add(N + k, bo + k, -1.0)  # b_k >= 0
    for k in range(N):
        r = l + 3 * k
        Gt.add(r, ao + k, -1.0)  # head: a_k + b_k
        Gt.add(r, bo + k, -1.0)
        Gt.add_eye(r + 1, vo + 2 * k, 2, -1.0)  # tail: v_k

    return ProblemData(
        n=n, p=p, P=_diag_sym(pdiag), c=c, A=At.mat(), b=b_eq,
        G=Gt.mat(), h=h, cones=ConeSpec(l=l, soc_dims=[3] * N),
    )


def huber(z: np.ndarray, rho: float = RKF_RHO) -> float:
    """Huber loss of a vector: ||z||^2 inside rho, linear outside."""
    nz = float(np.linalg.norm(z))
    if nz <= rho:
        return nz * nz
    return 2.0 * rho * nz - rho * rho


def audit_robust_kalman(prob: ProblemData, sol) -> dict:
    N = (prob.n - 4) // 10
    wo = 4 * (N + 1)
    vo = wo + 2 * N
    ao = vo + 2 * N
    bo = ao + N
    x = sol.x
    w = x[wo:vo].reshape(N, 2)
    v = x[vo:ao].reshape(N, 2)
    a = x[ao:bo]
    b = x[bo:]
    cone_viol = 0.0
    for k in range(N):
        cone_viol = max(cone_viol, np.linalg.norm(v[k]) - (a[k] + b[k]))
    cone_viol = max(cone_viol, float(np.max(a - RKF_RHO)), float(np.max(-b)))
    direct = sum(float(w[k] @ w[k]) + RKF_TAU * huber(v[k]) for k in range(N))
    gap = abs(direct - sol.primal_obj) / max(1.0, abs(direct))
    return {"cone_violation": cone_viol, "objective_gap": gap}


# ---------------------------------------------------------------------------
# Lossless convexification (powered descent)


LCVX_G0 = 9.807
LCVX_RHO1 = 100.0
LCVX_RHO2 = 500.0
LCVX_M_DRY = 25.0
LCVX_M_WET = 35.0
LCVX_THETA_MAX = np.pi / 4.0
LCVX_ALPHA = 0.001
LCVX_TF = 20.0


def gen_lcvx(T: int, seed: int) -> ProblemData:
    """Powered-descent guidance after lossless convexification.

    maximize final log-mass z_T subject to double-integrator dynamics
    with gravity, thrust magnitude ||u_k|| <= sigma_k, mass-depletion
    dynamics on z, log-mass corridor bounds, linearized thrust bounds
    (the lower one via a dim-3 quadratic-epigraph cone), and a pointing
    constraint e3' u_k >= sigma_k cos(theta_max).
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    dt = LCVX_TF / (T - 1)
    alpha = LCVX_ALPHA
    Ad = np.block(
        [[np.eye(3), dt * np.eye(3)], [np.zeros((3, 3)), np.eye(3)]]
    )
    Bd = np.vstack([0.5 * dt * dt * np.eye(3), dt * np.eye(3)])
    g = np.array([0.0, 0.0, -0.5 * LCVX_G0 * dt * dt, 0.0, 0.0, -LCVX_G0 * dt])

    rng = stream("lcvx", T, seed)
    x_init = np.array(
        [
            uniform(rng, -10.0, 10.0),
            uniform(rng, -10.0, 10.0),
            uniform(rng, 200.0, 400.0),
            0.0,
            0.0,
            0.0,
        ]
    )

    ks = np.arange(T, dtype=np.float64)
    z_lb = np.log(LCVX_M_WET - alpha * LCVX_RHO2 * ks * dt)
    z_ub = np.log(LCVX_M_WET - alpha * LCVX_RHO1 * ks * dt)
    z0k = z_lb
    mu1 = LCVX_RHO1 * np.exp(-z0k)
    mu2 = LCVX_RHO2 * np.exp(-z0k)

    # layout: x (6(T+1)) | z (T+1) | u (3T) | sigma (T)
    xo = 0
    zo = 6 * (T + 1)
    uo = zo + (T + 1)
    so = uo + 3 * T
    n = so + T

    c = np.zeros(n)
    c[zo + T] = -1.0

    p = 7 * T + 7
    At = _Triplets(p, n)
    b_eq = np.zeros(p)
    for k in range(T):
        r = 6 * k
        At.add_eye(r, xo + 6 * (k + 1), 6)
        At.add_block(r, xo + 6 * k, -Ad)
        At.add_block(r, uo + 3 * k, -Bd)
        b_eq[r : r + 6] = g
    for k in range(T):
        r = 6 * T + k
        At.add(r, zo + k + 1, 1.0)
        At.add(r, zo + k, -1.0)
        At.add(r, so + k, alpha * dt)
    At.add_eye(7 * T, xo, 6)
    b_eq[7 * T : 7 * T + 6] = x_init
    At.add(7 * T + 6, zo, 1.0)
    b_eq[7 * T + 6] = np.log(LCVX_M_WET)

    # z_0 is pinned by an equality and z_lb(0) = z_ub(0) = log(m_wet), so
    # the k=0 corridor rows would duplicate it with identically zero
    # slack; they are dropped to keep the problem strictly feasible.
    l = 4 * T - 1
    m = l + 7 * T
    Gt = _Triplets(m, n)
    h = np.zeros(m)
    cos_th = np.cos(LCVX_THETA_MAX)
    r = 0
    for k in range(T):
        if k > 0:
            Gt.add(r, zo + k, -1.0)  # z_k >= z_lb
            h[r] = -z_lb[k]
            r += 1
            Gt.add(r, zo + k, 1.0)  # z_k <= z_ub
            h[r] = z_ub[k]
            r += 1
        Gt.add(r, zo + k, mu2[k])  # sigma_k <= mu2 (1 - (z_k - z0k))
        Gt.add(r, so + k, 1.0)
        h[r] = mu2[k] * (1.0 + z0k[k])
        r += 1
        Gt.add(r, uo + 3 * k + 2, -1.0)  # e3' u_k >= sigma_k cos(theta)
        Gt.add(r, so + k, cos_th)
        r += 1
    Gt.add(r, zo + T, -1.0)  # z_T >= log(m_dry)
    h[r] = -np.log(LCVX_M_DRY)
    r += 1

    soc_dims = []
    for k in range(T):
        Gt.add(r, so + k, -1.0)  # head: sigma_k
        Gt.add_eye(r + 1, uo + 3 * k, 3, -1.0)  # tail: u_k
        soc_dims.append(4)
        r += 4
        # mu1 (1 - d + d^2/2) <= sigma with d = z_k - z0k, as
        # d^2 <= t, t = (2/mu1) sigma - 2 + 2 d:
        # head (t+1)/2, tail ((t-1)/2, d)
        Gt.add(r, so + k, -1.0 / mu1[k])
        Gt.add(r, zo + k, -1.0)
        h[r] = -(z0k[k] + 0.5)
        Gt.add(r + 1, so + k, -1.0 / mu1[k])
        Gt.add(r + 1, zo + k, -1.0)
        h[r + 1] = -(z0k[k] + 1.5)
        Gt.add(r + 2, zo + k, -1.0)
        h[r + 2] = -z0k[k]
        soc_dims.append(3)
        r += 3

    return ProblemData(
        n=n, p=p, P=SparseSym.zeros(n, n), c=c, A=At.mat(), b=b_eq,
        G=Gt.mat(), h=h, cones=ConeSpec(l=l, soc_dims=soc_dims),
    )


def audit_lcvx(prob: ProblemData, sol) -> dict:
    T = (prob.n - 7) // 11
    dt = LCVX_TF / (T - 1)
    zo = 6 * (T + 1)
    uo = zo + (T + 1)
    so = uo + 3 * T
    x = sol.x
    z = x[zo:uo]
    u = x[uo:so].reshape(T, 3)
    sig = x[so:]
    ks = np.arange(T, dtype=np.float64)
    z_lb = np.log(LCVX_M_WET - LCVX_ALPHA * LCVX_RHO2 * ks * dt)
    z_ub = np.log(LCVX_M_WET - LCVX_ALPHA * LCVX_RHO1 * ks * dt)
    mu1 = LCVX_RHO1 * np.exp(-z_lb)
    mu2 = LCVX_RHO2 * np.exp(-z_lb)
    d = z[:T] - z_lb
    thrust = float(np.max(np.linalg.norm(u, axis=1) - sig))
    point = float(np.max(sig * np.cos(LCVX_THETA_MAX) - u[:, 2]))
    zb = max(float(np.max(z_lb - z[:T])), float(np.max(z[:T] - z_ub)))
    sb = max(
        float(np.max(mu1 * (1.0 - d + 0.5 * d * d) - sig)),
        float(np.max(sig - mu2 * (1.0 - d))),
    )
    final_mass = float(np.log(LCVX_M_DRY) - z[T])
    return {
        "thrust_bound": thrust,
        "pointing": point,
        "z_bounds": zb,
        "sigma_bounds": sb,
        "final_mass": final_mass,
    }


# ---------------------------------------------------------------------------
# Group lasso


LASSO_GROUP = 10
LASSO_ROWS_PER_GROUP = 250


def gen_group_lasso(Ngroups: int, seed: int) -> ProblemData:
    """Group lasso: least squares plus a sum of group norms.

    minimize ||y||^2 + lambda * sum_i t_i subject to y = Ax - b and
    ||x_(i)|| <= t_i per group of 10 regression variables.  lambda is
    0.1 times the smallest value that zeroes every group.
    """
    if Ngroups < 1:
        raise ValueError("Ngroups must be >= 1")
    ng = Ngroups
    m_rows = LASSO_ROWS_PER_GROUP * ng
    n_reg = LASSO_GROUP * ng

    rng = stream("lasso", ng, seed)
    mask = rng.random((m_rows, n_reg)) < 0.1
    Aden = np.where(mask, uniform(rng, 0.0, 1.0, size=(m_rows, n_reg)), 0.0)
    perm = rng.permutation(ng)
    xhat = normal(rng, size=n_reg)
    for gi in perm[: ng // 2]:
        xhat[LASSO_GROUP * gi : LASSO_GROUP * (gi + 1)] = 0.0
    e = normal(rng, 0.0, 1.0 / n_reg, size=m_rows)
    b_vec = Aden @ xhat + e

    lam = 0.1 * max(
        float(np.linalg.norm(Aden[:, LASSO_GROUP * gi : LASSO_GROUP * (gi + 1)].T @ b_vec))
        for gi in range(ng)
    )

    # layout: x (10 ng) | y (250 ng) | t (ng)
    yo = n_reg
    to = yo + m_rows
    n = to + ng

    pdiag = np.zeros(n)
    pdiag[yo:to] = 2.0
    c = np.zeros(n)
    c[to:] = lam

    At = _Triplets(m_rows, n)
    At.add_block(0, 0, Aden)
    At.add_eye(0, yo, m_rows, -1.0)

    m = 11 * ng
    Gt = _Triplets(m, n)
    h = np.zeros(m)
    for gi in range(ng):
        r = 11 * gi
        Gt.add(r, to + gi, -1.0)  # head: t_i
        Gt.add_eye(r + 1, LASSO_GROUP * gi, LASSO_GROUP, -1.0)  # tail: x_(i)

    return ProblemData(
        n=n, p=m_rows, P=_diag_sym(pdiag), c=c, A=At.mat(), b=b_vec,
        G=Gt.mat(), h=h, cones=ConeSpec(l=0, soc_dims=[11] * ng),
    )


def audit_group_lasso(prob: ProblemData, sol) -> dict:
    ng = prob.n // 261
    n_reg = LASSO_GROUP * ng
    to = n_reg + LASSO_ROWS_PER_GROUP * ng
    x = sol.x[:n_reg]
    t = sol.x[to:]
    lam = prob.c[to]
    A = prob.A.to_dense()[:, :n_reg]
    b = prob.b
    norms = np.array(
        [np.linalg.norm(x[LASSO_GROUP * gi : LASSO_GROUP * (gi + 1)]) for gi in range(ng)]
    )
    feas = float(np.max(norms - t))
    tight = float(np.max(np.abs(t - norms)))
    resid = A @ x - b
    direct = float(resid @ resid + lam * np.sum(norms))
    gap = abs(direct - sol.primal_obj) / max(1.0, abs(direct))
    return {"epigraph_feas": feas, "epigraph_tightness": tight, "objective_gap": gap}


# ---------------------------------------------------------------------------
# Portfolio optimization


PORTFOLIO_ASSETS_PER_FACTOR = 100


def gen_portfolio(k: int, seed: int) -> ProblemData:
    """Factor-model Markowitz portfolio with no short selling.

    minimize x'Dx + y'y - mu'x subject to y = F'x, sum(x) = 1, x >= 0,
    with n = 100k assets and k factors (risk aversion gamma = 1).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n_assets = PORTFOLIO_ASSETS_PER_FACTOR * k

    rng = stream("portfolio", k, seed)
    # |N(0,1)| diagonal keeps D positive semidefinite
    dvec = np.abs(normal(rng, size=n_assets))
    mu = normal(rng, 0.0, np.sqrt(k), size=n_assets)
    fmask = rng.random((n_assets, k)) < 0.5
    F = np.where(fmask, normal(rng, size=(n_assets, k)), 0.0)

    # layout: x (n_assets) | y (k)
    n = n_assets + k
    pdiag = np.concatenate([2.0 * dvec, 2.0 * np.ones(k)])
    c = np.concatenate([-mu, np.zeros(k)])

    p = k + 1
    At = _Triplets(p, n)
    b_eq = np.zeros(p)
    At.add_block(0, 0, F.T)
    At.add_eye(0, n_assets, k, -1.0)
    for j in range(n_assets):
        At.add(k, j, 1.0)
    b_eq[k] = 1.0

    Gt = _Triplets(n_assets, n)
    Gt.add_eye(0, 0, n_assets, -1.0)
    h = np.zeros(n_assets)

    return ProblemData(
        n=n, p=p, P=_diag_sym(pdiag), c=c, A=At.mat(), b=b_eq,
        G=Gt.mat(), h=h, cones=ConeSpec(l=n_assets, soc_dims=[]),
    )


def audit_portfolio(prob: ProblemData, sol) -> dict:
    k = prob.p - 1
    n_assets = prob.n - k
    x = sol.x[:n_assets]
    budget = abs(float(np.sum(x)) - 1.0)
    nonneg = float(np.max(-x))
    dvec = 0.5 * np.array(
        [prob.P.to_dense()[i, i] for i in range(n_assets)]
    )
    F = prob.A.to_dense()[:k, :n_assets].T
    mu = -prob.c[:n_assets]
    y = F.T @ x
    direct = float(x @ (dvec * x) + y @ y - mu @ x)
    gap = abs(direct - sol.primal_obj) / max(1.0, abs(direct))
    return {"budget": budget, "nonneg": nonneg, "objective_gap": gap}


# ---------------------------------------------------------------------------
# Oscillating masses


OSCMASS_N = 4
OSCMASS_DT = 0.25
OSCMASS_XMAX = 2.0
OSCMASS_UMAX = 5.0


def oscmass_system(n_masses: int = OSCMASS_N, dt: float = OSCMASS_DT):
    """Exact zero-order-hold discretization of the spring-mass chain."""
    nm = n_masses
    L = -2.0 * np.eye(nm) + np.diag(np.ones(nm - 1), 1) + np.diag(np.ones(nm - 1), -1)
    Ac = np.block([[np.zeros((nm, nm)), np.eye(nm)], [L, np.zeros((nm, nm))]])
    Bc = np.vstack([np.zeros((nm, nm)), np.eye(nm)])
    Ad = expm(Ac * dt)
    Bd = np.linalg.solve(Ac, (Ad - np.eye(2 * nm)) @ Bc)
    return Ac, Bc, Ad, Bd


def _oscmass_feasible(x_init, Ad, Bd, T: int, margin: float = 1e-3) -> bool:
    """Exact feasibility screen for the state/input box constraints.

    The constraint set is linear in the inputs, so feasibility (with a
    small margin to guarantee a strictly interior point) reduces to one
    LP over the input trajectory.
    """
    from scipy.optimize import linprog

    nx, nu = Ad.shape[0], Bd.shape[1]
    impulse = [Bd]  # effect of u_j on x_{j+1+i} is Ad^i Bd
    for _ in range(T - 1):
        impulse.append(Ad @ impulse[-1])
    rows = []
    free = []
    xf = x_init
    for k in range(1, T + 1):
        xf = Ad @ xf
        blk = np.zeros((nx, nu * T))
        for j in range(k):
            blk[:, nu * j : nu * (j + 1)] = impulse[k - 1 - j]
        rows.append(blk)
        free.append(xf)
    M = np.vstack(rows)
    f = np.concatenate(free)
    hi = OSCMASS_XMAX - margin
    A_ub = np.vstack([M, -M])
    b_ub = np.concatenate([hi - f, hi + f])
    res = linprog(
        c=np.zeros(nu * T), A_ub=A_ub, b_ub=b_ub,
        bounds=[(-OSCMASS_UMAX + margin, OSCMASS_UMAX - margin)] * (nu * T),
        method="highs",
    )
    return res.status == 0


def gen_oscillating_masses(T: int, seed: int) -> ProblemData:
    """Bring a chain of four spring-coupled masses to rest.

    minimize 0.5 (sum_k x_k'Q x_k + sum_k u_k'R u_k) subject to exact
    discretized dynamics, x_0 = x_init, |x| <= 2, |u| <= 5.

    Clipping x_init inside the state box does not by itself make the
    instance feasible (a large initial velocity can force a bound
    violation before any input can react), so draws are screened with
    an exact LP feasibility check and rejected deterministically.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    nm = OSCMASS_N
    nx = 2 * nm
    nu = nm
    _, _, Ad, Bd = oscmass_system()

    rng = stream("oscmass", T, seed)
    while True:
        x_init = np.clip(
            normal(rng, size=nx), -0.9 * OSCMASS_XMAX, 0.9 * OSCMASS_XMAX
        )
        if _oscmass_feasible(x_init, Ad, Bd, T):
            break
    qd = uniform(rng, 0.0, 10.0, size=nx)
    rd = uniform(rng, 0.0, 10.0, size=nu)

    # layout: x (nx(T+1)) | u (nu T)
    uo = nx * (T + 1)
    n = uo + nu * T

    pdiag = np.concatenate([np.tile(qd, T + 1), np.tile(rd, T)])
    c = np.zeros(n)

    p = nx * T + nx
    At = _Triplets(p, n)
    b_eq = np.zeros(p)
    for k in range(T):
        r = nx * k
        At.add_eye(r, nx * (k + 1), nx)
        At.add_block(r, nx * k, -Ad)
        At.add_block(r, uo + nu * k, -Bd)
    At.add_eye(nx * T, 0, nx)
    b_eq[nx * T :] = x_init

    l = 2 * nx * (T + 1) + 2 * nu * T
    Gt = _Triplets(l, n)
    h = np.zeros(l)
    r = 0
    for j in range(nx * (T + 1)):
        Gt.add(r, j, 1.0)  # x_j <= xmax
        h[r] = OSCMASS_XMAX
        Gt.add(r + 1, j, -1.0)  # -x_j <= xmax
        h[r + 1] = OSCMASS_XMAX
        r += 2
    for j in range(nu * T):
        Gt.add(r, uo + j, 1.0)
        h[r] = OSCMASS_UMAX
        Gt.add(r + 1, uo + j, -1.0)
        h[r + 1] = OSCMASS_UMAX
        r += 2

    return ProblemData(
        n=n, p=p, P=_diag_sym(pdiag), c=c, A=At.mat(), b=b_eq,
        G=Gt.mat(), h=h, cones=ConeSpec(l=l, soc_dims=[]),
    )


def audit_oscillating_masses(prob: ProblemData, sol) -> dict:
    nx = 2 * OSCMASS_N
    nu = OSCMASS_N
    T = (prob.n - nx) // (nx + nu)
    uo = nx * (T + 1)
    x = sol.x[:uo]
    u = sol.x[uo:]
    state = float(np.max(np.abs(x)) - OSCMASS_XMAX)
    inp = float(np.max(np.abs(u)) - OSCMASS_UMAX)
    pd = prob.P.to_dense().diagonal()
    direct = 0.5 * float(sol.x @ (pd * sol.x))
    gap = abs(direct - sol.primal_obj) / max(1.0, abs(direct))
    return {"state_bound": state, "input_bound": inp, "objective_gap": gap}


# ---------------------------------------------------------------------------
# LQR KKT study


LQR_NX = 6
LQR_NU = 3
LQR_EPS = 1e-8


def lqr_problem(T: int, seed: int) -> ProblemData:
    """Equality-constrained LQR as ProblemData (no inequality cones).

    Variables are x_1..x_T and u_1..u_{T-1} with unit state and input
    costs; constraints are the dynamics for k in [1, T-1] plus the
    initial condition x_1 = x_init = 0.
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    nx, nu = LQR_NX, LQR_NU
    rng = stream("lqr", T, seed)
    Ad = normal(rng, size=(nx, nx))
    Bd = normal(rng, size=(nx, nu))

    n = nx * T + nu * (T - 1)
    p = nx * T
    At = _Triplets(p, n)
    for k in range(T - 1):
        r = nx * k
        At.add_block(r, nx * k, Ad)
        At.add_eye(r, nx * (k + 1), nx, -1.0)
        At.add_block(r, nx * T + nu * k, Bd)
    At.add_eye(nx * (T - 1), 0, nx)

    return ProblemData(
        n=n, p=p, P=_diag_sym(np.ones(n)), c=np.zeros(n),
        A=At.mat(), b=np.zeros(p), G=SparseMat.zeros(0, n),
        h=np.zeros(0), cones=ConeSpec(l=0, soc_dims=[]),
    )


def lqr_kkt(T: int, seed: int) -> SparseSym:
    """Quasidefinite KKT matrix [[P, H'], [H, -eps I]] of the LQR problem."""
    prob = lqr_problem(T, seed)
    n, p = prob.n, prob.p
    N = n + p
    Kt = _Triplets(N, N)
    for i in range(n):
        Kt.add(i, i, 1.0)
    H = prob.A
    for j in range(n):
        for idx in range(H.colptr[j], H.colptr[j + 1]):
            Kt.add(j, n + H.rowidx[idx], H.vals[idx])  # upper block H'
    for i in range(p):
        Kt.add(n + i, n + i, -LQR_EPS)
    M = Kt.tocsc()
    return SparseSym(N, N, M.indptr, M.indices, M.data)
