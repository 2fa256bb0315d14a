"""Primal-dual interior-point solver with Mehrotra predictor-corrector steps.

The iterate-path arithmetic (residuals, right-hand sides, step updates)
runs through the shared scalar kernels in a fixed operation order; a
generated specialized solver replays the same sequences, so changes here
are semantic changes to both.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import cones as cn
from .kkt import (assemble_kkt, kkt_solve, refactor, update_kkt_data,
                  update_kkt_nt)
from .problem import ProblemData, Settings, Solution, Status, validate
from .sparse import FactorizationFailure
from .sparse._lane import kernels

STALL_STEP = 1e-10


class LineSearchStall(ArithmeticError):
    """Step size collapsed below the breakdown threshold."""


@dataclass
class Direction:
    """Search direction in all four variable blocks."""

    dx: np.ndarray
    ds: np.ndarray
    dy: np.ndarray
    dz: np.ndarray


@dataclass
class IterRecord:
    """Per-iteration diagnostics of a solve."""

    iteration: int
    mu: float
    pres: float
    dres: float
    gap: float
    sigma: float = 0.0
    rho: float = 0.0
    alpha: float = 0.0
    refine_passes: int = 0


class Workspace:
    """Owns the assembled KKT system and iterate storage for one problem.

    Supports repeated solves where only the numeric values of P, A, G,
    c, b, h change (update_* methods); the symbolic analysis, ordering,
    and slot maps are reused.
    """

    def __init__(self, prob: ProblemData, settings: Settings | None = None):
        self.settings = settings if settings is not None else Settings()
        self.settings.check()
        validate(prob)
        # private copy: update_* methods must never mutate caller arrays
        self.prob = prob.copy()
        t0 = time.perf_counter()
        self.kkt = assemble_kkt(self.prob, self.settings)
        self.setup_time = time.perf_counter() - t0
        n, p, m = prob.n, prob.p, prob.m
        N = n + p + m
        self.x = np.zeros(n)
        self.s = np.zeros(m)
        self.y = np.zeros(p)
        self.z = np.zeros(m)
        self._rx = np.zeros(n)
        self._ry = np.zeros(p)
        self._rz = np.zeros(m)
        self._Px = np.zeros(n)
        self._Aty = np.zeros(n)
        self._Gtz = np.zeros(n)
        self._Ax = np.zeros(p)
        self._Gx = np.zeros(m)
        self._rhs = np.zeros(N)
        self._sol = np.zeros(N)
        self._dxa = np.zeros(n)
        self._dya = np.zeros(p)
        self._dza = np.zeros(m)
        self._dsa = np.zeros(m)
        self._dx = np.zeros(n)
        self._dy = np.zeros(p)
        self._dz = np.zeros(m)
        self._ds = np.zeros(m)
        self.mu = 0.0
        self.scz = 0.0
        self.pobj = float("nan")
        self.dobj = float("nan")
        self.pres = float("nan")
        self.dres = float("nan")
        self.gap = float("nan")
        self._norm_c = kernels.norm_inf(self.prob.c, n)
        self._norm_b = kernels.norm_inf(self.prob.b, p)
        self._norm_h = kernels.norm_inf(self.prob.h, m)
        self.trace: list[IterRecord] = []
        self._data_dirty = False
        self._solved = False

    def _check_len(self, vals, want, what):
        vals = np.ascontiguousarray(vals, dtype=np.float64)
        if vals.shape != (want,):
            raise ValueError(f"{what}: expected {want} values, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{what}: values must be finite")
        return vals

    def update_P(self, vals):
        """Replace the nonzero values of P (same sparsity pattern)."""
        self.prob.P.vals[:] = self._check_len(vals, self.prob.P.nnz, "P values")
        self._data_dirty = True

    def update_A(self, vals):
        self.prob.A.vals[:] = self._check_len(vals, self.prob.A.nnz, "A values")
        self._data_dirty = True

    def update_G(self, vals):
        self.prob.G.vals[:] = self._check_len(vals, self.prob.G.nnz, "G values")
        self._data_dirty = True

    def update_c(self, vals):
        self.prob.c[:] = self._check_len(vals, self.prob.n, "c")
        self._norm_c = kernels.norm_inf(self.prob.c, self.prob.n)

    def update_b(self, vals):
        self.prob.b[:] = self._check_len(vals, self.prob.p, "b")
        self._norm_b = kernels.norm_inf(self.prob.b, self.prob.p)

    def update_h(self, vals):
        self.prob.h[:] = self._check_len(vals, self.prob.m, "h")
        self._norm_h = kernels.norm_inf(self.prob.h, self.prob.m)

    def solve(self) -> Solution:
        return _run(self)


def initialize(work: Workspace) -> None:
    """Starting point: Newton solve of the KKT conditions with the
    complementarity row replaced by s + z = 0, then shift s and z onto
    the cone interior along the identity element."""
    prob, st, kkt = work.prob, work.settings, work.kkt
    n, p, m = prob.n, prob.p, prob.m
    rhs, sol = work._rhs, work._sol
    if work._data_dirty or work._solved:
        update_kkt_data(kkt, prob)
        work._data_dirty = False
    if work._solved:
        update_kkt_nt(kkt, cn.identity_scaling(prob.cones))
    work._solved = True
    refactor(kkt, st.eps_dyn)
    c, b, h = prob.c, prob.b, prob.h
    for i in range(n):
        rhs[i] = -c[i]
    for i in range(p):
        rhs[n + i] = b[i]
    for i in range(m):
        rhs[n + p + i] = h[i]
    kkt_solve(kkt, rhs, sol, st.refine_iters, st.refine_tol)
    x, s, y, z = work.x, work.s, work.y, work.z
    for i in range(n):
        x[i] = sol[i]
    for i in range(p):
        y[i] = sol[n + i]
    for i in range(m):
        z[i] = sol[n + p + i]
        s[i] = -sol[n + p + i]
    cn.shift_to_interior(s, prob.cones)
    cn.shift_to_interior(z, prob.cones)


def compute_residuals(work: Workspace) -> None:
    """KKT residuals, duality measure, and both objective values at the
    current iterate; also refreshes the norm terms the relative stopping
    scales need."""
    prob = work.prob
    n, p, m = prob.n, prob.p, prob.m
    x, s, y, z = work.x, work.s, work.y, work.z
    rx, ry, rz = work._rx, work._ry, work._rz
    Px, Aty, Gtz = work._Px, work._Aty, work._Gtz
    Ax, Gx = work._Ax, work._Gx
    Pm, Am, Gm = prob.P, prob.A, prob.G
    c, b, h = prob.c, prob.b, prob.h
    for i in range(n):
        Px[i] = 0.0
    kernels.symspmv_add(Pm.colptr, Pm.rowidx, Pm.vals, x, Px, n)
    for i in range(n):
        Aty[i] = 0.0
    kernels.spmvT_add(Am.colptr, Am.rowidx, Am.vals, y, Aty, n)
    for i in range(n):
        Gtz[i] = 0.0
    kernels.spmvT_add(Gm.colptr, Gm.rowidx, Gm.vals, z, Gtz, n)
    for i in range(n):
        rx[i] = Px[i] + c[i] + Aty[i] + Gtz[i]
    for i in range(p):
        Ax[i] = 0.0
    kernels.spmv_add(Am.colptr, Am.rowidx, Am.vals, x, Ax, n)
    for i in range(p):
        ry[i] = Ax[i] - b[i]
    for i in range(m):
        Gx[i] = 0.0
    kernels.spmv_add(Gm.colptr, Gm.rowidx, Gm.vals, x, Gx, n)
    for i in range(m):
        rz[i] = Gx[i] + s[i] - h[i]
    xPx = kernels.dot(x, Px, n)
    work.pobj = 0.5 * xPx + kernels.dot(c, x, n)
    work.dobj = -0.5 * xPx - kernels.dot(b, y, p) - kernels.dot(h, z, m)
    work.scz = kernels.dot(s, z, m)
    work.mu = work.scz / m if m else 0.0


def check_termination(work: Workspace) -> bool:
    """Evaluate the three stopping inequalities (primal feasibility,
    dual feasibility, duality gap), each with an absolute floor plus a
    relative term scaled by the largest participating quantity."""
    st = work.settings
    prob = work.prob
    n, p, m = prob.n, prob.p, prob.m
    pres = kernels.norm_inf(work._ry, p)
    rzn = kernels.norm_inf(work._rz, m)
    if rzn > pres:
        pres = rzn
    dres = kernels.norm_inf(work._rx, n)
    gap = abs(work.scz)
    work.pres, work.dres, work.gap = pres, dres, gap
    pscale = max(kernels.norm_inf(work._Ax, p), work._norm_b,
                 kernels.norm_inf(work._Gx, m), work._norm_h,
                 kernels.norm_inf(work.s, m))
    dscale = max(kernels.norm_inf(work._Px, n),
                 kernels.norm_inf(work._Aty, n),
                 kernels.norm_inf(work._Gtz, n), work._norm_c)
    gscale = max(1.0, abs(work.pobj), abs(work.dobj))
    return (pres <= st.eps_abs + st.eps_rel * pscale
            and dres <= st.eps_abs + st.eps_rel * dscale
            and gap <= st.eps_abs + st.eps_rel * gscale)


def _direction_rhs_xy(work: Workspace) -> None:
    n, p = work.prob.n, work.prob.p
    rhs, rx, ry = work._rhs, work._rx, work._ry
    for i in range(n):
        rhs[i] = -rx[i]
    for i in range(p):
        rhs[n + i] = -ry[i]


def _solve_direction(work: Workspace, rs, sc, dx, dy, dz, ds) -> None:
    """Shared predictor/corrector path: fold the complementarity residual
    rs into the inequality rows, solve the reduced system, recover ds."""
    prob, st, kkt = work.prob, work.settings, work.kkt
    n, p, m = prob.n, prob.p, prob.m
    cones = prob.cones
    rhs, sol, rz = work._rhs, work._sol, work._rz
    Gm = prob.G
    if m:
        wdiv = cn.apply_W(sc, cn.cone_div(sc.lam, rs, cones))
        for i in range(m):
            rhs[n + p + i] = -rz[i] + wdiv[i]
    kkt_solve(kkt, rhs, sol, st.refine_iters, st.refine_tol)
    for i in range(n):
        dx[i] = sol[i]
    for i in range(p):
        dy[i] = sol[n + i]
    for i in range(m):
        dz[i] = sol[n + p + i]
        ds[i] = -rz[i]
    kernels.spmv_sub(Gm.colptr, Gm.rowidx, Gm.vals, dx, ds, n)


def predictor_direction(work: Workspace, sc) -> Direction:
    """Affine scaling direction: pure Newton step on the KKT conditions
    with complementarity residual lam o lam."""
    cones = work.prob.cones
    _direction_rhs_xy(work)
    if work.prob.m:
        lamlam = cn.cone_product(sc.lam, sc.lam, cones)
    else:
        lamlam = np.zeros(0)
    _solve_direction(work, lamlam, sc, work._dxa, work._dya, work._dza,
                     work._dsa)
    return Direction(dx=work._dxa, ds=work._dsa, dy=work._dya, dz=work._dza)


def centering_parameter(s, z, dsa, dza, cones) -> tuple[float, float, float]:
    """Centering weight from the affine direction: sigma is the cubed
    clamp of the gap ratio after the largest feasible affine step."""
    m = cones.m
    a_aff = cn.max_step_to_boundary(s, dsa, cones)
    az = cn.max_step_to_boundary(z, dza, cones)
    if az < a_aff:
        a_aff = az
    scz = kernels.dot(s, z, m)
    num = 0.0
    for i in range(m):
        num += (s[i] + a_aff * dsa[i]) * (z[i] + a_aff * dza[i])
    rho = num / scz
    clip = rho
    if clip < 0.0:
        clip = 0.0
    elif clip > 1.0:
        clip = 1.0
    sigma = clip * clip * clip
    return sigma, rho, a_aff


def combined_direction(work: Workspace, sc, affine: Direction, sigma: float,
                       mu: float) -> Direction:
    """Centered direction with second-order correction: complementarity
    residual lam o lam + (Winv ds_a) o (W dz_a) - sigma mu e."""
    cones = work.prob.cones
    lam = sc.lam
    lamlam = cn.cone_product(lam, lam, cones)
    u = cn.apply_Winv(sc, affine.ds)
    v = cn.apply_W(sc, affine.dz)
    uv = cn.cone_product(u, v, cones)
    sigmu = sigma * mu
    rs = lamlam.copy()
    for i in range(cones.l):
        rs[i] = lamlam[i] + uv[i] - sigmu
    at = cones.l
    for q in cones.soc_dims:
        rs[at] = lamlam[at] + uv[at] - sigmu
        for i in range(at + 1, at + q):
            rs[i] = lamlam[i] + uv[i]
        at += q
    _direction_rhs_xy(work)
    _solve_direction(work, rs, sc, work._dx, work._dy, work._dz, work._ds)
    return Direction(dx=work._dx, ds=work._ds, dy=work._dy, dz=work._dz)


def take_step(work: Workspace, d: Direction) -> float:
    """Step a safe fraction toward the cone boundary, full step when the
    boundary is far; all four blocks move by the same length."""
    prob, st = work.prob, work.settings
    cones = prob.cones
    n, p, m = prob.n, prob.p, prob.m
    if m:
        araw = cn.max_step(work.s, d.ds, cones)
        az = cn.max_step(work.z, d.dz, cones)
        if az < araw:
            araw = az
        alpha = st.step_fraction * araw
        if alpha > 1.0:
            alpha = 1.0
        if alpha < STALL_STEP:
            raise LineSearchStall(f"step size {alpha:.3e}")
    else:
        alpha = 1.0
    kernels.axpy(work.x, d.dx, alpha, n)
    kernels.axpy(work.s, d.ds, alpha, m)
    kernels.axpy(work.y, d.dy, alpha, p)
    kernels.axpy(work.z, d.dz, alpha, m)
    if m and not (cn.in_cone(work.s, cones, strict=True)
                  and cn.in_cone(work.z, cones, strict=True)):
        raise LineSearchStall("step left the cone interior")
    return alpha


def _run(work: Workspace) -> Solution:
    st = work.settings
    prob = work.prob
    m = prob.m
    work.trace = []
    status = Status.MAX_ITERS
    iterations = 0
    t0 = time.perf_counter()
    try:
        initialize(work)
        for it in range(st.max_iters + 1):
            compute_residuals(work)
            done = check_termination(work)
            rec = IterRecord(iteration=it, mu=work.mu, pres=work.pres,
                             dres=work.dres, gap=work.gap)
            work.trace.append(rec)
            if st.verbose:
                print(f"iter {it:3d}  mu {work.mu:9.2e}  pres "
                      f"{work.pres:9.2e}  dres {work.dres:9.2e}  gap "
                      f"{work.gap:9.2e}")
            if done:
                status = Status.OPTIMAL
                break
            if it == st.max_iters:
                status = Status.MAX_ITERS
                break

            if m:
                sc = cn.compute_scaling(work.s, work.z, prob.cones)
                update_kkt_nt(work.kkt, sc)
            else:
                sc = None
            refactor(work.kkt, st.eps_dyn)

            affine = predictor_direction(work, sc)
            rec.refine_passes = work.kkt.last_refine_passes
            if m:
                sigma, rho, _ = centering_parameter(
                    work.s, work.z, affine.ds, affine.dz, prob.cones)
                rec.sigma = sigma
                rec.rho = rho
                d = combined_direction(work, sc, affine, sigma, work.mu)
            else:
                d = affine
            rec.alpha = take_step(work, d)
            iterations += 1
    except (cn.ScalingFailure, cn.SingularJordan, FactorizationFailure,
            LineSearchStall):
        status = Status.NUMERICAL_ERROR

    solve_time = time.perf_counter() - t0
    return Solution(
        status=status, x=work.x.copy(), s=work.s.copy(), y=work.y.copy(),
        z=work.z.copy(), iterations=iterations, primal_obj=work.pobj,
        dual_obj=work.dobj, res_stat=work.dres, res_feas=work.pres,
        gap=work.gap, setup_time=work.setup_time, solve_time=solve_time)


def solve(prob: ProblemData, settings: Settings | None = None) -> Solution:
    """Validate, assemble, and solve; malformed data yields a Solution
    with status InvalidData rather than an exception."""
    try:
        work = Workspace(prob, settings)
    except (ValueError, TypeError):
        n = getattr(prob, "n", 0) or 0
        p = getattr(prob, "p", 0) or 0
        try:
            m = prob.m
        except Exception:
            m = 0
        nan = float("nan")
        return Solution(
            status=Status.INVALID_DATA, x=np.zeros(n), s=np.zeros(m),
            y=np.zeros(p), z=np.zeros(m), iterations=0, primal_obj=nan,
            dual_obj=nan, res_stat=nan, res_feas=nan, gap=nan,
            setup_time=0.0, solve_time=0.0)
    return work.solve()
