"""Numeric LDL' factorization and refined solves on a fixed symbolic plan."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._lane import kernels
from .symbolic import SymbolicFactor


class FactorizationFailure(ArithmeticError):
    """Numeric factorization produced a non-finite pivot."""


@dataclass
class LDLFactors:
    symb: SymbolicFactor
    Lx: np.ndarray
    D: np.ndarray
    Dinv: np.ndarray
    reg: np.ndarray      # dynamic perturbation applied to each pivot
    signs: np.ndarray    # expected pivot signs, permuted order, +/-1.0
    nreg: int = 0
    # factorization scratch, reused across refactorizations
    _yvals: np.ndarray = field(default=None, repr=False)
    _marks: np.ndarray = field(default=None, repr=False)
    _elim: np.ndarray = field(default=None, repr=False)
    _stack: np.ndarray = field(default=None, repr=False)
    _cursor: np.ndarray = field(default=None, repr=False)

    @classmethod
    def allocate(cls, symb: SymbolicFactor, signs) -> "LDLFactors":
        n = symb.N
        lnz = max(symb.lnz, 1)
        return cls(
            symb=symb,
            Lx=np.zeros(lnz),
            D=np.zeros(n),
            Dinv=np.zeros(n),
            reg=np.zeros(n),
            signs=np.ascontiguousarray(signs, dtype=np.float64),
            _yvals=np.zeros(n),
            _marks=np.zeros(n, dtype=np.int64),
            _elim=np.zeros(n, dtype=np.int64),
            _stack=np.zeros(n, dtype=np.int64),
            _cursor=np.zeros(n, dtype=np.int64),
        )


def numeric_factor(Kp, Ki, Kx, symb: SymbolicFactor, signs, eps_dyn: float,
                   out: LDLFactors | None = None) -> LDLFactors:
    """Factor the permuted upper-triangle CSC matrix given by its values Kx.

    Every pivot is dynamically regularized toward its expected sign; the
    exact perturbations land in out.reg, so L D L' equals the input matrix
    plus diag(out.reg).
    """
    f = out if out is not None else LDLFactors.allocate(symb, signs)
    n = symb.N
    # the kernel reads each pivot from the last slot of its column, so
    # every column must be nonempty and end with its diagonal entry
    Kp = np.asarray(Kp)
    Ki = np.asarray(Ki)
    if n and (not np.all(Kp[1:] > Kp[:-1])
              or not np.array_equal(Ki[Kp[1:] - 1], np.arange(n))):
        raise ValueError("matrix must have a structural entry on every "
                         "diagonal, stored last in its column")
    f.nreg = int(kernels.factor(
        n, Kp, Ki, Kx, symb.Lp, symb.Li, f.Lx, f.D, f.Dinv, symb.etree,
        f.signs, eps_dyn, f.reg, f._yvals, f._marks, f._elim, f._stack,
        f._cursor))
    if not kernels.allfinite(f.D, n):
        raise FactorizationFailure("non-finite pivot in LDL factorization")
    return f


def backsolve(f: LDLFactors, x) -> None:
    """In-place solve of L D L' x_new = x on the permuted system."""
    n = f.symb.N
    kernels.lsolve(n, f.symb.Lp, f.symb.Li, f.Lx, x)
    kernels.dsolve(n, f.Dinv, x)
    kernels.ltsolve(n, f.symb.Lp, f.symb.Li, f.Lx, x)


def solve_refined(f: LDLFactors, Kp, Ki, Kx, regvec, rhs, refine_iters: int,
                  refine_tol: float, work=None):
    """Solve K xi = rhs through the factorization of Khat = K + diag(regvec).

    Iterative refinement measures the residual against the unregularized K
    (applied as Khat minus the static diagonal), runs at most refine_iters
    correction passes, stops early once the residual is small relative to
    the right-hand side, and keeps the best iterate if a pass fails to
    improve.

    Returns (x, residual_norm, passes).
    """
    n = f.symb.N
    if work is None:
        work = (np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))
    x, r, dx, xbest = work
    kernels.vcopy(x, rhs, n)
    backsolve(f, x)
    scale = 1.0 + kernels.norm_inf(rhs, n)
    kernels.vcopy(r, rhs, n)
    kernels.symspmv_sub(Kp, Ki, Kx, x, r, n)
    kernels.diagmuladd(r, regvec, x, n)
    rn = kernels.norm_inf(r, n)
    kernels.vcopy(xbest, x, n)
    best = rn
    passes = 0
    if rn > refine_tol * scale:
        for _ in range(refine_iters):
            kernels.vcopy(dx, r, n)
            backsolve(f, dx)
            kernels.axpy(x, dx, 1.0, n)
            kernels.vcopy(r, rhs, n)
            kernels.symspmv_sub(Kp, Ki, Kx, x, r, n)
            kernels.diagmuladd(r, regvec, x, n)
            rn = kernels.norm_inf(r, n)
            passes += 1
            if rn < best:
                best = rn
                kernels.vcopy(xbest, x, n)
                if rn <= refine_tol * scale:
                    break
            else:
                break
    return xbest, best, passes
