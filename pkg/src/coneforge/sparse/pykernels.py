"""Pure-Python numeric kernels.

This module defines the canonical floating-point operation order for every
kernel on the solve path.  The compiled lane (_ckern.pyx) and the code
generator replay these loops operation for operation, so any edit here is
an ABI break for bitwise-equality tests: keep accumulation sequential and
left-to-right, keep matrix products column-major on the scatter side and
gather-form on the transpose side, and never introduce pairwise or fused
operations.
"""

from __future__ import annotations

import math

LANE = "python"


def spmv_add(colptr, rowidx, vals, x, y, ncols):
    """y += M x for CSC M (column-major scatter)."""
    for j in range(ncols):
        xj = x[j]
        for k in range(colptr[j], colptr[j + 1]):
            y[rowidx[k]] += vals[k] * xj


def spmv_sub(colptr, rowidx, vals, x, y, ncols):
    """y -= M x."""
    for j in range(ncols):
        xj = x[j]
        for k in range(colptr[j], colptr[j + 1]):
            y[rowidx[k]] -= vals[k] * xj


def spmvT_add(colptr, rowidx, vals, x, y, ncols):
    """y += M' x (per-output gather over each column of M)."""
    for j in range(ncols):
        acc = 0.0
        for k in range(colptr[j], colptr[j + 1]):
            acc += vals[k] * x[rowidx[k]]
        y[j] += acc


def spmvT_sub(colptr, rowidx, vals, x, y, ncols):
    """y -= M' x."""
    for j in range(ncols):
        acc = 0.0
        for k in range(colptr[j], colptr[j + 1]):
            acc += vals[k] * x[rowidx[k]]
        y[j] -= acc


def symspmv_add(colptr, rowidx, vals, x, y, n):
    """y += S x where S is symmetric and stored as its upper triangle.

    Each entry (i, j), i < j contributes to both y[i] and y[j], in that
    order, interleaved column-major.
    """
    for j in range(n):
        xj = x[j]
        for k in range(colptr[j], colptr[j + 1]):
            i = rowidx[k]
            v = vals[k]
            y[i] += v * xj
            if i < j:
                y[j] += v * x[i]


def symspmv_sub(colptr, rowidx, vals, x, y, n):
    """y -= S x for upper-triangle-stored symmetric S."""
    for j in range(n):
        xj = x[j]
        for k in range(colptr[j], colptr[j + 1]):
            i = rowidx[k]
            v = vals[k]
            y[i] -= v * xj
            if i < j:
                y[j] -= v * x[i]


def diagmuladd(y, d, x, n):
    """y += d*x elementwise."""
    for i in range(n):
        y[i] += d[i] * x[i]


def diagmulsub(y, d, x, n):
    """y -= d*x elementwise."""
    for i in range(n):
        y[i] -= d[i] * x[i]


def dot(u, v, n):
    acc = 0.0
    for i in range(n):
        acc += u[i] * v[i]
    return acc


def norm_inf(u, n):
    m = 0.0
    for i in range(n):
        a = abs(u[i])
        if a > m:
            m = a
    return m


def axpy(x, d, alpha, n):
    """x += alpha*d."""
    for i in range(n):
        x[i] += alpha * d[i]


def vcopy(dst, src, n):
    for i in range(n):
        dst[i] = src[i]


def gather(dst, src, idx, n):
    """dst[i] = src[idx[i]] (apply a permutation)."""
    for i in range(n):
        dst[i] = src[idx[i]]


def scatter(dst, src, idx, n):
    """dst[idx[i]] = src[i] (apply the inverse permutation)."""
    for i in range(n):
        dst[idx[i]] = src[i]


def factor(n, Kp, Ki, Kx, Lp, Li, Lx, D, Dinv, etree, signs, eps,
           reg, yvals, marks, elim, stack, cursor):
    """Up-looking LDL' of an upper-triangular CSC matrix on a precomputed
    pattern, with per-pivot dynamic regularization.

    Row k of L is the elimination-tree reach of column k's pattern; the
    sparse triangular solve runs in the topological order produced by
    stacking each reach path in reverse.  Every pivot is nudged by eps
    toward its expected sign; a pivot that lands on the wrong side
    (including exactly zero) is replaced by +/-eps and counted.  The
    perturbation actually applied to each pivot is recorded in reg so the
    factored matrix is exactly K + diag(reg).

    Returns the number of wrong-sign pivots.
    """
    for i in range(n):
        yvals[i] = 0.0
        marks[i] = 0
        cursor[i] = Lp[i]
    nreg = 0
    for k in range(n):
        lo = Kp[k]
        hi = Kp[k + 1]
        # the diagonal entry is structurally present and sorted last
        D[k] = Kx[hi - 1]
        nnzY = 0
        for ptr in range(lo, hi - 1):
            i = Ki[ptr]
            yvals[i] = Kx[ptr]
            if marks[i] == 0:
                marks[i] = 1
                ne = 0
                elim[ne] = i
                ne += 1
                nxt = etree[i]
                while nxt != -1 and nxt < k and marks[nxt] == 0:
                    marks[nxt] = 1
                    elim[ne] = nxt
                    ne += 1
                    nxt = etree[nxt]
                while ne > 0:
                    ne -= 1
                    stack[nnzY] = elim[ne]
                    nnzY += 1
        for t in range(nnzY - 1, -1, -1):
            cidx = stack[t]
            yv = yvals[cidx]
            tmp = cursor[cidx]
            for j in range(Lp[cidx], tmp):
                yvals[Li[j]] -= Lx[j] * yv
            lkj = yv * Dinv[cidx]
            D[k] -= yv * lkj
            Lx[tmp] = lkj
            cursor[cidx] = tmp + 1
            yvals[cidx] = 0.0
            marks[cidx] = 0
        d = D[k]
        if signs[k] > 0:
            if d <= 0.0:
                reg[k] = eps - d
                d = eps
                nreg += 1
            else:
                reg[k] = eps
                d = d + eps
        else:
            if d >= 0.0:
                reg[k] = -eps - d
                d = -eps
                nreg += 1
            else:
                reg[k] = -eps
                d = d - eps
        D[k] = d
        Dinv[k] = 1.0 / d
    return nreg


def factor_timed(reps, n, Kp, Ki, Kx, Lp, Li, Lx, D, Dinv, etree, signs, eps,
                 reg, yvals, marks, elim, stack, cursor):
    """Run the factorization reps times; return (total seconds, nreg)."""
    import time

    nreg = 0
    t0 = time.perf_counter()
    for _ in range(reps):
        nreg = factor(n, Kp, Ki, Kx, Lp, Li, Lx, D, Dinv, etree, signs, eps,
                      reg, yvals, marks, elim, stack, cursor)
    t1 = time.perf_counter()
    return (t1 - t0, nreg)


def lsolve(n, Lp, Li, Lx, x):
    """x := L^{-1} x for unit lower-triangular CSC L (diagonal implicit)."""
    for j in range(n):
        xj = x[j]
        for k in range(Lp[j], Lp[j + 1]):
            x[Li[k]] -= Lx[k] * xj


def dsolve(n, Dinv, x):
    """x := D^{-1} x (multiplication by the stored reciprocals)."""
    for i in range(n):
        x[i] *= Dinv[i]


def ltsolve(n, Lp, Li, Lx, x):
    """x := L^{-T} x."""
    for j in range(n - 1, -1, -1):
        for k in range(Lp[j], Lp[j + 1]):
            x[j] -= Lx[k] * x[Li[k]]


def allfinite(u, n):
    """1 if every entry is finite (NaN and +/-inf rejected)."""
    for i in range(n):
        if not math.isfinite(u[i]):
            return 0
    return 1
