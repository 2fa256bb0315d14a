"""Assembly and maintenance of the regularized KKT system.

The matrix has the block structure

    [ P + eps*I      A'          G'      ]
    [ A             -eps*I       0       ]
    [ G              0          -W'W - eps*I ]

stored as an upper-triangle CSC pattern of dimension N = n + p + m.  The
pattern is built once; value updates go through precomputed slot maps so
refactorization never re-examines structure.  Slot maps are composed with
the fill-reducing permutation up front, which lets every update write
directly into the permuted value array.  The code generator reuses
build_kkt_pattern with the same permutation to freeze identical maps into
emitted source.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cones as cn
from .problem import ConeSpec, ProblemData, Settings
from .sparse import (LDLFactors, Permutation, amd_order, numeric_factor,
                     permute_symmetric, solve_refined, symbolic_factor)
from .sparse._lane import kernels


def build_kkt_pattern(n, p, Pp, Pi, Ap, Ai, Gp, Gi, cones: ConeSpec):
    """Upper-triangle pattern of the KKT matrix plus natural slot maps.

    Returns a dict with the CSC pattern (colptr, rowidx) and, for each
    data source, the array mapping its nnz index to a KKT nnz index:
    P entries, A entries, G entries, the n forced x-diagonal slots, the
    p equality diagonal slots, the NT slots in canonical cone order
    (orthant diagonals, then each second-order block's upper triangle
    column-major), and the canonical NT indices that sit on the diagonal.
    """
    m = cones.m
    N = n + p + m
    cols = [[] for _ in range(N)]  # per column: (row, tag, index)

    # x columns: strict upper part of P, then the forced diagonal
    pnnz = int(Pp[n]) if n else 0
    pdiag_slot_of_col = [-1] * n
    for j in range(n):
        for k in range(Pp[j], Pp[j + 1]):
            i = int(Pi[k])
            if i == j:
                pdiag_slot_of_col[j] = int(k)
            else:
                cols[j].append((i, "P", int(k)))
        cols[j].append((j, "xd", j))

    # y columns: row r of A lands in column n + r
    for jcol in range(n):
        for k in range(Ap[jcol], Ap[jcol + 1]):
            r = int(Ai[k])
            cols[n + r].append((jcol, "A", int(k)))
    for r in range(p):
        cols[n + r].append((n + r, "yd", r))

    # z columns: row r of G lands in column n + p + r, then NT blocks
    for jcol in range(n):
        for k in range(Gp[jcol], Gp[jcol + 1]):
            r = int(Gi[k])
            cols[n + p + r].append((jcol, "G", int(k)))
    base = n + p
    nt_idx = 0
    nt_total = cn.nt_slot_count(cones)
    nt_diag_idx = []
    for i in range(cones.l):
        cols[base + i].append((base + i, "nt", nt_idx))
        nt_diag_idx.append(nt_idx)
        nt_idx += 1
    at = cones.l
    for q in cones.soc_dims:
        for j in range(q):
            for i in range(j + 1):
                cols[base + at + j].append((base + at + i, "nt", nt_idx))
                if i == j:
                    nt_diag_idx.append(nt_idx)
                nt_idx += 1
        at += q
    assert nt_idx == nt_total

    colptr = np.zeros(N + 1, dtype=np.int64)
    rowidx = []
    slots_P = np.zeros(max(pnnz, 0), dtype=np.int64)
    slots_A = np.zeros(int(Ap[n]) if n else 0, dtype=np.int64)
    slots_G = np.zeros(int(Gp[n]) if n else 0, dtype=np.int64)
    xdiag = np.zeros(n, dtype=np.int64)
    ydiag = np.zeros(p, dtype=np.int64)
    nt_slots = np.zeros(nt_total, dtype=np.int64)
    slot = 0
    for j in range(N):
        cols[j].sort(key=lambda e: e[0])
        prev = -1
        for (i, tag, k) in cols[j]:
            assert i > prev, "duplicate row in KKT column"
            prev = i
            rowidx.append(i)
            if tag == "P":
                slots_P[k] = slot
            elif tag == "A":
                slots_A[k] = slot
            elif tag == "G":
                slots_G[k] = slot
            elif tag == "xd":
                xdiag[k] = slot
                if pdiag_slot_of_col[k] >= 0:
                    slots_P[pdiag_slot_of_col[k]] = slot
            elif tag == "yd":
                ydiag[k] = slot
            else:
                nt_slots[k] = slot
            slot += 1
        colptr[j + 1] = slot
    return {
        "N": N,
        "colptr": colptr,
        "rowidx": np.array(rowidx, dtype=np.int64),
        "slots_P": slots_P,
        "slots_A": slots_A,
        "slots_G": slots_G,
        "xdiag": xdiag,
        "ydiag": ydiag,
        "nt_slots": nt_slots,
        "nt_diag_idx": np.array(nt_diag_idx, dtype=np.int64),
    }


@dataclass
class KKTSystem:
    n: int
    p: int
    m: int
    N: int
    cones: ConeSpec
    eps_static: float
    perm: Permutation
    symb: object
    Kp: np.ndarray
    Ki: np.ndarray
    Kx: np.ndarray
    regvec: np.ndarray       # static regularization, permuted row order
    signs: np.ndarray        # expected pivot signs, permuted row order
    slots_P: np.ndarray
    slots_A: np.ndarray
    slots_G: np.ndarray
    xdiag: np.ndarray
    ydiag: np.ndarray
    nt_slots: np.ndarray
    nt_diag_idx: np.ndarray
    factors: LDLFactors
    _rhs: np.ndarray = field(repr=False, default=None)
    _sol: np.ndarray = field(repr=False, default=None)
    _work: tuple = field(repr=False, default=None)
    last_refine_passes: int = 0
    last_residual: float = 0.0


def assemble_kkt(prob: ProblemData, settings: Settings) -> KKTSystem:
    """Build the KKT pattern, ordering, symbolic plan, and workspaces.

    Values are loaded for the data blocks, and the NT region is set to
    the identity scaling, ready for the initialization solve.
    """
    n, p, m = prob.n, prob.p, prob.m
    cones = prob.cones
    pat = build_kkt_pattern(n, p, prob.P.colptr, prob.P.rowidx,
                            prob.A.colptr, prob.A.rowidx,
                            prob.G.colptr, prob.G.rowidx, cones)
    N = pat["N"]
    if settings.natural_order:
        order = np.arange(N, dtype=np.int64)
    else:
        order = amd_order(N, pat["colptr"], pat["rowidx"])
    perm = Permutation.from_perm(order)
    Kp, Ki, slotmap = permute_symmetric(N, pat["colptr"], pat["rowidx"], perm)
    symb = symbolic_factor(N, Kp, Ki, perm)
    signs = np.where(order < n, 1.0, -1.0)
    regvec = np.where(order < n, settings.eps_static, -settings.eps_static)
    kkt = KKTSystem(
        n=n, p=p, m=m, N=N, cones=cones, eps_static=settings.eps_static,
        perm=perm, symb=symb, Kp=Kp, Ki=Ki, Kx=np.zeros(len(Ki)),
        regvec=regvec, signs=signs,
        slots_P=slotmap[pat["slots_P"]] if len(pat["slots_P"]) else pat["slots_P"],
        slots_A=slotmap[pat["slots_A"]] if len(pat["slots_A"]) else pat["slots_A"],
        slots_G=slotmap[pat["slots_G"]] if len(pat["slots_G"]) else pat["slots_G"],
        xdiag=slotmap[pat["xdiag"]] if n else pat["xdiag"],
        ydiag=slotmap[pat["ydiag"]] if p else pat["ydiag"],
        nt_slots=slotmap[pat["nt_slots"]] if len(pat["nt_slots"]) else pat["nt_slots"],
        nt_diag_idx=pat["nt_diag_idx"],
        factors=LDLFactors.allocate(symb, signs),
        _rhs=np.zeros(N), _sol=np.zeros(N),
        _work=(np.zeros(N), np.zeros(N), np.zeros(N), np.zeros(N)),
    )
    update_kkt_data(kkt, prob)
    update_kkt_nt(kkt, cn.identity_scaling(cones))
    return kkt


def update_kkt_data(kkt: KKTSystem, prob: ProblemData) -> None:
    """Write P, A, G values and the static data-block regularization.

    Order matters only on the x diagonal, where the static epsilon and a
    structural P entry share a slot: the epsilon is written first and the
    P value added, so the slot holds Pjj + eps by commutative addition.
    """
    Kx = kkt.Kx
    eps = kkt.eps_static
    pv = prob.P.vals
    for k in range(len(kkt.slots_P)):
        Kx[kkt.slots_P[k]] = 0.0
    for j in range(kkt.n):
        Kx[kkt.xdiag[j]] = eps
    for k in range(len(kkt.slots_P)):
        Kx[kkt.slots_P[k]] += pv[k]
    for r in range(kkt.p):
        Kx[kkt.ydiag[r]] = -eps
    av = prob.A.vals
    for k in range(len(kkt.slots_A)):
        Kx[kkt.slots_A[k]] = av[k]
    gv = prob.G.vals
    for k in range(len(kkt.slots_G)):
        Kx[kkt.slots_G[k]] = gv[k]


def update_kkt_nt(kkt: KKTSystem, scaling: cn.NTScaling) -> None:
    """Write -(W'W) - eps*I into the NT region, all other slots untouched."""
    vals = cn.wtw_upper(scaling)
    Kx = kkt.Kx
    for idx in range(len(kkt.nt_slots)):
        Kx[kkt.nt_slots[idx]] = -vals[idx]
    eps = kkt.eps_static
    for idx in kkt.nt_diag_idx:
        Kx[kkt.nt_slots[idx]] -= eps


def refactor(kkt: KKTSystem, eps_dyn: float) -> None:
    numeric_factor(kkt.Kp, kkt.Ki, kkt.Kx, kkt.symb, kkt.signs, eps_dyn,
                   out=kkt.factors)


def kkt_solve(kkt: KKTSystem, rhs, out, refine_iters: int,
              refine_tol: float) -> None:
    """Solve the current KKT system for a natural-order rhs, refined.

    Writes the natural-order solution into out; records the refinement
    pass count and final residual norm for diagnostics.
    """
    N = kkt.N
    kernels.gather(kkt._rhs, rhs, kkt.perm.perm, N)
    xp, rn, passes = solve_refined(
        kkt.factors, kkt.Kp, kkt.Ki, kkt.Kx, kkt.regvec, kkt._rhs,
        refine_iters, refine_tol, work=kkt._work)
    kkt.last_refine_passes = passes
    kkt.last_residual = rn
    kernels.gather(out, xp, kkt.perm.iperm, N)


def apply_unregularized(prob: ProblemData, scaling: cn.NTScaling, v):
    """Multiply the unregularized KKT operator by a natural-order vector.

    Test and diagnostic helper: computes [P A' G'; A 0 0; G 0 -W'W] v
    with the same kernels the solver uses, no regularization terms.
    """
    n, p, m = prob.n, prob.p, prob.m
    out = np.zeros(n + p + m)
    x = v[:n].copy()
    y = v[n:n + p].copy()
    z = v[n + p:].copy()
    rx = np.zeros(n)
    kernels.symspmv_add(prob.P.colptr, prob.P.rowidx, prob.P.vals, x, rx, n)
    kernels.spmvT_add(prob.A.colptr, prob.A.rowidx, prob.A.vals, y, rx, n)
    kernels.spmvT_add(prob.G.colptr, prob.G.rowidx, prob.G.vals, z, rx, n)
    ry = np.zeros(p)
    kernels.spmv_add(prob.A.colptr, prob.A.rowidx, prob.A.vals, x, ry, n)
    rz = np.zeros(m)
    kernels.spmv_add(prob.G.colptr, prob.G.rowidx, prob.G.vals, x, rz, n)
    wwz = cn.apply_W(scaling, cn.apply_W(scaling, z))
    for i in range(m):
        rz[i] -= wwz[i]
    out[:n] = rx
    out[n:n + p] = ry
    out[n + p:] = rz
    return out
