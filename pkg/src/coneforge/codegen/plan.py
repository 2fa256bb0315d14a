"""Generation-time planning: freeze structure, unroll kernels.

plan() assembles the KKT system for the default data exactly the way the
library does (same pattern builder, same fill-reducing ordering, same
symbolic factorization), so every index map frozen into generated source
is identical to what the library resolves at runtime.  The unroll_*
functions then replay the numeric kernels symbolically, recording one IR
statement per scalar operation in the library's operation order; the
emitted code is therefore bitwise-equivalent to the runtime kernels.
"""

from __future__ import annotations

import copy as _copy
from dataclasses import dataclass, field

import numpy as np

from ..cones import identity_scaling, wtw_upper
from ..kkt import KKTSystem, assemble_kkt
from ..problem import ConeSpec, ProblemData, Settings, SparseMat, SparseSym, validate
from .ir import OP_BUDGET_DEFAULT, KernelProgram, chain, ld, loc, mul

_MODULE_DEFAULT = "cfsolver"


@dataclass
class GenSpec:
    """Frozen description of one problem: structure plus default data.

    Patterns and values are stored as plain tuples so two specs with the
    same structure compare equal field-by-field regardless of the array
    types they were built from.
    """

    n: int
    p: int
    l: int
    soc_dims: tuple
    P_colptr: tuple
    P_rowidx: tuple
    P_vals: tuple
    A_colptr: tuple
    A_rowidx: tuple
    A_vals: tuple
    G_colptr: tuple
    G_rowidx: tuple
    G_vals: tuple
    c: tuple
    b: tuple
    h: tuple
    module_name: str = _MODULE_DEFAULT
    out_dir: str = ""
    with_runtest: bool = True
    scalar_type: str = "double"
    op_budget: int = OP_BUDGET_DEFAULT

    @classmethod
    def from_problem(cls, prob: ProblemData, module_name: str = _MODULE_DEFAULT,
                     out_dir: str = "", with_runtest: bool = True,
                     op_budget: int = OP_BUDGET_DEFAULT) -> "GenSpec":
        validate(prob)
        if not module_name.isidentifier():
            raise ValueError(f"module name {module_name!r} is not an identifier")
        return cls(
            n=prob.n, p=prob.p, l=prob.cones.l,
            soc_dims=tuple(int(q) for q in prob.cones.soc_dims),
            P_colptr=tuple(int(v) for v in prob.P.colptr),
            P_rowidx=tuple(int(v) for v in prob.P.rowidx),
            P_vals=tuple(float(v) for v in prob.P.vals),
            A_colptr=tuple(int(v) for v in prob.A.colptr),
            A_rowidx=tuple(int(v) for v in prob.A.rowidx),
            A_vals=tuple(float(v) for v in prob.A.vals),
            G_colptr=tuple(int(v) for v in prob.G.colptr),
            G_rowidx=tuple(int(v) for v in prob.G.rowidx),
            G_vals=tuple(float(v) for v in prob.G.vals),
            c=tuple(float(v) for v in prob.c),
            b=tuple(float(v) for v in prob.b),
            h=tuple(float(v) for v in prob.h),
            module_name=module_name, out_dir=str(out_dir),
            with_runtest=with_runtest, op_budget=op_budget)

    def to_problem(self) -> ProblemData:
        cones = ConeSpec(l=self.l, soc_dims=list(self.soc_dims))
        P = SparseSym(self.n, self.n, np.array(self.P_colptr, dtype=np.int64),
                      np.array(self.P_rowidx, dtype=np.int64),
                      np.array(self.P_vals, dtype=np.float64))
        A = SparseMat(self.p, self.n, np.array(self.A_colptr, dtype=np.int64),
                      np.array(self.A_rowidx, dtype=np.int64),
                      np.array(self.A_vals, dtype=np.float64))
        G = SparseMat(cones.m, self.n, np.array(self.G_colptr, dtype=np.int64),
                      np.array(self.G_rowidx, dtype=np.int64),
                      np.array(self.G_vals, dtype=np.float64))
        return ProblemData(n=self.n, p=self.p, P=P,
                           c=np.array(self.c, dtype=np.float64), A=A,
                           b=np.array(self.b, dtype=np.float64), G=G,
                           h=np.array(self.h, dtype=np.float64), cones=cones)

    def structure_key(self) -> tuple:
        """Everything the emitted kernel source depends on (no values)."""
        return (self.n, self.p, self.l, self.soc_dims,
                self.P_colptr, self.P_rowidx,
                self.A_colptr, self.A_rowidx,
                self.G_colptr, self.G_rowidx,
                self.module_name, self.scalar_type)


@dataclass
class GenPlan:
    """Output of plan(): the assembled system plus all unrolled programs."""

    spec: GenSpec
    settings: Settings
    kkt: KKTSystem
    programs: dict
    identity_wtw: np.ndarray
    ldl_mac_count: int
    total_ops: int = 0

    @property
    def N(self) -> int:
        return self.kkt.N

    @property
    def lnz(self) -> int:
        return int(self.kkt.symb.lnz)


def _csc_rows(nrows, ncols, colptr, rowidx):
    """Per-row gather lists [(nnz index, column)] in column-major order."""
    rows = [[] for _ in range(nrows)]
    for j in range(ncols):
        for k in range(colptr[j], colptr[j + 1]):
            rows[rowidx[k]].append((int(k), int(j)))
    return rows


def unroll_spmv(pattern, transpose: bool = False, *, mode: str = "set",
                name: str = "spmv", data: str = "d", vec: str = "x",
                out: str = "y") -> KernelProgram:
    """Straight-line y = M x (or M' x) for a fixed CSC pattern.

    mode "set" writes each output from scratch with an explicit zero
    store for structurally empty rows; mode "sub" subtracts the products
    from the existing output values (empty rows untouched).  Term order
    per output is column-major, matching the generic scatter kernel, so
    results are bitwise-identical to it.
    """
    nrows, ncols = pattern.nrows, pattern.ncols
    colptr, rowidx = pattern.colptr, pattern.rowidx
    nnz = int(colptr[ncols]) if ncols else 0
    if mode not in ("set", "sub"):
        raise ValueError(f"unknown spmv mode {mode!r}")
    nout = ncols if transpose else nrows
    nin = nrows if transpose else ncols
    prog = KernelProgram(name, arrays={data: max(nnz, 1), vec: max(nin, 1),
                                       out: max(nout, 1)})
    if transpose:
        terms_of = [[(int(k), int(rowidx[k]))
                     for k in range(colptr[j], colptr[j + 1])]
                    for j in range(ncols)]
    else:
        terms_of = _csc_rows(nrows, ncols, colptr, rowidx)
    for r in range(nout):
        terms = [mul(ld(data, k), ld(vec, j)) for (k, j) in terms_of[r]]
        if mode == "set":
            if terms:
                prog.append([("set", out, r, chain(terms[0], "+", terms[1:]))])
            else:
                prog.append([("set", out, r, ("k", 0.0))])
        else:
            if terms:
                prog.append([("set", out, r, chain(ld(out, r), "-", terms))])
    prog.validate()
    return prog


def unroll_spmv_sym(n, colptr, rowidx, *, mode: str = "set",
                    name: str = "symspmv", data: str = "d", vec: str = "x",
                    out: str = "y") -> KernelProgram:
    """Straight-line y = S x (or y -= S x) for upper-triangle-stored S.

    Per output r the term order replays the interleaved column-major
    kernel: the entries of column r in storage order (strict uppers as
    v*x_i, then the diagonal), then the cross terms (r, j) for j > r in
    column order.
    """
    nnz = int(colptr[n]) if n else 0
    if mode not in ("set", "sub"):
        raise ValueError(f"unknown symspmv mode {mode!r}")
    prog = KernelProgram(name, arrays={data: max(nnz, 1), vec: max(n, 1),
                                       out: max(n, 1)})
    cross = [[] for _ in range(n)]
    for j in range(n):
        for k in range(colptr[j], colptr[j + 1]):
            i = int(rowidx[k])
            if i < j:
                cross[i].append((int(k), j))
    for r in range(n):
        terms = [mul(ld(data, int(k)), ld(vec, int(rowidx[k])))
                 for k in range(colptr[r], colptr[r + 1])]
        terms += [mul(ld(data, k), ld(vec, j)) for (k, j) in cross[r]]
        if mode == "set":
            if terms:
                prog.append([("set", out, r, chain(terms[0], "+", terms[1:]))])
            else:
                prog.append([("set", out, r, ("k", 0.0))])
        else:
            if terms:
                prog.append([("set", out, r, chain(ld(out, r), "-", terms))])
    prog.validate()
    return prog


def unroll_ldl(symb, signs, Kp, Ki) -> KernelProgram:
    """Straight-line up-looking LDL' on the symbolic plan.

    Replays the numeric factorization kernel with the index bookkeeping
    (elimination reaches, column cursors) resolved at generation time;
    only the scalar arithmetic and the per-pivot sign branch survive
    into the program.  One group per pivot.
    """
    n = symb.N
    Lp, Li, etree = symb.Lp, symb.Li, symb.etree
    nnz = int(Kp[n]) if n else 0
    lnz = max(int(Lp[n]), 1)
    prog = KernelProgram("ldl_factor",
                         arrays={"Kx": max(nnz, 1), "Lx": lnz, "D": max(n, 1),
                                 "Dinv": max(n, 1), "yw": max(n, 1)})
    marks = [0] * n
    cursor = [int(Lp[i]) for i in range(n)]
    for k in range(n):
        g = []
        lo, hi = int(Kp[k]), int(Kp[k + 1])
        g.append(("set", "D", k, ld("Kx", hi - 1)))
        stack = []
        structural = []
        for ptr in range(lo, hi - 1):
            i = int(Ki[ptr])
            structural.append((i, ptr))
            if marks[i] == 0:
                marks[i] = 1
                path = [i]
                nxt = int(etree[i])
                while nxt != -1 and nxt < k and marks[nxt] == 0:
                    marks[nxt] = 1
                    path.append(nxt)
                    nxt = int(etree[nxt])
                for node in reversed(path):
                    stack.append(node)
        for (i, ptr) in structural:
            g.append(("set", "yw", i, ld("Kx", ptr)))
        struct_rows = {i for (i, _) in structural}
        for node in stack:
            if node not in struct_rows:
                g.append(("set", "yw", node, ("k", 0.0)))
        for t in range(len(stack) - 1, -1, -1):
            cidx = stack[t]
            marks[cidx] = 0
            g.append(("setl", "yv", ld("yw", cidx)))
            tmp = cursor[cidx]
            for j in range(int(Lp[cidx]), tmp):
                g.append(("acc", "yw", int(Li[j]), "-",
                          mul(ld("Lx", j), loc("yv"))))
            g.append(("setl", "lkj", mul(loc("yv"), ld("Dinv", cidx))))
            g.append(("acc", "D", k, "-", mul(loc("yv"), loc("lkj"))))
            assert int(Li[tmp]) == k, "L pattern does not match the reach"
            g.append(("set", "Lx", tmp, loc("lkj")))
            cursor[cidx] = tmp + 1
        g.append(("dynreg", k, 1 if signs[k] > 0 else -1))
        prog.append(g)
    prog.validate()
    return prog


def _unroll_lsolve(symb) -> KernelProgram:
    """x := L^{-1} x with unit lower-triangular L, forward column sweep."""
    n = symb.N
    Lp, Li = symb.Lp, symb.Li
    lnz = max(int(Lp[n]), 1) if n else 1
    prog = KernelProgram("lsolve", arrays={"Lx": lnz, "x": max(n, 1)})
    for j in range(n):
        g = []
        if int(Lp[j]) == int(Lp[j + 1]):
            continue
        g.append(("setl", "xj", ld("x", j)))
        for kk in range(int(Lp[j]), int(Lp[j + 1])):
            g.append(("acc", "x", int(Li[kk]), "-",
                      mul(ld("Lx", kk), loc("xj"))))
        prog.append(g)
    prog.validate()
    return prog


def _unroll_dsolve(n) -> KernelProgram:
    """x := D^{-1} x by the stored reciprocals."""
    prog = KernelProgram("dsolve", arrays={"Dinv": max(n, 1), "x": max(n, 1)})
    for i in range(n):
        prog.append([("set", "x", i, mul(ld("x", i), ld("Dinv", i)))])
    prog.validate()
    return prog


def _unroll_ltsolve(symb) -> KernelProgram:
    """x := L^{-T} x, reverse column sweep, in-column ascending order."""
    n = symb.N
    Lp, Li = symb.Lp, symb.Li
    lnz = max(int(Lp[n]), 1) if n else 1
    prog = KernelProgram("ltsolve", arrays={"Lx": lnz, "x": max(n, 1)})
    for j in range(n - 1, -1, -1):
        g = []
        for kk in range(int(Lp[j]), int(Lp[j + 1])):
            g.append(("acc", "x", j, "-",
                      mul(ld("Lx", kk), ld("x", int(Li[kk])))))
        if g:
            prog.append(g)
    prog.validate()
    return prog


def plan(genspec: GenSpec) -> GenPlan:
    """Assemble the KKT system for the default data and unroll every
    kernel on the solve path.  The plan depends on structure only; the
    default values ride along solely for the emitted data tables."""
    prob = genspec.to_problem()
    settings = Settings()
    kkt = assemble_kkt(prob, settings)
    n, p, m = prob.n, prob.p, prob.m
    symb = kkt.symb

    programs = {
        "symspmv_P": unroll_spmv_sym(n, prob.P.colptr, prob.P.rowidx,
                                     name="symspmv_P", data="Pd"),
        "spmvT_A": unroll_spmv(prob.A, transpose=True, name="spmvT_A",
                               data="Ad"),
        "spmvT_G": unroll_spmv(prob.G, transpose=True, name="spmvT_G",
                               data="Gd"),
        "spmv_A": unroll_spmv(prob.A, name="spmv_A", data="Ad"),
        "spmv_G": unroll_spmv(prob.G, name="spmv_G", data="Gd"),
        "spmv_G_sub": unroll_spmv(prob.G, mode="sub", name="spmv_G_sub",
                                  data="Gd"),
        "symspmv_K_sub": unroll_spmv_sym(kkt.N, kkt.Kp, kkt.Ki, mode="sub",
                                         name="symspmv_K_sub", data="Kx"),
        "ldl_factor": unroll_ldl(symb, kkt.signs, kkt.Kp, kkt.Ki),
        "lsolve": _unroll_lsolve(symb),
        "dsolve": _unroll_dsolve(kkt.N),
        "ltsolve": _unroll_ltsolve(symb),
    }
    mac = programs["ldl_factor"].mac_count()
    total = sum(pr.flop_count() for pr in programs.values())
    return GenPlan(spec=genspec, settings=settings, kkt=kkt,
                   programs=programs,
                   identity_wtw=wtw_upper(identity_scaling(prob.cones)),
                   ldl_mac_count=mac, total_ops=total)
