"""Render a GenPlan into a standalone Cython source tree.

Layout (fixed names, one role each):

    solver.pyx      driver: interior-point loop, public solve(), debug hooks
    workspace.pxi   statically sized arrays, settings, data tables, update API
    cone.pxi        cone algebra specialized to this cone structure
    kernels.pxi     unrolled LDL/triangular/matvec kernels, KKT updates,
                    refined solve
    utils.pxi       generic scalar helpers (dot, norms, axpy, copy)
    runtest.py      loads default data, solves, prints objective and timing
    setup.py        build manifest (single extension, FMA contraction off)
    manifest.json   structure metadata (dimensions, nnz, op counts)

The solve path touches only static C arrays and scalars: no Python
objects, no heap allocation.  All numeric sequences replay the library
kernels operation for operation.
"""

from __future__ import annotations

import json
import pathlib
import warnings

from .ir import KernelProgram, _float_lit, render_stmt
from .plan import GenPlan

_CHUNK = 1500  # max rendered lines per compiled helper function

_DYNREG_CFG = {"D": "_Dv", "Dinv": "_Dinvv", "eps": "_eps_dyn",
               "counter": "_nreg"}


def _lit(v: float) -> str:
    return _float_lit(float(v))


def _chunk_raw(fname: str, body: list, sig: str = "",
               args: str = "", needs_nreg: bool = False) -> list:
    """Split raw statement lines into chunked nogil helpers plus a driver."""
    lines = []
    chunks = [body[i:i + _CHUNK] for i in range(0, len(body), _CHUNK)]
    if not chunks:
        chunks = [[]]
    names = []
    for ci, part in enumerate(chunks):
        fn = f"{fname}__{ci}" if len(chunks) > 1 else f"{fname}__0"
        names.append(fn)
        lines.append(f"cdef void {fn}({sig}) noexcept nogil:")
        if needs_nreg:
            lines.append("    global _nreg")
        if not part:
            lines.append("    pass")
        for ln in part:
            lines.append("    " + ln)
        lines.append("")
    lines.append(f"cdef void {fname}({sig}) noexcept nogil:")
    for fn in names:
        lines.append(f"    {fn}({args})")
    lines.append("")
    return lines


def _render_program(prog: KernelProgram, cname: str, names: dict,
                    params: tuple) -> list:
    """Render an IR program as chunked nogil functions plus a driver.

    Chunk boundaries fall only between statement groups, so local scalar
    temporaries never cross a function boundary.
    """
    sig = ", ".join(f"double* {p}" for p in params)
    args = ", ".join(params)
    chunks = []
    cur, count = [], 0
    for g in prog.groups:
        cost = sum(10 if st[0] == "dynreg" else 1 for st in g)
        if cur and count + cost > _CHUNK:
            chunks.append(cur)
            cur, count = [], 0
        cur.append(g)
        count += cost
    if cur or not chunks:
        chunks.append(cur)

    lines = []
    fnames = []
    for ci, groups in enumerate(chunks):
        fn = f"{cname}__{ci}"
        fnames.append(fn)
        lines.append(f"cdef void {fn}({sig}) noexcept nogil:")
        locs = []
        has_dynreg = False
        for g in groups:
            for st in g:
                if st[0] == "setl" and st[1] not in locs:
                    locs.append(st[1])
                elif st[0] == "dynreg":
                    has_dynreg = True
        if has_dynreg and "dv" not in locs:
            locs.append("dv")
        if has_dynreg:
            lines.append("    global _nreg")
        if locs:
            lines.append(f"    cdef double {', '.join(locs)}")
        emitted = False
        for g in groups:
            for st in g:
                for ln in render_stmt(st, names, _DYNREG_CFG):
                    lines.append("    " + ln)
                    emitted = True
        if not emitted and not locs:
            lines.append("    pass")
        lines.append("")
    lines.append(f"cdef void {cname}({sig}) noexcept nogil:")
    for fn in fnames:
        lines.append(f"    {fn}({args})")
    lines.append("")
    return lines


def _utils_pxi() -> str:
    return '''# Generic scalar helpers shared by the generated kernels.

cdef double _n_inf(double* u, int n) noexcept nogil:
    cdef double m = 0.0
    cdef double a
    cdef int i
    for i in range(n):
        a = fabs(u[i])
        if a > m:
            m = a
    return m

cdef double _dot(double* u, double* v, int n) noexcept nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(n):
        acc += u[i] * v[i]
    return acc

cdef void _axpy(double* x, double* d, double alpha, int n) noexcept nogil:
    cdef int i
    for i in range(n):
        x[i] += alpha * d[i]

cdef void _vcopy(double* dst, double* src, int n) noexcept nogil:
    cdef int i
    for i in range(n):
        dst[i] = src[i]
'''


def _workspace_pxi(gp: GenPlan) -> str:
    spec = gp.spec
    kkt = gp.kkt
    n, p, m, l = spec.n, spec.p, kkt.m, spec.l
    N = kkt.N
    nsoc = len(spec.soc_dims)
    wbar_total = sum(spec.soc_dims)
    knnz = len(kkt.Kx)
    lnz = gp.lnz
    ntnnz = len(kkt.nt_slots)
    maxtr = 201  # trace capacity: default max_iters + 1

    def arr(name, size):
        return f"cdef double {name}[{max(size, 1)}]"

    L = []
    A = L.append
    A("# Statically sized workspace: arrays, settings, data tables, "
      "update API.")
    A("")
    A("# problem data tables (original nonzero order)")
    A(arr("_Pdata", len(spec.P_vals)))
    A(arr("_Adata", len(spec.A_vals)))
    A(arr("_Gdata", len(spec.G_vals)))
    A(arr("_cdat", n))
    A(arr("_bdat", p))
    A(arr("_hdat", m))
    A("")
    A("# KKT values and factorization storage (permuted order)")
    A(arr("_Kx", knnz))
    A(arr("_Lx", lnz))
    A(arr("_Dv", N))
    A(arr("_Dinvv", N))
    A(arr("_yw", N))
    A("")
    A("# iterate and residual storage")
    A(arr("_vx", n))
    A(arr("_vs", m))
    A(arr("_vy", p))
    A(arr("_vz", m))
    A(arr("_rx", n))
    A(arr("_ry", p))
    A(arr("_rz", m))
    A(arr("_Px", n))
    A(arr("_Aty", n))
    A(arr("_Gtz", n))
    A(arr("_Ax", p))
    A(arr("_Gx", m))
    A("")
    A("# KKT right-hand sides and refinement workspace")
    A(arr("_rhs", N))
    A(arr("_sol", N))
    A(arr("_prhs", N))
    A(arr("_wx", N))
    A(arr("_wr", N))
    A(arr("_wdx", N))
    A(arr("_wxb", N))
    A("")
    A("# search directions (affine, then combined)")
    A(arr("_dxa", n))
    A(arr("_dya", p))
    A(arr("_dza", m))
    A(arr("_dsa", m))
    A(arr("_dx", n))
    A(arr("_dy", p))
    A(arr("_dz", m))
    A(arr("_ds", m))
    A("")
    A("# cone scaling state and temporaries")
    A(arr("_cw", l))
    A(arr("_ceta", nsoc))
    A(arr("_cwbar", wbar_total))
    A(arr("_clam", m))
    A(arr("_wtw", ntnnz))
    A(arr("_lamlam", m))
    A(arr("_cdiv", m))
    A(arr("_wdiv", m))
    A(arr("_cu", m))
    A(arr("_cv2", m))
    A(arr("_cuv", m))
    A(arr("_crs", m))
    A("")
    A("# settings")
    A("cdef double _eps_abs, _eps_rel, _eps_static, _eps_dyn")
    A("cdef double _refine_tol, _step_fraction")
    A("cdef int _max_iters, _refine_iters, _verbose")
    A("")
    A("# solve state")
    A("cdef int _status = -1")
    A("cdef int _iters = 0")
    A("cdef int _nreg = 0")
    A("cdef int _last_ref_passes = 0")
    A("cdef double _last_resid = 0.0")
    A("cdef double _pobj = NAN")
    A("cdef double _dobj = NAN")
    A("cdef double _pres = NAN")
    A("cdef double _dres = NAN")
    A("cdef double _gap = NAN")
    A("cdef double _mu = 0.0")
    A("cdef double _scz = 0.0")
    A("cdef double _solve_time = 0.0")
    A("cdef double _norm_c = 0.0")
    A("cdef double _norm_b = 0.0")
    A("cdef double _norm_h = 0.0")
    A("")
    A("# per-iteration trace")
    for tname in ("_tr_mu", "_tr_pres", "_tr_dres", "_tr_gap", "_tr_sigma",
                  "_tr_rho", "_tr_alpha"):
        A(f"cdef double {tname}[{maxtr}]")
    A(f"cdef int _tr_ref[{maxtr}]")
    A("cdef int _tr_len = 0")
    A("")

    # default data loader, chunked
    ld = []
    for k, v in enumerate(spec.P_vals):
        ld.append(f"_Pdata[{k}] = {_lit(v)}")
    for k, v in enumerate(spec.A_vals):
        ld.append(f"_Adata[{k}] = {_lit(v)}")
    for k, v in enumerate(spec.G_vals):
        ld.append(f"_Gdata[{k}] = {_lit(v)}")
    for k, v in enumerate(spec.c):
        ld.append(f"_cdat[{k}] = {_lit(v)}")
    for k, v in enumerate(spec.b):
        ld.append(f"_bdat[{k}] = {_lit(v)}")
    for k, v in enumerate(spec.h):
        ld.append(f"_hdat[{k}] = {_lit(v)}")
    L.extend(_chunk_raw("_load_defaults", ld))

    st = gp.settings
    A("")
    A("def set_default_settings():")
    A('    """Reset every solver setting to its default value."""')
    A("    global _eps_abs, _eps_rel, _eps_static, _eps_dyn, _refine_tol")
    A("    global _step_fraction, _max_iters, _refine_iters, _verbose")
    A(f"    _eps_abs = {_lit(st.eps_abs)}")
    A(f"    _eps_rel = {_lit(st.eps_rel)}")
    A(f"    _eps_static = {_lit(st.eps_static)}")
    A(f"    _eps_dyn = {_lit(st.eps_dyn)}")
    A(f"    _refine_tol = {_lit(st.refine_tol)}")
    A(f"    _step_fraction = {_lit(st.step_fraction)}")
    A(f"    _max_iters = {st.max_iters}")
    A(f"    _refine_iters = {st.refine_iters}")
    A("    _verbose = 0")
    A("")
    A("def set_setting(name, value):")
    A('    """Adjust one solver setting by name.')
    A("")
    A("    max_iters is capped at the compiled trace capacity of "
      f"{maxtr - 1}.")
    A('    """')
    A("    global _eps_abs, _eps_rel, _eps_static, _eps_dyn, _refine_tol")
    A("    global _step_fraction, _max_iters, _refine_iters, _verbose")
    A('    if name == "eps_abs":')
    A("        _eps_abs = float(value)")
    A('    elif name == "eps_rel":')
    A("        _eps_rel = float(value)")
    A('    elif name == "eps_static":')
    A("        _eps_static = float(value)")
    A('    elif name == "eps_dyn":')
    A("        _eps_dyn = float(value)")
    A('    elif name == "refine_tol":')
    A("        _refine_tol = float(value)")
    A('    elif name == "step_fraction":')
    A("        _step_fraction = float(value)")
    A('    elif name == "max_iters":')
    A("        v = int(value)")
    A(f"        if v < 1 or v > {maxtr - 1}:")
    A(f'            raise ValueError("max_iters must be in [1, {maxtr - 1}] '
      'for this generated solver")')
    A("        _max_iters = v")
    A('    elif name == "refine_iters":')
    A("        v = int(value)")
    A("        if v < 0:")
    A('            raise ValueError("refine_iters must be nonnegative")')
    A("        _refine_iters = v")
    A('    elif name == "verbose":')
    A("        _verbose = 1 if value else 0")
    A("    else:")
    A("        raise KeyError(name)")
    A("")
    A("def get_settings():")
    A('    """Current settings as a dict."""')
    A("    return {")
    A('        "eps_abs": _eps_abs, "eps_rel": _eps_rel,')
    A('        "eps_static": _eps_static, "eps_dyn": _eps_dyn,')
    A('        "refine_tol": _refine_tol, "step_fraction": _step_fraction,')
    A('        "max_iters": _max_iters, "refine_iters": _refine_iters,')
    A('        "verbose": bool(_verbose),')
    A("    }")
    A("")
    A("def load_data():")
    A('    """Load the default problem data and refresh the norm caches."""')
    A("    global _norm_c, _norm_b, _norm_h")
    A("    _load_defaults()")
    A(f"    _norm_c = _n_inf(_cdat, {n})")
    A(f"    _norm_b = _n_inf(_bdat, {p})")
    A(f"    _norm_h = _n_inf(_hdat, {m})")
    A("")

    updates = [
        ("update_P", "_Pdata", len(spec.P_vals), "P values", None),
        ("update_A", "_Adata", len(spec.A_vals), "A values", None),
        ("update_G", "_Gdata", len(spec.G_vals), "G values", None),
        ("update_c", "_cdat", n, "c", "_norm_c"),
        ("update_b", "_bdat", p, "b", "_norm_b"),
        ("update_h", "_hdat", m, "h", "_norm_h"),
    ]
    for fname, tgt, count, what, norm in updates:
        A(f"def {fname}(vals):")
        A(f'    """Replace the values of {what.split()[0]} '
          '(same pattern, original order)."""')
        if norm:
            A(f"    global {norm}")
        A("    cdef int k")
        A("    cdef double v")
        A(f"    if len(vals) != {count}:")
        A(f'        raise ValueError("{what}: expected {count} values")')
        A(f"    for k in range({count}):")
        A("        v = vals[k]")
        A("        if not isfinite(v):")
        A(f'            raise ValueError("{what}: values must be finite")')
        A(f"    for k in range({count}):")
        A(f"        {tgt}[k] = vals[k]")
        if norm:
            A(f"    {norm} = _n_inf({tgt}, {count})")
        A("")

    for gname, src, size in (("get_x", "_vx", n), ("get_s", "_vs", m),
                             ("get_y", "_vy", p), ("get_z", "_vz", m)):
        A(f"def {gname}():")
        A(f"    return [{src}[i] for i in range({size})]")
        A("")
    A("def get_status():")
    A('    """0 Optimal, 1 MaxIters, 2 NumericalError, -1 unsolved."""')
    A("    return _status")
    A("")
    A("def get_status_str():")
    A("    if _status == 0:")
    A('        return "Optimal"')
    A("    if _status == 1:")
    A('        return "MaxIters"')
    A("    if _status == 2:")
    A('        return "NumericalError"')
    A('    return "Unsolved"')
    A("")
    A("def get_iterations():")
    A("    return _iters")
    A("")
    A("def get_objective():")
    A("    return _pobj")
    A("")
    A("def get_dual_objective():")
    A("    return _dobj")
    A("")
    A("def get_residuals():")
    A('    """(primal residual, dual residual, duality gap)."""')
    A("    return (_pres, _dres, _gap)")
    A("")
    A("def get_solve_time():")
    A("    return _solve_time")
    A("")
    A("def get_nreg():")
    A('    """Wrong-sign pivots regularized in the last factorization."""')
    A("    return _nreg")
    A("")
    A("def get_trace():")
    A('    """Per-iteration diagnostics of the last solve."""')
    A("    return [")
    A('        {"iteration": i, "mu": _tr_mu[i], "pres": _tr_pres[i],')
    A('         "dres": _tr_dres[i], "gap": _tr_gap[i],')
    A('         "sigma": _tr_sigma[i], "rho": _tr_rho[i],')
    A('         "alpha": _tr_alpha[i], "refine_passes": _tr_ref[i]}')
    A("        for i in range(_tr_len)")
    A("    ]")
    A("")
    A("def get_dims():")
    A('    """Structure constants frozen into this solver."""')
    soc = ", ".join(str(q) for q in spec.soc_dims)
    A("    return {")
    A(f'        "n": {n}, "p": {p}, "m": {m}, "l": {l},')
    A(f'        "soc_dims": [{soc}],')
    A(f'        "kkt_dim": {N}, "kkt_nnz": {knnz}, "ldl_nnz": {lnz},')
    A(f'        "ldl_mac_count": {gp.ldl_mac_count},')
    A("    }")
    A("")
    return "\n".join(L) + "\n"


def _cone_pxi(gp: GenPlan) -> str:
    spec = gp.spec
    l = spec.l
    blocks = []
    at = l
    wb = 0
    for k, q in enumerate(spec.soc_dims):
        blocks.append((k, at, q, wb))
        at += q
        wb += q
    L = []
    A = L.append
    A("# Cone algebra specialized to an orthant of dimension "
      f"{l} and second-order blocks {list(spec.soc_dims)}.")
    A("")

    # strict membership
    A("cdef int _in_cone_strict(double* u) noexcept nogil:")
    A("    cdef int i")
    A("    cdef double acc, r")
    A(f"    for i in range({l}):")
    A("        if u[i] <= 0.0:")
    A("            return 0")
    for (k, at, q, wb) in blocks:
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += u[i] * u[i]")
        A("    r = sqrt(acc)")
        A(f"    if u[{at}] <= r:")
        A("        return 0")
    A("    return 1")
    A("")

    # shift to interior
    A("cdef void _shift_to_interior(double* u) noexcept nogil:")
    A("    cdef int i")
    A("    cdef double alpha = -INFINITY")
    A("    cdef double acc, r, shift")
    A(f"    for i in range({l}):")
    A("        if -u[i] > alpha:")
    A("            alpha = -u[i]")
    for (k, at, q, wb) in blocks:
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += u[i] * u[i]")
        A("    r = sqrt(acc)")
        A(f"    if r - u[{at}] > alpha:")
        A(f"        alpha = r - u[{at}]")
    A("    if alpha < 0.0:")
    A("        return")
    A("    shift = 1.0 + alpha")
    A(f"    for i in range({l}):")
    A("        u[i] += shift")
    for (k, at, q, wb) in blocks:
        A(f"    u[{at}] += shift")
    A("")

    # NT scaling
    A("cdef int _compute_scaling(double* s, double* z) noexcept nogil:")
    A("    cdef int i")
    A("    cdef double acc, zres2, sres2, zres, sres, dotzs, zsbar, gamma")
    A("    cdef double d, coef")
    A(f"    for i in range({l}):")
    A("        if s[i] <= 0.0 or z[i] <= 0.0:")
    A("            return -1")
    A("        _cw[i] = sqrt(s[i] / z[i])")
    A("        _clam[i] = sqrt(s[i] * z[i])")
    for (k, at, q, wb) in blocks:
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += z[i] * z[i]")
        A(f"    zres2 = z[{at}] * z[{at}] - acc")
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += s[i] * s[i]")
        A(f"    sres2 = s[{at}] * s[{at}] - acc")
        A(f"    if zres2 <= 0.0 or sres2 <= 0.0 or z[{at}] <= 0.0 "
          f"or s[{at}] <= 0.0:")
        A("        return -1")
        A("    zres = sqrt(zres2)")
        A("    sres = sqrt(sres2)")
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += z[i] * s[i]")
        A("    dotzs = acc")
        A(f"    zsbar = (z[{at}] / zres) * (s[{at}] / sres) "
          "+ dotzs / zres / sres")
        A("    gamma = sqrt((1.0 + zsbar) / 2.0)")
        A(f"    _cwbar[{wb}] = (s[{at}] / sres + z[{at}] / zres) "
          "/ (2.0 * gamma)")
        A(f"    for i in range(1, {q}):")
        A(f"        _cwbar[{wb} + i] = (s[{at} + i] / sres "
          f"- z[{at} + i] / zres) / (2.0 * gamma)")
        A(f"    _ceta[{k}] = sqrt(sqrt(sres2 / zres2))")
        A("    d = 0.0")
        A(f"    for i in range(1, {q}):")
        A(f"        d += _cwbar[{wb} + i] * z[{at} + i]")
        A(f"    _clam[{at}] = _ceta[{k}] * (_cwbar[{wb}] * z[{at}] + d)")
        A(f"    coef = z[{at}] + d / (1.0 + _cwbar[{wb}])")
        A(f"    for i in range(1, {q}):")
        A(f"        _clam[{at} + i] = _ceta[{k}] * (z[{at} + i] "
          f"+ coef * _cwbar[{wb} + i])")
    A("    return 0")
    A("")

    # Jordan product
    A("cdef void _cone_product(double* u, double* v, double* out) "
      "noexcept nogil:")
    A("    cdef int i")
    A("    cdef double acc")
    A(f"    for i in range({l}):")
    A("        out[i] = u[i] * v[i]")
    for (k, at, q, wb) in blocks:
        A("    acc = 0.0")
        A(f"    for i in range({at}, {at + q}):")
        A("        acc += u[i] * v[i]")
        A(f"    out[{at}] = acc")
        A(f"    for i in range({at + 1}, {at + q}):")
        A(f"        out[i] = u[{at}] * v[i] + v[{at}] * u[i]")
    A("")

    # Jordan division
    A("cdef int _cone_div(double* u, double* w, double* out) noexcept nogil:")
    A("    cdef int i")
    A("    cdef double acc, u0, d, a, coef")
    A(f"    for i in range({l}):")
    A("        if u[i] <= 0.0:")
    A("            return -1")
    A("        out[i] = w[i] / u[i]")
    for (k, at, q, wb) in blocks:
        A(f"    u0 = u[{at}]")
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += u[i] * w[i]")
        A("    d = acc")
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += u[i] * u[i]")
        A("    a = u0 * u0 - acc")
        A("    if a <= 0.0 or u0 <= 0.0:")
        A("        return -1")
        A(f"    out[{at}] = (u0 * w[{at}] - d) / a")
        A(f"    coef = (-w[{at}] + d / u0) / a")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        out[i] = w[i] / u0 + coef * u[i]")
    A("    return 0")
    A("")

    # scaling application
    A("cdef void _apply_W(double* v, double* out) noexcept nogil:")
    A("    cdef int i")
    A("    cdef double d, coef")
    A(f"    for i in range({l}):")
    A("        out[i] = _cw[i] * v[i]")
    for (k, at, q, wb) in blocks:
        A("    d = 0.0")
        A(f"    for i in range(1, {q}):")
        A(f"        d += _cwbar[{wb} + i] * v[{at} + i]")
        A(f"    out[{at}] = _ceta[{k}] * (_cwbar[{wb}] * v[{at}] + d)")
        A(f"    coef = v[{at}] + d / (1.0 + _cwbar[{wb}])")
        A(f"    for i in range(1, {q}):")
        A(f"        out[{at} + i] = _ceta[{k}] * (v[{at} + i] "
          f"+ coef * _cwbar[{wb} + i])")
    A("")
    A("cdef void _apply_Winv(double* v, double* out) noexcept nogil:")
    A("    cdef int i")
    A("    cdef double d, coef")
    A(f"    for i in range({l}):")
    A("        out[i] = v[i] / _cw[i]")
    for (k, at, q, wb) in blocks:
        A("    d = 0.0")
        A(f"    for i in range(1, {q}):")
        A(f"        d += _cwbar[{wb} + i] * v[{at} + i]")
        A(f"    out[{at}] = (_cwbar[{wb}] * v[{at}] - d) / _ceta[{k}]")
        A(f"    coef = -v[{at}] + d / (1.0 + _cwbar[{wb}])")
        A(f"    for i in range(1, {q}):")
        A(f"        out[{at} + i] = (v[{at} + i] "
          f"+ coef * _cwbar[{wb} + i]) / _ceta[{k}]")
    A("")

    # W'W upper-triangle values in canonical slot order
    A("cdef void _wtw_fill() noexcept nogil:")
    A("    cdef int i, j, idx")
    A("    cdef double e2, t, v")
    A(f"    for i in range({l}):")
    A("        _wtw[i] = _cw[i] * _cw[i]")
    base = l
    for (k, at, q, wb) in blocks:
        A(f"    e2 = _ceta[{k}] * _ceta[{k}]")
        A("    t = 2.0 * e2")
        A(f"    idx = {base}")
        A(f"    for j in range({q}):")
        A("        for i in range(j + 1):")
        A(f"            v = t * _cwbar[{wb} + i] * _cwbar[{wb} + j]")
        A("            if i == j:")
        A("                if i == 0:")
        A("                    v = v - e2")
        A("                else:")
        A("                    v = v + e2")
        A("            _wtw[idx] = v")
        A("            idx += 1")
        base += q * (q + 1) // 2
    A("")

    # largest feasible step
    A("cdef double _max_step(double* u, double* du) noexcept nogil:")
    A("    cdef int i")
    A("    cdef double alpha = INFINITY")
    A("    cdef double step, acc, c2, c1, c0, disc, rdisc, qq")
    A(f"    for i in range({l}):")
    A("        if du[i] < 0.0:")
    A("            step = -u[i] / du[i]")
    A("            if step < alpha:")
    A("                alpha = step")
    for (k, at, q, wb) in blocks:
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += du[i] * du[i]")
        A(f"    c2 = du[{at}] * du[{at}] - acc")
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += u[i] * du[i]")
        A(f"    c1 = 2.0 * (u[{at}] * du[{at}] - acc)")
        A("    acc = 0.0")
        A(f"    for i in range({at + 1}, {at + q}):")
        A("        acc += u[i] * u[i]")
        A(f"    c0 = u[{at}] * u[{at}] - acc")
        A("    disc = c1 * c1 - 4.0 * c2 * c0")
        A("    if disc >= 0.0:")
        A("        rdisc = sqrt(disc)")
        A("        if c1 >= 0.0:")
        A("            qq = -0.5 * (c1 + rdisc)")
        A("        else:")
        A("            qq = -0.5 * (c1 - rdisc)")
        A("        if c2 != 0.0:")
        A("            step = qq / c2")
        A("            if 0.0 < step and step < alpha and "
          f"u[{at}] + step * du[{at}] >= 0.0:")
        A("                alpha = step")
        A("        if qq != 0.0:")
        A("            step = c0 / qq")
        A("            if 0.0 < step and step < alpha and "
          f"u[{at}] + step * du[{at}] >= 0.0:")
        A("                alpha = step")
    A("    return alpha")
    A("")
    A("cdef double _max_step_b(double* u, double* du) noexcept nogil:")
    A("    cdef double step = _max_step(u, du)")
    A("    if step > 1.0:")
    A("        return 1.0")
    A("    return step")
    A("")
    return "\n".join(L) + "\n"


def _kernels_pxi(gp: GenPlan) -> str:
    kkt = gp.kkt
    N = kkt.N
    progs = gp.programs
    L = []
    L.append("# Unrolled numeric kernels: every index below was resolved "
             "at generation time.")
    L.append("")
    L.extend(_render_program(progs["symspmv_P"], "_k_symspmv_P",
                             {"Pd": "_Pdata", "x": "vin", "y": "vout"},
                             ("vin", "vout")))
    L.extend(_render_program(progs["spmvT_A"], "_k_spmvT_A",
                             {"Ad": "_Adata", "x": "vin", "y": "vout"},
                             ("vin", "vout")))
    L.extend(_render_program(progs["spmvT_G"], "_k_spmvT_G",
                             {"Gd": "_Gdata", "x": "vin", "y": "vout"},
                             ("vin", "vout")))
    L.extend(_render_program(progs["spmv_A"], "_k_spmv_A",
                             {"Ad": "_Adata", "x": "vin", "y": "vout"},
                             ("vin", "vout")))
    L.extend(_render_program(progs["spmv_G"], "_k_spmv_G",
                             {"Gd": "_Gdata", "x": "vin", "y": "vout"},
                             ("vin", "vout")))
    L.extend(_render_program(progs["spmv_G_sub"], "_k_spmv_G_sub",
                             {"Gd": "_Gdata", "x": "vin", "y": "vout"},
                             ("vin", "vout")))
    L.extend(_render_program(progs["symspmv_K_sub"], "_k_symspmv_K_sub",
                             {"Kx": "_Kx", "x": "vin", "y": "vout"},
                             ("vin", "vout")))
    L.extend(_render_program(progs["ldl_factor"], "_ldl_factor",
                             {"Kx": "_Kx", "Lx": "_Lx", "D": "_Dv",
                              "Dinv": "_Dinvv", "yw": "_yw"}, ()))
    L.extend(_render_program(progs["lsolve"], "_lsolve", {"Lx": "_Lx",
                                                          "x": "xv"}, ("xv",)))
    L.extend(_render_program(progs["dsolve"], "_dsolve",
                             {"Dinv": "_Dinvv", "x": "xv"}, ("xv",)))
    L.extend(_render_program(progs["ltsolve"], "_ltsolve", {"Lx": "_Lx",
                                                            "x": "xv"},
                             ("xv",)))

    # KKT data scatter: exact write order of the library updater
    kld = [f"_Kx[{int(s)}] = 0.0" for s in kkt.slots_P]
    kld += [f"_Kx[{int(kkt.xdiag[j])}] = _eps_static"
            for j in range(kkt.n)]
    kld += [f"_Kx[{int(s)}] += _Pdata[{k}]"
            for k, s in enumerate(kkt.slots_P)]
    kld += [f"_Kx[{int(kkt.ydiag[r])}] = -_eps_static"
            for r in range(kkt.p)]
    kld += [f"_Kx[{int(s)}] = _Adata[{k}]"
            for k, s in enumerate(kkt.slots_A)]
    kld += [f"_Kx[{int(s)}] = _Gdata[{k}]"
            for k, s in enumerate(kkt.slots_G)]
    L.extend(_chunk_raw("_kkt_load_data", kld))

    # identity NT block (values exact, including signed zeros)
    idw = [f"_Kx[{int(s)}] = {_lit(-v)}"
           for s, v in zip(kkt.nt_slots, gp.identity_wtw)]
    idw += [f"_Kx[{int(kkt.nt_slots[int(d)])}] -= _eps_static"
            for d in kkt.nt_diag_idx]
    L.extend(_chunk_raw("_nt_identity", idw))

    # NT block from the current scaling
    ntw = [f"_Kx[{int(s)}] = -_wtw[{i}]"
           for i, s in enumerate(kkt.nt_slots)]
    ntw += [f"_Kx[{int(kkt.nt_slots[int(d)])}] -= _eps_static"
            for d in kkt.nt_diag_idx]
    L.extend(_chunk_raw("_nt_write", ntw))

    # permutation gathers
    gat = [f"dst[{i}] = src[{int(kkt.perm.perm[i])}]" for i in range(N)]
    L.extend(_chunk_raw("_gather_perm", gat, sig="double* dst, double* src",
                        args="dst, src"))
    igat = [f"dst[{i}] = src[{int(kkt.perm.iperm[i])}]" for i in range(N)]
    L.extend(_chunk_raw("_gather_iperm", igat,
                        sig="double* dst, double* src", args="dst, src"))

    # static regularization fold: r += regvec .* x with regvec = +-eps
    rv = []
    for i in range(N):
        if kkt.signs[i] > 0:
            rv.append(f"r[{i}] += _eps_static * x[{i}]")
        else:
            rv.append(f"r[{i}] += (-_eps_static) * x[{i}]")
    L.extend(_chunk_raw("_regvec_muladd", rv, sig="double* r, double* x",
                        args="r, x"))

    L.append("cdef int _factor() noexcept nogil:")
    L.append("    global _nreg")
    L.append("    cdef int i")
    L.append("    _nreg = 0")
    L.append("    _ldl_factor()")
    L.append(f"    for i in range({N}):")
    L.append("        if not isfinite(_Dv[i]):")
    L.append("            return -1")
    L.append("    return 0")
    L.append("")
    L.append("cdef void _backsolve(double* xv) noexcept nogil:")
    L.append("    _lsolve(xv)")
    L.append("    _dsolve(xv)")
    L.append("    _ltsolve(xv)")
    L.append("")
    L.append("cdef void _solve_refined() noexcept nogil:")
    L.append('    """Solve for the rhs in _prhs; best iterate lands in '
             '_wxb."""')
    L.append("    global _last_ref_passes, _last_resid")
    L.append("    cdef double scale, rn, best")
    L.append("    cdef int passes, it")
    L.append(f"    _vcopy(_wx, _prhs, {N})")
    L.append("    _backsolve(_wx)")
    L.append(f"    scale = 1.0 + _n_inf(_prhs, {N})")
    L.append(f"    _vcopy(_wr, _prhs, {N})")
    L.append("    _k_symspmv_K_sub(_wx, _wr)")
    L.append("    _regvec_muladd(_wr, _wx)")
    L.append(f"    rn = _n_inf(_wr, {N})")
    L.append(f"    _vcopy(_wxb, _wx, {N})")
    L.append("    best = rn")
    L.append("    passes = 0")
    L.append("    if rn > _refine_tol * scale:")
    L.append("        for it in range(_refine_iters):")
    L.append(f"            _vcopy(_wdx, _wr, {N})")
    L.append("            _backsolve(_wdx)")
    L.append(f"            _axpy(_wx, _wdx, 1.0, {N})")
    L.append(f"            _vcopy(_wr, _prhs, {N})")
    L.append("            _k_symspmv_K_sub(_wx, _wr)")
    L.append("            _regvec_muladd(_wr, _wx)")
    L.append(f"            rn = _n_inf(_wr, {N})")
    L.append("            passes += 1")
    L.append("            if rn < best:")
    L.append("                best = rn")
    L.append(f"                _vcopy(_wxb, _wx, {N})")
    L.append("                if rn <= _refine_tol * scale:")
    L.append("                    break")
    L.append("            else:")
    L.append("                break")
    L.append("    _last_ref_passes = passes")
    L.append("    _last_resid = best")
    L.append("")
    L.append("cdef void _kkt_solve(double* rhs, double* out) noexcept nogil:")
    L.append("    _gather_perm(_prhs, rhs)")
    L.append("    _solve_refined()")
    L.append("    _gather_iperm(out, _wxb)")
    L.append("")
    return "\n".join(L) + "\n"


def _driver(gp: GenPlan) -> str:
    spec = gp.spec
    kkt = gp.kkt
    n, p, m, l = spec.n, spec.p, kkt.m, spec.l
    N = kkt.N
    np_ = n + p
    blocks = []
    at = l
    for q in spec.soc_dims:
        blocks.append((at, q))
        at += q
    L = []
    A = L.append

    A("cdef int _initialize() noexcept nogil:")
    A("    cdef int i")
    A("    _kkt_load_data()")
    A("    _nt_identity()")
    A("    if _factor() != 0:")
    A("        return -1")
    A(f"    for i in range({n}):")
    A("        _rhs[i] = -_cdat[i]")
    A(f"    for i in range({p}):")
    A(f"        _rhs[{n} + i] = _bdat[i]")
    A(f"    for i in range({m}):")
    A(f"        _rhs[{np_} + i] = _hdat[i]")
    A("    _kkt_solve(_rhs, _sol)")
    A(f"    for i in range({n}):")
    A("        _vx[i] = _sol[i]")
    A(f"    for i in range({p}):")
    A(f"        _vy[i] = _sol[{n} + i]")
    A(f"    for i in range({m}):")
    A(f"        _vz[i] = _sol[{np_} + i]")
    A(f"        _vs[i] = -_sol[{np_} + i]")
    if m:
        A("    _shift_to_interior(_vs)")
        A("    _shift_to_interior(_vz)")
    A("    return 0")
    A("")

    A("cdef void _compute_residuals() noexcept nogil:")
    A("    global _pobj, _dobj, _scz, _mu")
    A("    cdef int i")
    A("    cdef double xPx")
    A("    _k_symspmv_P(_vx, _Px)")
    A("    _k_spmvT_A(_vy, _Aty)")
    A("    _k_spmvT_G(_vz, _Gtz)")
    A(f"    for i in range({n}):")
    A("        _rx[i] = _Px[i] + _cdat[i] + _Aty[i] + _Gtz[i]")
    A("    _k_spmv_A(_vx, _Ax)")
    A(f"    for i in range({p}):")
    A("        _ry[i] = _Ax[i] - _bdat[i]")
    A("    _k_spmv_G(_vx, _Gx)")
    A(f"    for i in range({m}):")
    A("        _rz[i] = _Gx[i] + _vs[i] - _hdat[i]")
    A(f"    xPx = _dot(_vx, _Px, {n})")
    A(f"    _pobj = 0.5 * xPx + _dot(_cdat, _vx, {n})")
    A(f"    _dobj = -0.5 * xPx - _dot(_bdat, _vy, {p}) "
      f"- _dot(_hdat, _vz, {m})")
    A(f"    _scz = _dot(_vs, _vz, {m})")
    if m:
        A(f"    _mu = _scz / {_lit(float(m))}")
    else:
        A("    _mu = 0.0")
    A("")

    A("cdef int _check_termination() noexcept nogil:")
    A("    global _pres, _dres, _gap")
    A("    cdef double pres, rzn, dres, gap, pscale, dscale, gscale, t")
    A(f"    pres = _n_inf(_ry, {p})")
    A(f"    rzn = _n_inf(_rz, {m})")
    A("    if rzn > pres:")
    A("        pres = rzn")
    A(f"    dres = _n_inf(_rx, {n})")
    A("    gap = fabs(_scz)")
    A("    _pres = pres")
    A("    _dres = dres")
    A("    _gap = gap")
    A(f"    pscale = _n_inf(_Ax, {p})")
    A("    t = _norm_b")
    A("    if t > pscale:")
    A("        pscale = t")
    A(f"    t = _n_inf(_Gx, {m})")
    A("    if t > pscale:")
    A("        pscale = t")
    A("    t = _norm_h")
    A("    if t > pscale:")
    A("        pscale = t")
    A(f"    t = _n_inf(_vs, {m})")
    A("    if t > pscale:")
    A("        pscale = t")
    A(f"    dscale = _n_inf(_Px, {n})")
    A(f"    t = _n_inf(_Aty, {n})")
    A("    if t > dscale:")
    A("        dscale = t")
    A(f"    t = _n_inf(_Gtz, {n})")
    A("    if t > dscale:")
    A("        dscale = t")
    A("    t = _norm_c")
    A("    if t > dscale:")
    A("        dscale = t")
    A("    gscale = 1.0")
    A("    t = fabs(_pobj)")
    A("    if t > gscale:")
    A("        gscale = t")
    A("    t = fabs(_dobj)")
    A("    if t > gscale:")
    A("        gscale = t")
    A("    if (pres <= _eps_abs + _eps_rel * pscale")
    A("            and dres <= _eps_abs + _eps_rel * dscale")
    A("            and gap <= _eps_abs + _eps_rel * gscale):")
    A("        return 1")
    A("    return 0")
    A("")

    A("cdef int _solve_direction(double* rs, double* dx, double* dy, "
      "double* dz, double* ds) noexcept nogil:")
    A("    cdef int i")
    A(f"    for i in range({n}):")
    A("        _rhs[i] = -_rx[i]")
    A(f"    for i in range({p}):")
    A(f"        _rhs[{n} + i] = -_ry[i]")
    if m:
        A("    if _cone_div(_clam, rs, _cdiv) != 0:")
        A("        return -1")
        A("    _apply_W(_cdiv, _wdiv)")
        A(f"    for i in range({m}):")
        A(f"        _rhs[{np_} + i] = -_rz[i] + _wdiv[i]")
    A("    _kkt_solve(_rhs, _sol)")
    A(f"    for i in range({n}):")
    A("        dx[i] = _sol[i]")
    A(f"    for i in range({p}):")
    A(f"        dy[i] = _sol[{n} + i]")
    A(f"    for i in range({m}):")
    A(f"        dz[i] = _sol[{np_} + i]")
    A("        ds[i] = -_rz[i]")
    A("    _k_spmv_G_sub(dx, ds)")
    A("    return 0")
    A("")

    A("cdef int _ipm_run() noexcept nogil:")
    A("    global _status, _iters, _tr_len, _solve_time")
    A("    cdef int it, i, iterations, done")
    A("    cdef double a_aff, az, scz2, num, rho, clip, sigma, sigmu")
    A("    cdef double araw, alpha")
    A("    cdef timespec t0, t1")
    A("    clock_gettime(CLOCK_MONOTONIC, &t0)")
    A("    _status = 1")
    A("    iterations = 0")
    A("    _tr_len = 0")
    A("    if _initialize() != 0:")
    A("        _status = 2")
    A("    else:")
    A("        for it in range(_max_iters + 1):")
    A("            _compute_residuals()")
    A("            done = _check_termination()")
    A("            _tr_mu[it] = _mu")
    A("            _tr_pres[it] = _pres")
    A("            _tr_dres[it] = _dres")
    A("            _tr_gap[it] = _gap")
    A("            _tr_sigma[it] = 0.0")
    A("            _tr_rho[it] = 0.0")
    A("            _tr_alpha[it] = 0.0")
    A("            _tr_ref[it] = 0")
    A("            _tr_len = it + 1")
    A("            if _verbose:")
    A('                printf("iter %3d  mu %9.2e  pres %9.2e  '
      'dres %9.2e  gap %9.2e\\n", it, _mu, _pres, _dres, _gap)')
    A("            if done:")
    A("                _status = 0")
    A("                break")
    A("            if it == _max_iters:")
    A("                _status = 1")
    A("                break")
    if m:
        A("            if _compute_scaling(_vs, _vz) != 0:")
        A("                _status = 2")
        A("                break")
        A("            _wtw_fill()")
        A("            _nt_write()")
    A("            if _factor() != 0:")
    A("                _status = 2")
    A("                break")
    if m:
        A("            _cone_product(_clam, _clam, _lamlam)")
    A("            if _solve_direction(_lamlam, _dxa, _dya, _dza, _dsa) "
      "!= 0:")
    A("                _status = 2")
    A("                break")
    A("            _tr_ref[it] = _last_ref_passes")
    if m:
        A("            a_aff = _max_step_b(_vs, _dsa)")
        A("            az = _max_step_b(_vz, _dza)")
        A("            if az < a_aff:")
        A("                a_aff = az")
        A(f"            scz2 = _dot(_vs, _vz, {m})")
        A("            num = 0.0")
        A(f"            for i in range({m}):")
        A("                num += (_vs[i] + a_aff * _dsa[i]) "
          "* (_vz[i] + a_aff * _dza[i])")
        A("            rho = num / scz2")
        A("            clip = rho")
        A("            if clip < 0.0:")
        A("                clip = 0.0")
        A("            elif clip > 1.0:")
        A("                clip = 1.0")
        A("            sigma = clip * clip * clip")
        A("            _tr_sigma[it] = sigma")
        A("            _tr_rho[it] = rho")
        A("            _cone_product(_clam, _clam, _lamlam)")
        A("            _apply_Winv(_dsa, _cu)")
        A("            _apply_W(_dza, _cv2)")
        A("            _cone_product(_cu, _cv2, _cuv)")
        A("            sigmu = sigma * _mu")
        A(f"            for i in range({l}):")
        A("                _crs[i] = _lamlam[i] + _cuv[i] - sigmu")
        for (bat, q) in blocks:
            A(f"            _crs[{bat}] = _lamlam[{bat}] + _cuv[{bat}] "
              "- sigmu")
            A(f"            for i in range({bat + 1}, {bat + q}):")
            A("                _crs[i] = _lamlam[i] + _cuv[i]")
        A("            if _solve_direction(_crs, _dx, _dy, _dz, _ds) != 0:")
        A("                _status = 2")
        A("                break")
        A("            araw = _max_step(_vs, _ds)")
        A("            az = _max_step(_vz, _dz)")
        A("            if az < araw:")
        A("                araw = az")
        A("            alpha = _step_fraction * araw")
        A("            if alpha > 1.0:")
        A("                alpha = 1.0")
        A("            if alpha < 1e-10:")
        A("                _status = 2")
        A("                break")
        A(f"            _axpy(_vx, _dx, alpha, {n})")
        A(f"            _axpy(_vs, _ds, alpha, {m})")
        A(f"            _axpy(_vy, _dy, alpha, {p})")
        A(f"            _axpy(_vz, _dz, alpha, {m})")
        A("            if not (_in_cone_strict(_vs) and "
          "_in_cone_strict(_vz)):")
        A("                _status = 2")
        A("                break")
    else:
        A("            alpha = 1.0")
        A(f"            _axpy(_vx, _dxa, alpha, {n})")
        A(f"            _axpy(_vs, _dsa, alpha, {m})")
        A(f"            _axpy(_vy, _dya, alpha, {p})")
        A(f"            _axpy(_vz, _dza, alpha, {m})")
    A("            _tr_alpha[it] = alpha")
    A("            iterations += 1")
    A("    _iters = iterations")
    A("    clock_gettime(CLOCK_MONOTONIC, &t1)")
    A("    _solve_time = (t1.tv_sec - t0.tv_sec) "
      "+ (t1.tv_nsec - t0.tv_nsec) * 1e-9")
    A("    return _status")
    A("")

    A("def solve():")
    A('    """Run the interior-point loop on the loaded data.')
    A("")
    A("    Returns None; results are read back through the accessors.")
    A("    The solve path performs no heap allocation.")
    A('    """')
    A("    _ipm_run()")
    A("")
    A("def debug_factor(kxvals):")
    A('    """Testing aid: factor the given KKT values with the unrolled')
    A("    kernel.  Returns (Lx, D, Dinv, nreg, rc); clobbers the KKT")
    A('    value array, which the next solve reloads."""')
    A("    cdef int i")
    knnz = len(kkt.Kx)
    A(f"    if len(kxvals) != {knnz}:")
    A(f'        raise ValueError("expected {knnz} KKT values")')
    A(f"    for i in range({knnz}):")
    A("        _Kx[i] = kxvals[i]")
    A("    rc = _factor()")
    A(f"    return ([_Lx[i] for i in range({max(gp.lnz, 1)})],")
    A(f"            [_Dv[i] for i in range({N})],")
    A(f"            [_Dinvv[i] for i in range({N})], _nreg, rc)")
    A("")
    A("def debug_kkt_values():")
    A('    """Testing aid: KKT values after loading the current data and')
    A('    the identity scaling block (permuted nonzero order)."""')
    A("    _kkt_load_data()")
    A("    _nt_identity()")
    A(f"    return [_Kx[i] for i in range({knnz})]")
    A("")
    A("def bench_factor(kxvals, reps):")
    A('    """Load the given KKT values, run the unrolled factorization')
    A('    reps times, and return the elapsed seconds."""')
    A("    cdef int i")
    A("    cdef int r, nrep")
    A("    cdef timespec t0, t1")
    A(f"    if len(kxvals) != {knnz}:")
    A(f'        raise ValueError("expected {knnz} KKT values")')
    A(f"    for i in range({knnz}):")
    A("        _Kx[i] = kxvals[i]")
    A("    nrep = reps")
    A("    clock_gettime(CLOCK_MONOTONIC, &t0)")
    A("    for r in range(nrep):")
    A("        _factor()")
    A("    clock_gettime(CLOCK_MONOTONIC, &t1)")
    A("    return (t1.tv_sec - t0.tv_sec) + (t1.tv_nsec - t0.tv_nsec) * 1e-9")
    A("")
    A("def bench_solve(reps):")
    A('    """Run solve() reps times and return the elapsed seconds."""')
    A("    cdef int r, nrep")
    A("    cdef timespec t0, t1")
    A("    nrep = reps")
    A("    clock_gettime(CLOCK_MONOTONIC, &t0)")
    A("    for r in range(nrep):")
    A("        _ipm_run()")
    A("    clock_gettime(CLOCK_MONOTONIC, &t1)")
    A("    return (t1.tv_sec - t0.tv_sec) + (t1.tv_nsec - t0.tv_nsec) * 1e-9")
    A("")
    A("")
    A("set_default_settings()")
    A("load_data()")
    return "\n".join(L) + "\n"


def _solver_pyx(gp: GenPlan) -> str:
    spec = gp.spec
    head = f'''# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Specialized conic solver generated for a fixed problem structure.

Module {spec.module_name}: n={spec.n}, p={spec.p}, m={gp.kkt.m} \
(orthant {spec.l}, second-order {list(spec.soc_dims)}).
All array sizes and sparsity indices are compile-time constants; solve()
allocates nothing.  Generated code; do not edit by hand.
"""

from libc.math cimport INFINITY, NAN, fabs, isfinite, sqrt
from libc.stdio cimport printf
from posix.time cimport CLOCK_MONOTONIC, clock_gettime, timespec

include "utils.pxi"
include "workspace.pxi"
include "cone.pxi"
include "kernels.pxi"

'''
    return head + _driver(gp)


def _runtest_py(gp: GenPlan) -> str:
    name = gp.spec.module_name
    return f'''"""Run the generated solver {name} on its default data."""

import argparse
import importlib.util
import pathlib
import sys


def _load():
    here = pathlib.Path(__file__).resolve().parent
    hits = sorted(here.glob("{name}.*.so")) + sorted(here.glob("{name}.so"))
    if not hits:
        sys.exit("extension not built; run: python setup.py build_ext "
                 "--inplace")
    spec = importlib.util.spec_from_file_location("{name}", hits[0])
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main():
    ap = argparse.ArgumentParser(
        description="solve the embedded problem with default data")
    ap.add_argument("--verbose", action="store_true",
                    help="print per-iteration progress")
    args = ap.parse_args()
    solver = _load()
    solver.set_default_settings()
    if args.verbose:
        solver.set_setting("verbose", True)
    solver.load_data()
    solver.solve()
    print(f"status      {{solver.get_status_str()}}")
    print(f"iterations  {{solver.get_iterations()}}")
    print(f"objective   {{solver.get_objective():.9e}}")
    print(f"solve time  {{solver.get_solve_time() * 1e3:.3f}} ms")
    sys.exit(0 if solver.get_status() == 0 else 1)


if __name__ == "__main__":
    main()
'''


def _setup_py(gp: GenPlan) -> str:
    name = gp.spec.module_name
    return f'''"""Build manifest for the generated solver {name}."""

from Cython.Build import cythonize
from setuptools import Extension, setup

# FMA contraction must stay off: the solver is bitwise-compatible with
# the library kernels only under plain multiply-then-add rounding.
extra = ["-O2", "-ffp-contract=off"]

setup(
    name="{name}",
    ext_modules=cythonize(
        [Extension("{name}", ["solver.pyx"], extra_compile_args=extra)],
        language_level=3,
    ),
)
'''


def _manifest_json(gp: GenPlan) -> str:
    spec = gp.spec
    files = ["solver.pyx", "workspace.pxi", "cone.pxi", "kernels.pxi",
             "utils.pxi", "setup.py", "manifest.json"]
    if spec.with_runtest:
        files.insert(5, "runtest.py")
    data = {
        "module": spec.module_name,
        "n": spec.n,
        "p": spec.p,
        "m": gp.kkt.m,
        "l": spec.l,
        "soc_dims": list(spec.soc_dims),
        "kkt_dim": gp.N,
        "kkt_nnz": len(gp.kkt.Kx),
        "ldl_nnz": gp.lnz,
        "ldl_mac_count": gp.ldl_mac_count,
        "total_scalar_ops": gp.total_ops,
        "op_budget": spec.op_budget,
        "scalar_type": spec.scalar_type,
        "files": files,
        "build": "python setup.py build_ext --inplace",
        "run": "python runtest.py" if spec.with_runtest else None,
    }
    return json.dumps(data, indent=2) + "\n"


def emit(genplan: GenPlan, out_dir=None) -> list:
    """Write the generated source tree; returns the written paths.

    Warns when the total scalar-operation count exceeds the plan's
    budget, since source size and compile time grow with the pattern.
    """
    spec = genplan.spec
    if spec.scalar_type != "double":
        raise ValueError(f"unsupported scalar type {spec.scalar_type!r}")
    if out_dir is None:
        out_dir = getattr(spec, "out_dir", None)
    if not out_dir:
        raise ValueError("no output directory given")
    if genplan.total_ops > spec.op_budget:
        warnings.warn(
            f"unrolled kernels contain {genplan.total_ops} scalar ops, "
            f"above the budget of {spec.op_budget}; expect large source "
            "files and slow compilation", stacklevel=2)
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tree = {
        "utils.pxi": _utils_pxi(),
        "workspace.pxi": _workspace_pxi(genplan),
        "cone.pxi": _cone_pxi(genplan),
        "kernels.pxi": _kernels_pxi(genplan),
        "solver.pyx": _solver_pyx(genplan),
        "setup.py": _setup_py(genplan),
        "manifest.json": _manifest_json(genplan),
    }
    if spec.with_runtest:
        tree["runtest.py"] = _runtest_py(genplan)
    paths = []
    for fname, text in tree.items():
        path = out / fname
        path.write_text(text)
        paths.append(path)
    return paths
