"""Generation of standalone specialized solvers for a fixed problem structure.

Given one problem instance, this package plans and emits a self-contained
Cython source tree whose solver works on statically sized arrays, performs
no heap allocation inside solve(), and replays the library's numeric
kernels operation for operation so results match the library bitwise.
"""

from .ir import KernelProgram, OP_BUDGET_DEFAULT
from .plan import GenPlan, GenSpec, plan, unroll_ldl, unroll_spmv, unroll_spmv_sym
from .emit import emit
from .runtime import build_solver, generate_solver, load_solver

__all__ = [
    "KernelProgram",
    "OP_BUDGET_DEFAULT",
    "GenPlan",
    "GenSpec",
    "plan",
    "unroll_ldl",
    "unroll_spmv",
    "unroll_spmv_sym",
    "emit",
    "build_solver",
    "generate_solver",
    "load_solver",
]
