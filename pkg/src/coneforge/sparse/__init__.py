"""Sparse symmetric linear algebra: ordering, symbolic analysis, LDL'.

Numeric kernels come in two interchangeable lanes with identical
floating-point behavior: a Cython extension (default) and a pure-Python
fallback.  Set CONEFORGE_PURE=1 to force the fallback.
"""

from ._lane import LANE, kernels
from .ldl import FactorizationFailure, LDLFactors, backsolve, numeric_factor, solve_refined
from .ordering import Permutation, amd_order
from .symbolic import (SymbolicFactor, etree_and_counts, permute_symmetric,
                       symbolic_factor)

__all__ = [
    "kernels", "LANE", "Permutation", "amd_order", "SymbolicFactor",
    "etree_and_counts", "permute_symmetric", "symbolic_factor",
    "LDLFactors", "FactorizationFailure", "numeric_factor", "backsolve",
    "solve_refined",
]
