"""coneforge: a quadratic-objective second-order cone solver, a generator
for allocation-free specialized solvers, and a benchmark harness."""

from .problem import (ConeSpec, DimensionMismatch, MalformedCSC,
                      NegativeConeDim, ParseError, ProblemData, SchemaError,
                      Settings, Solution, SparseMat, SparseSym, Status,
                      ValidationError, validate)
from .ipm import Workspace, solve
from .qsf import dump_problem, parse_problem, read_problem, write_problem
from .sparse import LANE

__version__ = "0.1.0"

__all__ = [
    "ConeSpec", "SparseMat", "SparseSym", "ProblemData", "Settings",
    "Solution", "Status", "validate", "ValidationError", "MalformedCSC",
    "DimensionMismatch", "NegativeConeDim", "ParseError", "SchemaError",
    "parse_problem", "read_problem", "dump_problem", "write_problem",
    "solve", "Workspace", "LANE", "__version__",
]
