"""Problem containers, settings, and validation.

The solver works on problems of the form

    minimize   (1/2) x'Px + c'x
    subject to Gx + s = h,  s in K
               Ax = b

where K is a Cartesian product of a nonnegative orthant of dimension l
and second-order cones of dimensions q_1..q_N.  Matrices are CSC with
int64 index arrays and float64 values; P stores only its upper triangle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Base class for problem-data rejections."""


class MalformedCSC(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NegativeConeDim(ValidationError):
    pass


class ParseError(ValueError):
    """Problem file is not syntactically valid JSON."""

    def __init__(self, msg: str, offset: int = -1):
        super().__init__(msg)
        self.offset = offset


class SchemaError(ValueError):
    """Problem file is valid JSON but violates the format schema."""

    def __init__(self, msg: str, key: str = ""):
        super().__init__(msg)
        self.key = key


def _as_f64(v) -> np.ndarray:
    return np.ascontiguousarray(v, dtype=np.float64)


def _as_i64(v) -> np.ndarray:
    return np.ascontiguousarray(v, dtype=np.int64)


@dataclass
class SparseMat:
    """General sparse matrix in compressed sparse column form."""

    nrows: int
    ncols: int
    colptr: np.ndarray
    rowidx: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        self.colptr = _as_i64(self.colptr)
        self.rowidx = _as_i64(self.rowidx)
        self.vals = _as_f64(self.vals)

    @property
    def nnz(self) -> int:
        return len(self.vals)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "SparseMat":
        return cls(nrows, ncols, np.zeros(ncols + 1, dtype=np.int64),
                   np.zeros(0, dtype=np.int64), np.zeros(0))

    @classmethod
    def from_dense(cls, M, drop_tol: float = 0.0) -> "SparseMat":
        M = np.asarray(M, dtype=np.float64)
        nrows, ncols = M.shape
        colptr = [0]
        rowidx, vals = [], []
        for j in range(ncols):
            for i in range(nrows):
                if abs(M[i, j]) > drop_tol:
                    rowidx.append(i)
                    vals.append(M[i, j])
            colptr.append(len(rowidx))
        return cls(nrows, ncols, colptr, rowidx, vals)

    @classmethod
    def from_scipy(cls, M) -> "SparseMat":
        M = M.tocsc()
        M.sum_duplicates()
        M.sort_indices()
        return cls(M.shape[0], M.shape[1], M.indptr, M.indices, M.data)

    def copy(self) -> "SparseMat":
        return type(self)(self.nrows, self.ncols, self.colptr.copy(),
                          self.rowidx.copy(), self.vals.copy())

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.nrows, self.ncols))
        for j in range(self.ncols):
            for k in range(self.colptr[j], self.colptr[j + 1]):
                M[self.rowidx[k], j] = self.vals[k]
        return M


@dataclass
class SparseSym(SparseMat):
    """Symmetric matrix stored as the upper triangle of its CSC form."""

    @classmethod
    def from_dense(cls, M, drop_tol: float = 0.0) -> "SparseSym":
        M = np.asarray(M, dtype=np.float64)
        n = M.shape[0]
        colptr = [0]
        rowidx, vals = [], []
        for j in range(n):
            for i in range(j + 1):
                if abs(M[i, j]) > drop_tol:
                    rowidx.append(i)
                    vals.append(M[i, j])
            colptr.append(len(rowidx))
        return cls(n, n, colptr, rowidx, vals)

    def to_dense(self) -> np.ndarray:
        U = super().to_dense()
        return U + np.triu(U, 1).T


@dataclass
class ConeSpec:
    """Cartesian cone K = R+^l x Q^{q_1} x ... x Q^{q_N}."""

    l: int = 0
    soc_dims: list[int] = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.l + sum(self.soc_dims)

    @property
    def nsoc(self) -> int:
        return len(self.soc_dims)


@dataclass
class ProblemData:
    n: int
    p: int
    P: SparseSym
    c: np.ndarray
    A: SparseMat
    b: np.ndarray
    G: SparseMat
    h: np.ndarray
    cones: ConeSpec

    def __post_init__(self):
        self.c = _as_f64(self.c)
        self.b = _as_f64(self.b)
        self.h = _as_f64(self.h)

    @property
    def m(self) -> int:
        return self.cones.m

    def copy(self) -> "ProblemData":
        return ProblemData(
            n=self.n, p=self.p, P=self.P.copy(), c=self.c.copy(),
            A=self.A.copy(), b=self.b.copy(), G=self.G.copy(),
            h=self.h.copy(),
            cones=ConeSpec(l=self.cones.l,
                           soc_dims=list(self.cones.soc_dims)))


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITERS = "MaxIters"
    NUMERICAL_ERROR = "NumericalError"
    INVALID_DATA = "InvalidData"

    def __str__(self) -> str:
        return self.value


@dataclass
class Settings:
    eps_abs: float = 1e-7
    eps_rel: float = 1e-7
    eps_static: float = 1e-8
    eps_dyn: float = 1e-8
    max_iters: int = 200
    refine_iters: int = 3
    refine_tol: float = 1e-9
    step_fraction: float = 0.99
    verbose: bool = False
    natural_order: bool = False

    def check(self):
        if self.eps_abs < 0 or self.eps_rel < 0 or self.eps_abs + self.eps_rel == 0:
            raise ValueError("tolerances must be nonnegative, not both zero")
        if self.eps_static <= 0 or self.eps_dyn <= 0:
            raise ValueError("regularization epsilons must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be nonnegative")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")


@dataclass
class Solution:
    status: Status
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    z: np.ndarray
    iterations: int
    primal_obj: float
    dual_obj: float
    res_stat: float
    res_feas: float
    gap: float
    setup_time: float
    solve_time: float


def _check_csc(M: SparseMat, nrows: int, ncols: int, name: str, upper: bool = False):
    if M.nrows != nrows or M.ncols != ncols:
        raise DimensionMismatch(
            f"{name}: expected shape ({nrows}, {ncols}), got ({M.nrows}, {M.ncols})")
    if len(M.colptr) != ncols + 1:
        raise MalformedCSC(f"{name}: colptr must have length ncols+1")
    if ncols >= 0 and (len(M.colptr) == 0 or M.colptr[0] != 0):
        raise MalformedCSC(f"{name}: colptr[0] must be 0")
    if M.colptr[-1] != len(M.rowidx) or len(M.rowidx) != len(M.vals):
        raise MalformedCSC(f"{name}: colptr[-1], rowidx, vals lengths disagree")
    for j in range(ncols):
        lo, hi = M.colptr[j], M.colptr[j + 1]
        if hi < lo:
            raise MalformedCSC(f"{name}: colptr must be nondecreasing")
        prev = -1
        for k in range(lo, hi):
            i = M.rowidx[k]
            if i < 0 or i >= nrows:
                raise MalformedCSC(f"{name}: row index {i} out of range in column {j}")
            if i <= prev:
                # catches both unsorted columns and duplicate entries
                raise MalformedCSC(
                    f"{name}: row indices in column {j} must be strictly increasing")
            if upper and i > j:
                raise MalformedCSC(f"{name}: entry ({i}, {j}) below the diagonal")
            prev = i
    if len(M.vals) and not np.all(np.isfinite(M.vals)):
        raise ValidationError(f"{name}: values must be finite")


def validate(prob: ProblemData):
    """Raise a ValidationError subclass if the problem data is inconsistent."""
    if prob.n < 0 or prob.p < 0:
        raise DimensionMismatch("n and p must be nonnegative")
    cones = prob.cones
    if cones.l < 0:
        raise NegativeConeDim(f"orthant dimension {cones.l} is negative")
    for q in cones.soc_dims:
        if q < 1:
            raise NegativeConeDim(f"second-order cone dimension {q} must be positive")
    m = cones.m
    _check_csc(prob.P, prob.n, prob.n, "P", upper=True)
    _check_csc(prob.A, prob.p, prob.n, "A")
    _check_csc(prob.G, m, prob.n, "G")
    for vec, length, name in ((prob.c, prob.n, "c"), (prob.b, prob.p, "b"),
                              (prob.h, m, "h")):
        if len(vec) != length:
            raise DimensionMismatch(f"{name}: expected length {length}, got {len(vec)}")
        if len(vec) and not np.all(np.isfinite(vec)):
            raise ValidationError(f"{name}: values must be finite")
    return prob
