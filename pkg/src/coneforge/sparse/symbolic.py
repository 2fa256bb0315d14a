"""Symbolic analysis for the LDL' factorization.

Works on upper-triangle CSC patterns.  The elimination tree and column
counts come from a single pass over the pattern; the L pattern is then
materialized exactly the way the numeric factorization will fill it
(row-reach per pivot), so columns of L come out sorted for free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ordering import Permutation


@dataclass
class SymbolicFactor:
    perm: Permutation
    etree: np.ndarray      # parent per node, -1 at roots
    Lcolcount: np.ndarray  # strictly-lower nonzeros per column of L
    Lp: np.ndarray         # L pattern, CSC colptr
    Li: np.ndarray         # L pattern, row indices
    N: int

    @property
    def lnz(self) -> int:
        return int(self.Lp[self.N])


def etree_and_counts(n, Kp, Ki):
    """Elimination tree and per-column L counts of an upper CSC pattern."""
    parent = np.full(n, -1, dtype=np.int64)
    flag = np.full(n, -1, dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    for j in range(n):
        flag[j] = j
        for p in range(Kp[j], Kp[j + 1]):
            i = Ki[p]
            if i > j:
                raise ValueError("pattern must be upper triangular")
            while flag[i] != j:
                if parent[i] == -1:
                    parent[i] = j
                counts[i] += 1
                flag[i] = j
                i = parent[i]
    return parent, counts


def _lpattern(n, Kp, Ki, parent, counts):
    Lp = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        Lp[j + 1] = Lp[j] + counts[j]
    Li = np.zeros(max(int(Lp[n]), 1), dtype=np.int64)
    cursor = Lp[:-1].copy()
    stamp = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        stamp[k] = k
        for p in range(Kp[k], Kp[k + 1]):
            i = Ki[p]
            while stamp[i] != k:
                stamp[i] = k
                Li[cursor[i]] = k
                cursor[i] += 1
                i = parent[i]
    return Lp, Li


def symbolic_factor(n, Kp, Ki, perm: Permutation) -> SymbolicFactor:
    """Symbolic analysis of an already-permuted upper-triangle pattern."""
    parent, counts = etree_and_counts(n, Kp, Ki)
    Lp, Li = _lpattern(n, Kp, Ki, parent, counts)
    return SymbolicFactor(perm=perm, etree=parent, Lcolcount=counts,
                          Lp=Lp, Li=Li, N=n)


def permute_symmetric(n, Kp, Ki, perm: Permutation):
    """Symmetric permutation of an upper-triangle pattern.

    Returns (Pp, Pi, slotmap) where slotmap[old_nnz_slot] = new_nnz_slot,
    so refactorization can move values without touching the pattern.
    Output columns are sorted.
    """
    iperm = perm.iperm
    nnz = int(Kp[n])
    cols = [[] for _ in range(n)]
    for j in range(n):
        for k in range(Kp[j], Kp[j + 1]):
            i = Ki[k]
            pi = iperm[i]
            pj = iperm[j]
            if pi > pj:
                pi, pj = pj, pi
            cols[pj].append((int(pi), int(k)))
    Pp = np.zeros(n + 1, dtype=np.int64)
    Pi = np.zeros(nnz, dtype=np.int64)
    slotmap = np.zeros(nnz, dtype=np.int64)
    at = 0
    for j in range(n):
        cols[j].sort()
        for i, old in cols[j]:
            Pi[at] = i
            slotmap[old] = at
            at += 1
        Pp[j + 1] = at
    return Pp, Pi, slotmap
