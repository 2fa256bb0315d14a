"""Approximate minimum degree ordering on the quotient graph.

Classic AMD with approximate external degrees, element absorption
(including aggressive absorption), mass elimination, and supervariable
detection through hash buckets.  Differences from the textbook variant:
no dense-row threshold, and pivot ties inside a degree list are broken
by smallest original index, which together with the final assembly-tree
postorder (children visited in index order) makes the output a pure
function of the sparsity pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Permutation:
    perm: np.ndarray   # new-to-old: permuted row i holds original row perm[i]
    iperm: np.ndarray  # old-to-new

    @classmethod
    def from_perm(cls, perm) -> "Permutation":
        perm = np.asarray(perm, dtype=np.int64)
        iperm = np.zeros_like(perm)
        for i in range(len(perm)):
            iperm[perm[i]] = i
        return cls(perm, iperm)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        idx = np.arange(n, dtype=np.int64)
        return cls(idx, idx.copy())


def _full_adjacency(n, Up, Ui):
    """Expand an upper-triangle pattern to full adjacency lists, no diagonal."""
    counts = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        for k in range(Up[j], Up[j + 1]):
            i = Ui[k]
            if i != j:
                counts[i] += 1
                counts[j] += 1
    Cp = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        Cp[j + 1] = Cp[j] + counts[j]
    cnz = int(Cp[n])
    fill = Cp[:-1].copy()
    Ci = np.zeros(max(cnz, 1), dtype=np.int64)
    for j in range(n):
        for k in range(Up[j], Up[j + 1]):
            i = Ui[k]
            if i != j:
                Ci[fill[i]] = j
                fill[i] += 1
                Ci[fill[j]] = i
                fill[j] += 1
    return Cp, Ci, cnz


def _wclear(mark, lemax, w, n):
    if mark < 2 or mark + lemax < 0:
        for k in range(n):
            if w[k] != 0:
                w[k] = 1
        mark = 2
    return mark


def _tdfs(j, k, head, nxt, post, stack):
    """Depth-first postorder of the assembly tree rooted at j."""
    top = 0
    stack[0] = j
    while top >= 0:
        p = stack[top]
        i = head[p]
        if i == -1:
            top -= 1
            post[k] = p
            k += 1
        else:
            head[p] = nxt[i]
            top += 1
            stack[top] = i
    return k


def amd_order(n, Up, Ui) -> np.ndarray:
    """Fill-reducing order for a symmetric matrix given as upper-triangle CSC.

    Returns perm (new-to-old) of length n.
    """
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    Cp0, Ci0, cnz = _full_adjacency(n, Up, Ui)
    # elbow room for element lists built during elimination
    nzmax = cnz + cnz // 5 + 2 * n + 1
    Ci = np.zeros(nzmax, dtype=np.int64)
    Ci[:len(Ci0)] = Ci0
    Cp = np.zeros(n + 1, dtype=np.int64)
    Cp[:] = Cp0

    lenl = np.zeros(n + 1, dtype=np.int64)
    for k in range(n):
        lenl[k] = Cp[k + 1] - Cp[k]
    lenl[n] = 0
    nv = np.ones(n + 1, dtype=np.int64)
    head = np.full(n + 1, -1, dtype=np.int64)
    nxt = np.full(n + 1, -1, dtype=np.int64)
    last = np.full(n + 1, -1, dtype=np.int64)
    hhead = np.full(n + 1, -1, dtype=np.int64)
    elen = np.zeros(n + 1, dtype=np.int64)
    degree = np.zeros(n + 1, dtype=np.int64)
    w = np.ones(n + 1, dtype=np.int64)
    for i in range(n):
        degree[i] = lenl[i]
    mark = _wclear(0, 0, w, n)
    elen[n] = -2   # n is the placeholder root element
    Cp[n] = -1
    w[n] = 0

    nel = 0
    mindeg = 0
    lemax = 0
    for i in range(n):
        d = degree[i]
        if d == 0:
            # isolated node: eliminate immediately as a root element
            elen[i] = -2
            nel += 1
            Cp[i] = -1
            w[i] = 0
        else:
            if head[d] != -1:
                last[head[d]] = i
            nxt[i] = head[d]
            head[d] = i

    while nel < n:
        # select the minimum-degree node, smallest original index on ties
        while mindeg < n and head[mindeg] == -1:
            mindeg += 1
        k = head[mindeg]
        i = nxt[k]
        while i != -1:
            if i < k:
                k = i
            i = nxt[i]
        if last[k] != -1:
            nxt[last[k]] = nxt[k]
        else:
            head[mindeg] = nxt[k]
        if nxt[k] != -1:
            last[nxt[k]] = last[k]

        elenk = elen[k]
        nvk = nv[k]
        nel += nvk

        # garbage-collect element storage when the free tail runs out
        if elenk > 0 and cnz + mindeg >= nzmax:
            for j in range(n):
                p = Cp[j]
                if p >= 0:
                    Cp[j] = Ci[p]
                    Ci[p] = -j - 2   # flag: object header for j
            q = 0
            p = 0
            while p < cnz:
                jf = Ci[p]
                p += 1
                if jf <= -2:
                    j = -jf - 2
                    Ci[q] = Cp[j]
                    Cp[j] = q
                    q += 1
                    for _ in range(lenl[j] - 1):
                        Ci[q] = Ci[p]
                        q += 1
                        p += 1
            cnz = q
            if cnz + mindeg >= nzmax:
                nzmax = 2 * (cnz + mindeg) + n
                grown = np.zeros(nzmax, dtype=np.int64)
                grown[:len(Ci)] = Ci
                Ci = grown

        # build element Lk from node k and its adjacent elements
        dk = 0
        nv[k] = -nvk
        p = Cp[k]
        pk1 = p if elenk == 0 else cnz
        pk2 = pk1
        for k1 in range(1, elenk + 2):
            if k1 > elenk:
                e = k
                pj = p
                ln = lenl[k] - elenk
            else:
                e = Ci[p]
                p += 1
                pj = Cp[e]
                ln = lenl[e]
            for _ in range(ln):
                i = Ci[pj]
                pj += 1
                nvi = nv[i]
                if nvi <= 0:
                    continue
                dk += nvi
                nv[i] = -nvi
                Ci[pk2] = i
                pk2 += 1
                if nxt[i] != -1:
                    last[nxt[i]] = last[i]
                if last[i] != -1:
                    nxt[last[i]] = nxt[i]
                else:
                    head[degree[i]] = nxt[i]
            if e != k:
                Cp[e] = -k - 2   # absorb element e into k
                w[e] = 0
        if elenk != 0:
            cnz = pk2
        degree[k] = dk
        Cp[k] = pk1
        lenl[k] = pk2 - pk1
        elen[k] = -2   # k is now an element

        # scan 1: compute |Le \ Lk| for elements adjacent to nodes of Lk
        mark = _wclear(mark, lemax, w, n)
        for pk in range(pk1, pk2):
            i = Ci[pk]
            eln = elen[i]
            if eln <= 0:
                continue
            nvi = -nv[i]
            wnvi = mark - nvi
            for pe in range(Cp[i], Cp[i] + eln):
                e = Ci[pe]
                if w[e] >= mark:
                    w[e] -= nvi
                elif w[e] != 0:
                    w[e] = degree[e] + wnvi
        # scan 2: approximate degrees, aggressive absorption, mass elimination
        for pk in range(pk1, pk2):
            i = Ci[pk]
            p1 = Cp[i]
            p2 = p1 + elen[i] - 1
            pn = p1
            h = 0
            d = 0
            for pe in range(p1, p2 + 1):
                e = Ci[pe]
                if w[e] != 0:
                    dext = w[e] - mark
                    if dext > 0:
                        d += dext
                        Ci[pn] = e
                        pn += 1
                        h += e
                    else:
                        Cp[e] = -k - 2   # aggressive absorption of e into k
                        w[e] = 0
            elen[i] = pn - p1 + 1
            p3 = pn
            p4 = p1 + lenl[i]
            for pe in range(p2 + 1, p4):
                j = Ci[pe]
                nvj = nv[j]
                if nvj <= 0:
                    continue
                d += nvj
                Ci[pn] = j
                pn += 1
                h += j
            if d == 0:
                # mass elimination: i is dominated by the pivot element
                Cp[i] = -k - 2
                nvi = -nv[i]
                dk -= nvi
                nvk += nvi
                nel += nvi
                nv[i] = 0
                elen[i] = -1
            else:
                if d < degree[i]:
                    degree[i] = d
                Ci[pn] = Ci[p3]
                Ci[p3] = Ci[p1]
                Ci[p1] = k
                lenl[i] = pn - p1 + 1
                h %= n
                nxt[i] = hhead[h]
                hhead[h] = i
                last[i] = h
        degree[k] = dk
        if dk > lemax:
            lemax = dk
        mark = _wclear(mark + lemax, lemax, w, n)

        # supervariable detection within each touched hash bucket
        for pk in range(pk1, pk2):
            i = Ci[pk]
            if nv[i] >= 0:
                continue
            h = last[i]
            i = hhead[h]
            hhead[h] = -1
            while i != -1 and nxt[i] != -1:
                ln = lenl[i]
                eln = elen[i]
                for pe in range(Cp[i] + 1, Cp[i] + ln):
                    w[Ci[pe]] = mark
                jlast = i
                j = nxt[i]
                while j != -1:
                    ok = lenl[j] == ln and elen[j] == eln
                    pe = Cp[j] + 1
                    while ok and pe < Cp[j] + ln:
                        if w[Ci[pe]] != mark:
                            ok = False
                        pe += 1
                    if ok:
                        Cp[j] = -i - 2   # j is identical to i: absorb
                        nv[i] += nv[j]
                        nv[j] = 0
                        elen[j] = -1
                        j = nxt[j]
                        nxt[jlast] = j
                    else:
                        jlast = j
                        j = nxt[j]
                i = nxt[i]
                mark += 1

        # restore the surviving nodes of Lk to the degree lists
        p = pk1
        for pk in range(pk1, pk2):
            i = Ci[pk]
            nvi = -nv[i]
            if nvi <= 0:
                continue
            nv[i] = nvi
            d = degree[i] + dk - nvi
            dcap = n - nel - nvi
            if dcap < d:
                d = dcap
            if head[d] != -1:
                last[head[d]] = i
            nxt[i] = head[d]
            last[i] = -1
            head[d] = i
            if d < mindeg:
                mindeg = d
            degree[i] = d
            Ci[p] = i
            p += 1
        nv[k] = nvk
        lenl[k] = p - pk1
        if lenl[k] == 0:
            Cp[k] = -1
            w[k] = 0
        if elenk != 0:
            cnz = p

    # postorder the assembly tree; children pushed in descending index so
    # each child list pops in ascending index order
    for i in range(n + 1):
        Cp[i] = -Cp[i] - 2 if Cp[i] < -1 else Cp[i]
    for j in range(n + 1):
        head[j] = -1
    for j in range(n, -1, -1):
        if nv[j] > 0:
            continue
        nxt[j] = head[Cp[j]]
        head[Cp[j]] = j
    for e in range(n, -1, -1):
        if nv[e] <= 0:
            continue
        if Cp[e] != -1:
            nxt[e] = head[Cp[e]]
            head[Cp[e]] = e
    post = np.zeros(n + 1, dtype=np.int64)
    stack = np.zeros(n + 1, dtype=np.int64)
    kout = 0
    for i in range(n + 1):
        if Cp[i] == -1:
            kout = _tdfs(i, kout, head, nxt, post, stack)
    perm = np.zeros(n, dtype=np.int64)
    at = 0
    for i in range(n + 1):
        if post[i] != n:
            perm[at] = post[i]
            at += 1
    return perm
