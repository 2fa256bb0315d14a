"""Cone algebra for the product of an orthant and second-order cones.

Every routine here sits on the iterate path of the solver, so the
floating-point operation order is part of the contract: generated solvers
replay these exact sequences in C and must match bitwise.  That is why
the code sticks to explicit index loops and scalar temporaries instead of
vectorized numpy calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import ConeSpec

INF = float("inf")


class SingularJordan(ArithmeticError):
    """Jordan division by a point that is not strictly interior."""


class ScalingFailure(ArithmeticError):
    """NT scaling requested at a point that has left the cone."""


def _dot(u, v, lo: int, hi: int) -> float:
    acc = 0.0
    for i in range(lo, hi):
        acc += u[i] * v[i]
    return acc


def cone_identity(cones: ConeSpec) -> np.ndarray:
    """Identity element e of the Jordan algebra on K."""
    e = np.zeros(cones.m)
    for i in range(cones.l):
        e[i] = 1.0
    at = cones.l
    for q in cones.soc_dims:
        e[at] = 1.0
        at += q
    return e


def cone_product(u, v, cones: ConeSpec) -> np.ndarray:
    """Jordan product u o v."""
    out = np.zeros(cones.m)
    for i in range(cones.l):
        out[i] = u[i] * v[i]
    at = cones.l
    for q in cones.soc_dims:
        out[at] = _dot(u, v, at, at + q)
        for i in range(at + 1, at + q):
            out[i] = u[at] * v[i] + v[at] * u[i]
        at += q
    return out


def cone_div(u, w, cones: ConeSpec) -> np.ndarray:
    """Solve u o x = w for x, i.e. x = Arw(u)^{-1} w.

    Raises SingularJordan if u is not strictly interior (nonpositive
    orthant entry or nonpositive second-order determinant).
    """
    out = np.zeros(cones.m)
    for i in range(cones.l):
        if u[i] <= 0.0:
            raise SingularJordan("nonpositive orthant entry")
        out[i] = w[i] / u[i]
    at = cones.l
    for q in cones.soc_dims:
        u0 = u[at]
        d = _dot(u, w, at + 1, at + q)
        a = u0 * u0 - _dot(u, u, at + 1, at + q)
        if a <= 0.0 or u0 <= 0.0:
            raise SingularJordan("second-order block not interior")
        out[at] = (u0 * w[at] - d) / a
        coef = (-w[at] + d / u0) / a
        for i in range(at + 1, at + q):
            out[i] = w[i] / u0 + coef * u[i]
        at += q
    return out


def in_cone(u, cones: ConeSpec, strict: bool = False) -> bool:
    """Membership of u in K (strict: interior)."""
    for i in range(cones.l):
        if (u[i] <= 0.0) if strict else (u[i] < 0.0):
            return False
    at = cones.l
    for q in cones.soc_dims:
        r = math.sqrt(_dot(u, u, at + 1, at + q))
        if (u[at] <= r) if strict else (u[at] < r):
            return False
        at += q
    return True


def min_shift_to_cone(u, cones: ConeSpec) -> float:
    """Smallest alpha with u + alpha*e on the boundary of K.

    -min(u_i) for the orthant, ||u_1|| - u_0 for a second-order cone;
    negative when u is already interior.
    """
    alpha = -INF
    for i in range(cones.l):
        if -u[i] > alpha:
            alpha = -u[i]
    at = cones.l
    for q in cones.soc_dims:
        r = math.sqrt(_dot(u, u, at + 1, at + q))
        if r - u[at] > alpha:
            alpha = r - u[at]
        at += q
    return alpha


def shift_to_interior(u, cones: ConeSpec):
    """Shift u to u + (1 + alpha) e when u is not interior to K.

    Returns the (possibly untouched) vector and the shift applied.
    """
    alpha = min_shift_to_cone(u, cones)
    if alpha < 0.0:
        return u, 0.0
    shift = 1.0 + alpha
    for i in range(cones.l):
        u[i] += shift
    at = cones.l
    for q in cones.soc_dims:
        u[at] += shift
        at += q
    return u, shift


def max_step(u, du, cones: ConeSpec) -> float:
    """Largest alpha >= 0 with u + alpha*du in K, for u interior to K.

    Returns inf when the ray never leaves the cone.  Each second-order
    block solves (u0+a*d0)^2 - ||u1+a*d1||^2 = 0 for its smallest
    positive root with the cancellation-free quadratic formula, keeping
    only crossings on the u0+a*d0 >= 0 sheet.
    """
    alpha = INF
    for i in range(cones.l):
        if du[i] < 0.0:
            step = -u[i] / du[i]
            if step < alpha:
                alpha = step
    at = cones.l
    for q in cones.soc_dims:
        c2 = du[at] * du[at] - _dot(du, du, at + 1, at + q)
        c1 = 2.0 * (u[at] * du[at] - _dot(u, du, at + 1, at + q))
        c0 = u[at] * u[at] - _dot(u, u, at + 1, at + q)
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc >= 0.0:
            rdisc = math.sqrt(disc)
            if c1 >= 0.0:
                qq = -0.5 * (c1 + rdisc)
            else:
                qq = -0.5 * (c1 - rdisc)
            if c2 != 0.0:
                step = qq / c2
                if 0.0 < step < alpha and u[at] + step * du[at] >= 0.0:
                    alpha = step
            if qq != 0.0:
                step = c0 / qq
                if 0.0 < step < alpha and u[at] + step * du[at] >= 0.0:
                    alpha = step
        at += q
    return alpha


def max_step_to_boundary(u, du, cones: ConeSpec) -> float:
    """max_step capped to [0, 1]: sup{a in [0,1] | u + a*du in K}."""
    step = max_step(u, du, cones)
    if step > 1.0:
        return 1.0
    return step


@dataclass
class NTScaling:
    """Nesterov-Todd scaling point data for a product cone.

    w holds the orthant scalings; (eta, wbar) hold one pair per
    second-order cone block; lam is the scaled point W z = W^{-T} s.
    """

    cones: ConeSpec
    w: np.ndarray
    eta: np.ndarray
    wbar: list
    lam: np.ndarray


def identity_scaling(cones: ConeSpec) -> NTScaling:
    w = np.ones(cones.l)
    eta = np.ones(cones.nsoc)
    wbar = []
    for q in cones.soc_dims:
        e = np.zeros(q)
        e[0] = 1.0
        wbar.append(e)
    return NTScaling(cones, w, eta, wbar, cone_identity(cones))


def compute_scaling(s, z, cones: ConeSpec) -> NTScaling:
    """NT scaling for interior s, z.  Raises ScalingFailure if either
    point has left the cone numerically (nonpositive orthant entry or
    nonpositive second-order residual)."""
    w = np.zeros(cones.l)
    lam = np.zeros(cones.m)
    for i in range(cones.l):
        if s[i] <= 0.0 or z[i] <= 0.0:
            raise ScalingFailure("orthant iterate left the cone")
        w[i] = math.sqrt(s[i] / z[i])
        lam[i] = math.sqrt(s[i] * z[i])
    eta = np.zeros(cones.nsoc)
    wbar = []
    at = cones.l
    for k, q in enumerate(cones.soc_dims):
        zres2 = z[at] * z[at] - _dot(z, z, at + 1, at + q)
        sres2 = s[at] * s[at] - _dot(s, s, at + 1, at + q)
        if zres2 <= 0.0 or sres2 <= 0.0 or z[at] <= 0.0 or s[at] <= 0.0:
            raise ScalingFailure("second-order iterate left the cone")
        zres = math.sqrt(zres2)
        sres = math.sqrt(sres2)
        # gamma = sqrt((1 + zbar's bar)/2) with both points normalized
        dotzs = _dot(z, s, at + 1, at + q)
        zsbar = (z[at] / zres) * (s[at] / sres) + dotzs / zres / sres
        gamma = math.sqrt((1.0 + zsbar) / 2.0)
        wb = np.zeros(q)
        # wbar = (sbar + J zbar) / (2 gamma)
        wb[0] = (s[at] / sres + z[at] / zres) / (2.0 * gamma)
        for i in range(1, q):
            wb[i] = (s[at + i] / sres - z[at + i] / zres) / (2.0 * gamma)
        eta[k] = math.sqrt(math.sqrt(sres2 / zres2))
        wbar.append(wb)
        # lam = W z on this block
        d = 0.0
        for i in range(1, q):
            d += wb[i] * z[at + i]
        lam[at] = eta[k] * (wb[0] * z[at] + d)
        coef = z[at] + d / (1.0 + wb[0])
        for i in range(1, q):
            lam[at + i] = eta[k] * (z[at + i] + coef * wb[i])
        at += q
    return NTScaling(cones, w, eta, wbar, lam)


def apply_W(sc: NTScaling, v) -> np.ndarray:
    """u = W v (W is symmetric)."""
    cones = sc.cones
    out = np.zeros(cones.m)
    for i in range(cones.l):
        out[i] = sc.w[i] * v[i]
    at = cones.l
    for k, q in enumerate(cones.soc_dims):
        wb = sc.wbar[k]
        d = 0.0
        for i in range(1, q):
            d += wb[i] * v[at + i]
        out[at] = sc.eta[k] * (wb[0] * v[at] + d)
        coef = v[at] + d / (1.0 + wb[0])
        for i in range(1, q):
            out[at + i] = sc.eta[k] * (v[at + i] + coef * wb[i])
        at += q
    return out


def apply_Winv(sc: NTScaling, v) -> np.ndarray:
    """u = W^{-1} v."""
    cones = sc.cones
    out = np.zeros(cones.m)
    for i in range(cones.l):
        out[i] = v[i] / sc.w[i]
    at = cones.l
    for k, q in enumerate(cones.soc_dims):
        wb = sc.wbar[k]
        d = 0.0
        for i in range(1, q):
            d += wb[i] * v[at + i]
        out[at] = (wb[0] * v[at] - d) / sc.eta[k]
        coef = -v[at] + d / (1.0 + wb[0])
        for i in range(1, q):
            out[at + i] = (v[at + i] + coef * wb[i]) / sc.eta[k]
        at += q
    return out


def wtw_upper(sc: NTScaling) -> np.ndarray:
    """Upper-triangle values of W'W in the canonical slot order.

    Order: the l orthant diagonal entries, then for each second-order
    cone block the dense upper triangle column by column.  This is the
    order the KKT assembler allocates NT slots in.
    """
    cones = sc.cones
    vals = []
    for i in range(cones.l):
        vals.append(sc.w[i] * sc.w[i])
    for k, q in enumerate(cones.soc_dims):
        wb = sc.wbar[k]
        e2 = sc.eta[k] * sc.eta[k]
        t = 2.0 * e2
        for j in range(q):
            for i in range(j + 1):
                v = t * wb[i] * wb[j]
                if i == j:
                    if i == 0:
                        v = v - e2
                    else:
                        v = v + e2
                vals.append(v)
    return np.array(vals)


def nt_slot_count(cones: ConeSpec) -> int:
    n = cones.l
    for q in cones.soc_dims:
        n += q * (q + 1) // 2
    return n
