"""Jordan algebra, cone membership, boundary steps, and NT scaling."""

import numpy as np
import pytest

from coneforge import cones as cn
from coneforge.problem import ConeSpec


def interior_point(rng, cones):
    u = rng.standard_normal(cones.m)
    u, _ = cn.shift_to_interior(u, cones)
    return u


def test_cone_identity():
    assert np.array_equal(cn.cone_identity(ConeSpec(2, [])), [1, 1])
    assert np.array_equal(cn.cone_identity(ConeSpec(0, [3])), [1, 0, 0])
    assert np.array_equal(cn.cone_identity(ConeSpec(1, [2, 2])),
                          [1, 1, 0, 1, 0])


def test_product_orthant():
    out = cn.cone_product(np.array([1.0, 2]), np.array([3.0, 4]),
                          ConeSpec(2, []))
    assert np.array_equal(out, [3, 8])


def test_product_soc():
    out = cn.cone_product(np.array([1.0, 2]), np.array([3.0, 4]),
                          ConeSpec(0, [2]))
    assert np.array_equal(out, [11, 10])


def test_product_identity_element():
    rng = np.random.default_rng(0)
    cones = ConeSpec(2, [3, 4])
    e = cn.cone_identity(cones)
    v = rng.standard_normal(cones.m)
    assert np.allclose(cn.cone_product(e, v, cones), v, rtol=0, atol=0)


def test_product_commutative_bilinear():
    rng = np.random.default_rng(1)
    cones = ConeSpec(3, [2, 4])
    for _ in range(20):
        u = rng.standard_normal(cones.m)
        v = rng.standard_normal(cones.m)
        w = rng.standard_normal(cones.m)
        a = rng.standard_normal()
        uv = cn.cone_product(u, v, cones)
        vu = cn.cone_product(v, u, cones)
        assert np.allclose(uv, vu, rtol=1e-14, atol=1e-14)
        lhs = cn.cone_product(u, a * v + w, cones)
        rhs = a * uv + cn.cone_product(u, w, cones)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_div_inverts_product():
    rng = np.random.default_rng(2)
    cones = ConeSpec(2, [3, 5])
    for _ in range(20):
        u = interior_point(rng, cones)
        v = rng.standard_normal(cones.m)
        w = cn.cone_product(u, v, cones)
        back = cn.cone_div(u, w, cones)
        assert np.allclose(back, v, rtol=1e-10, atol=1e-10)


def test_div_by_identity():
    cones = ConeSpec(1, [3])
    e = cn.cone_identity(cones)
    w = np.array([5.0, 1, 2, 3])
    assert np.allclose(cn.cone_div(e, w, cones), w, rtol=0, atol=0)


def test_div_orthant_elementwise():
    out = cn.cone_div(np.array([2.0, 4]), np.array([6.0, 8]), ConeSpec(2, []))
    assert np.array_equal(out, [3, 2])


def test_div_rejects_boundary_point():
    with pytest.raises(cn.SingularJordan):
        cn.cone_div(np.array([0.0]), np.array([1.0]), ConeSpec(1, []))
    with pytest.raises(cn.SingularJordan):
        cn.cone_div(np.array([1.0, 1, 0]), np.array([1.0, 0, 0]),
                    ConeSpec(0, [3]))


def test_in_cone_boundaries():
    cones = ConeSpec(2, [3])
    zero = np.zeros(cones.m)
    assert cn.in_cone(zero, cones, strict=False)
    assert not cn.in_cone(zero, cones, strict=True)
    soc = ConeSpec(0, [3])
    edge = np.array([1.0, 0.6, 0.8])
    assert cn.in_cone(edge, soc, strict=False)
    assert not cn.in_cone(edge, soc, strict=True)
    assert not cn.in_cone(np.array([1.0, 1, 1]), soc, strict=False)


def test_min_shift_examples():
    assert cn.min_shift_to_cone(np.array([-1.0, 3]), ConeSpec(2, [])) == 1.0
    assert cn.min_shift_to_cone(np.array([0.0, 3, 4]), ConeSpec(0, [3])) == 5.0
    e = cn.cone_identity(ConeSpec(2, []))
    assert cn.min_shift_to_cone(e, ConeSpec(2, [])) == -1.0
    e = cn.cone_identity(ConeSpec(0, [3]))
    assert cn.min_shift_to_cone(e, ConeSpec(0, [3])) == -1.0


def test_min_shift_lands_on_boundary():
    rng = np.random.default_rng(3)
    cones = ConeSpec(3, [4])
    for _ in range(20):
        u = rng.standard_normal(cones.m) * 5
        a = cn.min_shift_to_cone(u, cones)
        probe = u + (a + 1e-9 * (1 + abs(a))) * cn.cone_identity(cones)
        assert cn.in_cone(probe, cones, strict=False)


def test_shift_to_interior():
    cones = ConeSpec(2, [])
    u, shift = cn.shift_to_interior(np.array([-1.0, 3]), cones)
    assert shift == 2.0 and np.array_equal(u, [1, 5])
    u, shift = cn.shift_to_interior(np.array([0.5, 3]), cones)
    assert shift == 0.0 and np.array_equal(u, [0.5, 3])
    soc = ConeSpec(0, [3])
    u, shift = cn.shift_to_interior(np.array([0.0, 3, 4]), soc)
    assert shift == 6.0 and np.array_equal(u, [6, 3, 4])


def test_max_step_orthant():
    cones = ConeSpec(2, [])
    a = cn.max_step(np.array([1.0, 2]), np.array([-2.0, -1]), cones)
    assert a == 0.5
    assert cn.max_step(np.array([1.0, 2]), np.array([1.0, 2]), cones) == np.inf
    assert cn.max_step_to_boundary(np.array([1.0, 2]),
                                   np.array([1.0, 2]), cones) == 1.0


def test_max_step_soc():
    cones = ConeSpec(0, [2])
    assert cn.max_step(np.array([1.0, 0]), np.array([0.0, 2]), cones) == 0.5
    # scaling ray: stays inside forever
    u = np.array([2.0, 1, 0])
    assert cn.max_step(u, u, ConeSpec(0, [3])) == np.inf


def test_max_step_is_binding():
    rng = np.random.default_rng(4)
    cones = ConeSpec(2, [3, 4])
    for _ in range(50):
        u = interior_point(rng, cones)
        du = rng.standard_normal(cones.m)
        a = cn.max_step(u, du, cones)
        if a == np.inf:
            assert cn.in_cone(u + 1e3 * du, cones, strict=False)
            continue
        assert cn.in_cone(u + (a - 1e-9 * (1 + a)) * du, cones, strict=False)
        assert not cn.in_cone(u + (a + 1e-6 * (1 + a)) * du, cones,
                              strict=True)


def test_nt_orthant_example():
    sc = cn.compute_scaling(np.array([4.0]), np.array([1.0]), ConeSpec(1, []))
    assert sc.w[0] == 2.0 and sc.lam[0] == 2.0


def test_nt_identity_point():
    cones = ConeSpec(0, [3])
    e = np.array([1.0, 0, 0])
    sc = cn.compute_scaling(e, e.copy(), cones)
    assert sc.eta[0] == 1.0
    assert np.array_equal(sc.wbar[0], [1, 0, 0])
    assert np.array_equal(sc.lam, [1, 0, 0])


def test_nt_at_s_equals_z():
    rng = np.random.default_rng(5)
    cones = ConeSpec(1, [4])
    s = interior_point(rng, cones)
    sc = cn.compute_scaling(s, s.copy(), cones)
    assert abs(sc.eta[0] - 1.0) < 1e-14
    assert np.allclose(sc.lam, s, rtol=1e-12, atol=1e-12)


def test_nt_scaling_identities():
    rng = np.random.default_rng(6)
    cones = ConeSpec(2, [3, 4, 2])
    for _ in range(25):
        s = interior_point(rng, cones)
        z = interior_point(rng, cones)
        sc = cn.compute_scaling(s, z, cones)
        lam1 = cn.apply_W(sc, z)
        lam2 = cn.apply_Winv(sc, s)
        scale = 1.0 + np.max(np.abs(sc.lam))
        assert np.max(np.abs(lam1 - lam2)) <= 1e-10 * scale
        assert np.max(np.abs(lam1 - sc.lam)) <= 1e-10 * scale
        assert cn.in_cone(sc.lam, cones, strict=True)
        # unit-hyperbolic normalization of each SOC scaling vector
        at = cones.l
        for k, q in enumerate(cones.soc_dims):
            wb = sc.wbar[k]
            res = wb[0] * wb[0] - np.dot(wb[1:], wb[1:])
            assert abs(res - 1.0) <= 1e-12 * (1 + wb[0] * wb[0])
            assert wb[0] > 0
            at += q
        v = rng.standard_normal(cones.m)
        assert np.allclose(cn.apply_W(sc, cn.apply_Winv(sc, v)), v,
                           rtol=1e-12, atol=1e-12)


def test_nt_scaling_failure_outside_cone():
    with pytest.raises(cn.ScalingFailure):
        cn.compute_scaling(np.array([-1.0]), np.array([1.0]), ConeSpec(1, []))
    with pytest.raises(cn.ScalingFailure):
        cn.compute_scaling(np.array([1.0, 2, 0]), np.array([2.0, 0, 0]),
                           ConeSpec(0, [3]))


def test_identity_scaling_matches_identity_point():
    cones = ConeSpec(2, [3])
    sc = cn.identity_scaling(cones)
    v = np.array([1.0, -2, 3, 0.5, 4])
    assert np.array_equal(cn.apply_W(sc, v), v)
    assert np.array_equal(cn.apply_Winv(sc, v), v)


def test_wtw_orthant_square():
    sc = cn.compute_scaling(np.array([4.0]), np.array([1.0]), ConeSpec(1, []))
    assert np.array_equal(cn.wtw_upper(sc), [4.0])


def test_wtw_identity_block():
    cones = ConeSpec(0, [3])
    sc = cn.identity_scaling(cones)
    vals = cn.wtw_upper(sc)
    # dense upper triangle of I3, column-major: (0,0) (0,1) (1,1) (0,2) (1,2) (2,2)
    assert np.array_equal(vals, [1, 0, 1, 0, 0, 1])


def test_wtw_matches_double_apply():
    rng = np.random.default_rng(8)
    cones = ConeSpec(2, [3, 4])
    s = interior_point(rng, cones)
    z = interior_point(rng, cones)
    sc = cn.compute_scaling(s, z, cones)
    m = cones.m
    WW = np.zeros((m, m))
    for j in range(m):
        ej = np.zeros(m)
        ej[j] = 1.0
        WW[:, j] = cn.apply_W(sc, cn.apply_W(sc, ej))
    vals = cn.wtw_upper(sc)
    idx = 0
    for i in range(cones.l):
        assert abs(vals[idx] - WW[i, i]) <= 1e-12 * (1 + abs(WW[i, i]))
        idx += 1
    at = cones.l
    for q in cones.soc_dims:
        for j in range(q):
            for i in range(j + 1):
                ref = WW[at + i, at + j]
                assert abs(vals[idx] - ref) <= 1e-12 * (1 + abs(ref))
                idx += 1
        at += q
    assert idx == cn.nt_slot_count(cones) == len(vals)
