"""Spatial algebra identities, each checked against an independent oracle
(hand-expanded 6x6 operator matrices or random numeric identities)."""

import numpy as np
import pytest

from robowalk.spatial import (
    PluckerTransform,
    SpatialError,
    SpatialForce,
    SpatialInertia,
    SpatialMotion,
    force_cross,
    inertia_apply,
    motion_cross,
    pairing,
    transform_force,
    transform_motion,
)

RNG = np.random.default_rng(20240613)


def skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0.0]])


def crm(v):
    """Hand-expanded 6x6 motion cross operator (the oracle)."""
    m = np.zeros((6, 6))
    m[:3, :3] = skew(v[:3])
    m[3:, 3:] = skew(v[:3])
    m[3:, :3] = skew(v[3:])
    return m


def random_motion():
    return SpatialMotion(RNG.normal(size=3), RNG.normal(size=3))


def random_force():
    return SpatialForce(RNG.normal(size=3), RNG.normal(size=3))


def random_transform():
    ang = RNG.uniform(-np.pi, np.pi)
    axis = RNG.normal(size=3)
    axis /= np.linalg.norm(axis)
    k = skew(axis)
    e = np.eye(3) + np.sin(ang) * k + (1 - np.cos(ang)) * (k @ k)
    return PluckerTransform(e, RNG.normal(size=3))


def test_motion_cross_self_vanishes():
    v = random_motion()
    out = motion_cross(v, v)
    assert np.allclose(out.as_array(), 0.0, atol=1e-14)


def test_motion_cross_matches_operator_matrix():
    for _ in range(100):
        v, m = random_motion(), random_motion()
        expect = crm(v.as_array()) @ m.as_array()
        assert np.allclose(motion_cross(v, m).as_array(), expect, atol=1e-13)


def test_motion_cross_pure_angular_with_pure_linear():
    # omega about z crossed with linear u along x -> linear omega*u along y
    omega, u = 1.7, 0.4
    v = SpatialMotion([0, 0, omega], [0, 0, 0])
    m = SpatialMotion([0, 0, 0], [u, 0, 0])
    out = motion_cross(v, m)
    assert np.allclose(out.angular, 0.0)
    assert np.allclose(out.linear, [0.0, omega * u, 0.0])


def test_motion_cross_bilinear():
    v, m = random_motion(), random_motion()
    a = motion_cross(2.0 * v, m).as_array()
    b = 2.0 * motion_cross(v, m).as_array()
    assert np.allclose(a, b, atol=1e-13)


def test_force_cross_zero_absorbing():
    v = random_motion()
    out = force_cross(v, SpatialForce.zero())
    assert np.allclose(out.as_array(), 0.0)


def test_force_cross_matches_dual_operator():
    # crf(v) = -crm(v)^T, expanded by hand
    for _ in range(100):
        v, f = random_motion(), random_force()
        expect = -crm(v.as_array()).T @ f.as_array()
        assert np.allclose(force_cross(v, f).as_array(), expect, atol=1e-13)


def test_cross_duality_identity():
    # <v x m, f> = -<m, v x* f> over random triples
    for _ in range(100):
        v, m, f = random_motion(), random_motion(), random_force()
        lhs = pairing(motion_cross(v, m), f)
        rhs = -pairing(m, force_cross(v, f))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_force_cross_pure_linear_v_pure_force():
    v = SpatialMotion([0, 0, 0], RNG.normal(size=3))
    f = SpatialForce([0, 0, 0], RNG.normal(size=3))
    out = force_cross(v, f)
    assert np.allclose(out.moment, np.cross(v.linear, f.force), atol=1e-14)
    assert np.allclose(out.force, 0.0)


def test_transform_identity():
    x = PluckerTransform.identity()
    m, f = random_motion(), random_force()
    assert np.allclose(transform_motion(x, m).as_array(), m.as_array())
    assert np.allclose(transform_force(x, f).as_array(), f.as_array())


def test_transform_power_invariance():
    for _ in range(100):
        x, m, f = random_transform(), random_motion(), random_force()
        before = pairing(m, f)
        after = pairing(transform_motion(x, m), transform_force(x, f))
        assert abs(before - after) <= 1e-12 * max(1.0, abs(before))


def test_transform_round_trip():
    for _ in range(50):
        x = random_transform()
        m, f = random_motion(), random_force()
        m2 = transform_motion(x.inverse(), transform_motion(x, m))
        f2 = transform_force(x.inverse(), transform_force(x, f))
        assert np.allclose(m2.as_array(), m.as_array(), atol=1e-12)
        assert np.allclose(f2.as_array(), f.as_array(), atol=1e-12)


def test_transform_compose_matches_matrix_product():
    for _ in range(50):
        x1, x2 = random_transform(), random_transform()
        m = random_motion()
        via_compose = transform_motion(x2.compose(x1), m).as_array()
        via_seq = transform_motion(x2, transform_motion(x1, m)).as_array()
        assert np.allclose(via_compose, via_seq, atol=1e-12)
        assert np.allclose(x2.compose(x1).motion_matrix(),
                           x2.motion_matrix() @ x1.motion_matrix(), atol=1e-12)


def test_inertia_point_mass_pure_linear():
    ine = SpatialInertia(2.5, [0, 0, 0], np.zeros((3, 3)))
    v = SpatialMotion([0, 0, 0], [0.3, -0.1, 0.7])
    out = inertia_apply(ine, v)
    assert np.allclose(out.force, 2.5 * v.linear)
    assert np.allclose(out.moment, 0.0)


def test_inertia_symmetric_psd_form():
    for _ in range(50):
        c = RNG.normal(size=3)
        a = RNG.normal(size=(3, 3))
        ic = a @ a.T  # symmetric PSD
        ine = SpatialInertia(RNG.uniform(0.1, 5.0), c, ic)
        u, v = random_motion(), random_motion()
        suv = pairing(u, inertia_apply(ine, v))
        svu = pairing(v, inertia_apply(ine, u))
        assert abs(suv - svu) <= 1e-12 * max(1.0, abs(suv))
        quad = pairing(v, inertia_apply(ine, v))
        assert quad >= -1e-12


def test_inertia_zero_velocity():
    ine = SpatialInertia(1.0, [0.1, 0.2, 0.3], np.eye(3))
    out = inertia_apply(ine, SpatialMotion.zero())
    assert np.allclose(out.as_array(), 0.0)


def test_planarity_closure():
    # sagittal-plane inputs (angular only about y, linear only in x-z;
    # moments only about y, forces only in x-z) stay in the plane
    def planar_motion():
        return SpatialMotion([0, RNG.normal(), 0], [RNG.normal(), 0, RNG.normal()])

    def planar_force():
        return SpatialForce([0, RNG.normal(), 0], [RNG.normal(), 0, RNG.normal()])

    def planar_transform():
        a = RNG.uniform(-np.pi, np.pi)
        e = np.array([[np.cos(a), 0, np.sin(a)], [0, 1, 0], [-np.sin(a), 0, np.cos(a)]])
        return PluckerTransform(e, [RNG.normal(), 0, RNG.normal()])

    for _ in range(50):
        v, m, f = planar_motion(), planar_motion(), planar_force()
        x = planar_transform()
        ine = SpatialInertia(RNG.uniform(0.5, 3.0),
                             [RNG.normal(), 0, RNG.normal()],
                             np.diag([0.0, RNG.uniform(0, 1), 0.0]))
        for out in (motion_cross(v, m), transform_motion(x, m)):
            assert abs(out.angular[0]) < 1e-15 and abs(out.angular[2]) < 1e-15
            assert abs(out.linear[1]) < 1e-15
        for fout in (force_cross(v, f), transform_force(x, f), inertia_apply(ine, v)):
            assert abs(fout.moment[0]) < 1e-15 and abs(fout.moment[2]) < 1e-15
            assert abs(fout.force[1]) < 1e-15


def test_validation_errors():
    with pytest.raises(SpatialError):
        PluckerTransform(np.eye(3) * 1.1, np.zeros(3))
    with pytest.raises(SpatialError):
        SpatialInertia(-1.0, np.zeros(3), np.eye(3))
    with pytest.raises(SpatialError):
        SpatialMotion([np.nan, 0, 0], [0, 0, 0])
    # reflections are not proper rotations
    with pytest.raises(SpatialError):
        PluckerTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
