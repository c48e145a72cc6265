import numpy as np
import pytest

from weylflow import (
    Circle,
    EquivarianceData,
    Euclidean,
    FlatTorus,
    Hyperbolic,
    MatrixTwist,
    RotationTwist,
    Sphere,
    TranslationTwist,
    boost_matrix,
)
from weylflow.errors import CutLocusError

ALL_SPACES = [
    Euclidean(3),
    Circle(1.0),
    FlatTorus(2, (2 * np.pi, 4.0)),
    Sphere(2, 1.0),
    Hyperbolic(2),
]


def _bound(space):
    # stay inside the injectivity radius (sphere: pi, flat torus: half period)
    if space.kind == "sphere":
        return np.pi * space.radius * 0.9
    if space.kind == "flat_torus":
        return 0.45 * space.periods.min()
    if space.kind == "circle":
        return np.pi * space.radius * 0.9
    return 1.5


@pytest.mark.parametrize("space", ALL_SPACES, ids=lambda s: s.kind)
def test_exp_log_roundtrip(space):
    rng = np.random.default_rng(42)
    p = space.random_point(rng, (1000,))
    v = space.random_tangent(rng, p, _bound(space))
    q = space.exp(p, v)
    assert space.check_point(q) < 1e-10
    w = space.log(p, q)
    assert space.dist(space.exp(p, w), q).max() < 1e-9
    d = space.dist(p, q)
    assert np.abs(d - space.norm(p, v)).max() < 1e-9
    assert space.dist(p, p).max() == 0.0
    assert np.abs(space.log(p, p)).max() == 0.0


@pytest.mark.parametrize("space", ALL_SPACES, ids=lambda s: s.kind)
def test_transport_isometry_and_linearity(space):
    rng = np.random.default_rng(1)
    p = space.random_point(rng, (500,))
    q = space.exp(p, space.random_tangent(rng, p, _bound(space)))
    v = space.random_tangent(rng, p, 1.0)
    w = space.random_tangent(rng, p, 1.0)
    tv, tw = space.transport(p, q, v), space.transport(p, q, w)
    # inner products of transported pairs preserved
    assert np.abs(space.inner(q, tv, tw) - space.inner(p, v, w)).max() < 1e-10
    # linearity
    tvw = space.transport(p, q, 2.0 * v - 0.5 * w)
    assert np.abs(tvw - (2.0 * tv - 0.5 * tw)).max() < 1e-10
    # identity transport
    assert np.abs(space.transport(p, p, v) - v).max() == 0.0


def test_exp_zero_is_identity():
    for space in ALL_SPACES:
        rng = np.random.default_rng(5)
        p = space.random_point(rng, (50,))
        assert np.abs(space.exp(p, np.zeros_like(p)) - p).max() < 1e-14


def test_sphere_oracles():
    s = Sphere(2, 1.0)
    north = np.array([0.0, 0.0, 1.0])
    assert np.abs(s.exp(north, np.array([np.pi, 0.0, 0.0])) - np.array([0.0, 0.0, -1.0])).max() < 1e-12
    assert s.dist(north, np.array([1.0, 0.0, 0.0])) == pytest.approx(np.pi / 2)
    with pytest.raises(CutLocusError):
        s.log(north, -north)
    # transporting the geodesic's own tangent keeps it tangent to it
    p = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, np.pi / 2, 0.0])  # quarter equator
    q = s.exp(p, v)
    t = s.transport(p, q, v)
    expected = (np.pi / 2) * np.array([-1.0, 0.0, 0.0])  # rotated tangent at (0,1,0)
    assert np.abs(q - np.array([0.0, 1.0, 0.0])).max() < 1e-12
    assert np.abs(t - expected).max() < 1e-12


def test_hyperbolic_oracles():
    h = Hyperbolic(2)
    p = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, 1.0, 0.0])
    q = h.exp(p, v)
    assert np.abs(q - np.array([np.cosh(1.0), np.sinh(1.0), 0.0])).max() < 1e-12
    assert h.dist(p, q) == pytest.approx(1.0)


@pytest.mark.parametrize("space,sign", [(Sphere(2, 1.0), 1.0), (Hyperbolic(2), -1.0)])
def test_constant_curvature_values(space, sign):
    rng = np.random.default_rng(9)
    p = space.random_point(rng, (200,))
    x = space.random_tangent(rng, p, 1.0)
    y = space.random_tangent(rng, p, 1.0)
    # orthonormalize wrt the target metric
    x = x / space.norm(p, x)[..., None]
    y = y - space.inner(p, x, y)[..., None] * x
    y = y / space.norm(p, y)[..., None]
    r = space.curvature(p, x, y, y)
    sec = space.inner(p, r, x)
    assert np.abs(sec - sign).max() < 1e-10
    # antisymmetry and first Bianchi
    z = space.random_tangent(rng, p, 1.0)
    w = space.random_tangent(rng, p, 1.0)
    lhs = space.inner(p, space.curvature(p, x, y, z), w)
    rhs = -space.inner(p, space.curvature(p, y, x, z), w)
    assert np.abs(lhs - rhs).max() < 1e-12
    bianchi = (
        space.curvature(p, x, y, z)
        + space.curvature(p, y, z, x)
        + space.curvature(p, z, x, y)
    )
    assert np.abs(bianchi).max() < 1e-12
    # pair symmetry <R(x,y)z,w> = <R(z,w)x,y>
    lhs = space.inner(p, space.curvature(p, x, y, z), w)
    rhs = space.inner(p, space.curvature(p, z, w, x), y)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_flat_curvature_zero():
    for space in [Euclidean(2), Circle(1.0), FlatTorus(2, (1.0, 1.0))]:
        rng = np.random.default_rng(2)
        p = space.random_point(rng, (10,))
        v = space.random_tangent(rng, p, 1.0)
        assert np.abs(space.curvature(p, v, v, v)).max() == 0.0


def test_twist_isometry_validation():
    s = Sphere(2, 1.0)
    rot = MatrixTwist(np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    EquivarianceData(s, (rot, rot.inverse()))  # fine
    bad = MatrixTwist(np.diag([2.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        EquivarianceData(s, (bad, rot))


def test_twist_commutation_required():
    s = Sphere(2, 1.0)
    rx = MatrixTwist(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]))
    rz = MatrixTwist(np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    with pytest.raises(ValueError):
        EquivarianceData(s, (rx, rz))


def test_boost_twist_is_lorentz():
    h = Hyperbolic(2)
    b = MatrixTwist(boost_matrix(2, 0.7))
    assert b.isometry_residual(h) < 1e-12
    eq = EquivarianceData(h, (b, b))
    p = np.array([1.0, 0.0, 0.0])
    q = eq.twist(0).apply_point(p)
    assert h.dist(p, q) == pytest.approx(0.7)


def test_lift_twists():
    c = Circle(1.0)
    t = RotationTwist(2 * np.pi * 3)
    p = np.array([0.25])
    assert t.inverse().apply_point(t.apply_point(p)) == pytest.approx(0.25)
    ft = FlatTorus(2, (1.0, 2.0))
    tr = TranslationTwist([1.0, 0.0])
    assert np.abs(tr.inverse().apply_point(tr.apply_point(np.array([0.3, 0.4]))) - [0.3, 0.4]).max() < 1e-15
