import numpy as np
import pytest

from weylflow import (
    DomainGrid,
    HiggsField,
    MetricField,
    classify_higgs,
    codifferential,
    domain_christoffels,
    domain_ricci,
    gauduchon_fix,
    ricci_weyl,
    scalar_laplacian,
    weyl_connection,
    weyl_laplacian_scalar,
)
from weylflow.families import build_higgs, discrete_exact_higgs
from weylflow.higgs import compatibility_residual


def torus(n_pts=16, dim=3, lengths=2 * np.pi):
    return DomainGrid((n_pts,) * dim, (lengths,) * dim)


def constant_higgs(metric, comps):
    comps = np.asarray(comps, dtype=float)
    theta = np.broadcast_to(comps, metric.grid.sizes + (metric.n,)).copy()
    return HiggsField.from_theta(metric, theta)


def test_weyl_connection_zero_higgs_is_levi_civita_bitwise():
    g = torus(8, 3)
    x = g.coordinates()
    m = MetricField.conformally_flat(g, 0.2 * np.sin(x[..., 0]))
    lc = domain_christoffels(m)
    w = weyl_connection(m, HiggsField.zero(m), christoffels=lc)
    assert np.array_equal(w.gamma, lc.gamma)


def test_weyl_connection_flat_constant_coefficients():
    # flat g, n = 3, theta = (1, 0, 0)
    g = torus(6, 3)
    m = MetricField.flat(g)
    h = constant_higgs(m, [1.0, 0.0, 0.0])
    gamma = weyl_connection(m, h).gamma
    assert gamma[..., 0, 0, 0].flat[0] == pytest.approx(-0.5)
    assert gamma[..., 0, 1, 1].flat[0] == pytest.approx(0.5)
    assert gamma[..., 1, 0, 1].flat[0] == pytest.approx(-0.5)
    # torsion-free: exact symmetry in the lower pair
    assert np.array_equal(gamma, np.swapaxes(gamma, -1, -2))


def test_compatibility_constant_fields():
    g = torus(6, 3)
    rng = np.random.default_rng(12)
    a = rng.normal(size=(3, 3))
    spd = a.T @ a + 3 * np.eye(3)
    m = MetricField.from_array(g, np.broadcast_to(spd, g.sizes + (3, 3)).copy())
    h = constant_higgs(m, rng.normal(size=3))
    assert compatibility_residual(m, h) < 1e-12


def test_compatibility_residual_smooth_fields():
    # discrete metricity of the centered-stencil Christoffels is an algebraic
    # identity, so the Weyl compatibility residual is rounding-level even for
    # varying fields (stronger than the O(h^2) requirement)
    for n in (16, 32):
        g = torus(n, 3)
        x = g.coordinates()
        m = MetricField.conformally_flat(g, 0.2 * np.sin(x[..., 0]))
        theta = np.zeros(g.sizes + (3,))
        theta[..., 1] = 0.3 * np.cos(x[..., 2])
        h = HiggsField.from_theta(m, theta)
        assert compatibility_residual(m, h) < 1e-12


def test_ricci_weyl_zero_higgs_matches_ricci_bitwise():
    g = torus(10, 3)
    x = g.coordinates()
    m = MetricField.conformally_flat(g, 0.1 * np.sin(x[..., 1]))
    lc = domain_christoffels(m)
    ric = domain_ricci(m, lc)
    rw = ricci_weyl(m, HiggsField.zero(m), ricci=ric, christoffels=lc)
    assert np.array_equal(rw, ric)


def test_ricci_weyl_flat_constant_higgs_values():
    # flat g, n = 3, theta = c dx1: Ricci^W(d2,d2) = -c^2/4, (d1,d1) = 0
    c = 0.7
    g = torus(6, 3)
    m = MetricField.flat(g)
    h = constant_higgs(m, [c, 0.0, 0.0])
    rw = ricci_weyl(m, h)
    assert np.abs(rw[..., 1, 1] + c**2 / 4).max() < 1e-14
    assert np.abs(rw[..., 2, 2] + c**2 / 4).max() < 1e-14
    assert np.abs(rw[..., 0, 0]).max() < 1e-14


def test_classify_exact_family():
    g = torus(24, 3)
    m = MetricField.flat(g)
    h = build_higgs(g, m, {"family": "exact", "potential": {"id": "sin_axis", "amplitude": 0.3, "axis": 0}})
    cls = classify_higgs(h, m)
    assert cls.tag == "exact"
    assert cls.d_theta_sup < 1e-12
    assert all(abs(p) < 1e-10 for p in cls.periods)


def test_classify_constant_closed_nonexact():
    c, L = 0.8, 2 * np.pi
    g = torus(16, 3)
    m = MetricField.flat(g)
    h = constant_higgs(m, [c, 0.0, 0.0])
    cls = classify_higgs(h, m)
    assert cls.tag == "closed_nonexact"
    assert cls.periods[0] == pytest.approx(c * L)
    assert cls.d_theta_sup < 1e-14


def test_classify_nonclosed_matches_symbolic():
    g = torus(32, 3)
    m = MetricField.flat(g)
    h = build_higgs(g, m, {"family": "nonclosed", "amplitude": 1.0, "depends_on": 1, "component": 0})
    cls = classify_higgs(h, m)
    assert cls.tag == "nonclosed"
    # |d theta|_{10} = |cos x2| has sup 1, to O(h^2)
    assert cls.d_theta_sup == pytest.approx(1.0, abs=0.02)


def test_classify_conformal_class_stability():
    g = torus(16, 3)
    x = g.coordinates()
    m = MetricField.flat(g)
    h = constant_higgs(m, [0.5, 0.0, 0.0])
    cls0 = classify_higgs(h, m)
    f = 0.2 * np.sin(x[..., 1])
    m2 = MetricField.conformally_flat(g, 0.5 * f)
    theta2 = h.theta + g.gradient(f)
    h2 = HiggsField.from_theta(m2, theta2)
    cls1 = classify_higgs(h2, m2)
    assert cls1.tag == cls0.tag
    for a, b in zip(cls0.periods, cls1.periods):
        assert abs(a - b) < 1e-10
    assert abs(cls1.d_theta_sup - cls0.d_theta_sup) < 1e-12


def test_gauduchon_constant_higgs_flat_torus():
    g = torus(8, 3)
    m = MetricField.flat(g)
    h = constant_higgs(m, [0.4, -0.2, 0.0])
    res = gauduchon_fix(m, h)
    assert res.converged
    assert np.abs(res.f).max() < 1e-12  # already co-closed
    assert res.residual_sup < 1e-12


def test_gauduchon_exact_higgs_removed():
    # theta = dV: f = -V + const brings theta' ~ 0; the solve reaches the
    # configured residual and f tracks -V to discretization order
    g = torus(16, 3)
    x = g.coordinates()
    m = MetricField.flat(g)
    v = 0.3 * np.sin(x[..., 0])
    h = HiggsField.from_theta(m, discrete_exact_higgs(g, v))
    res = gauduchon_fix(m, h, tol=1e-8)
    assert res.converged and res.residual_sup < 1e-8
    centred = -(v - v.mean())
    assert np.abs(res.f - centred).max() < 5e-3  # O(h^2) family mismatch


def test_gauduchon_mixed_higgs_reaches_tolerance():
    g = torus(16, 3)
    x = g.coordinates()
    m = MetricField.flat(g)
    theta = np.zeros(g.sizes + (3,))
    theta[..., 0] = 1.0 + 0.2 * np.sin(x[..., 1])
    h = HiggsField.from_theta(m, theta)
    res = gauduchon_fix(m, h, tol=1e-8)
    assert res.converged
    # recompute the co-differential independently from scratch
    m2 = MetricField.conformally_flat(g, 0.5 * res.f)
    theta2 = theta + g.gradient(res.f)
    indep = codifferential(m2, theta2)
    assert np.abs(indep).max() < 1e-8
    assert abs(res.f.mean()) < 1e-12


def test_weyl_laplacian_scalar():
    g = torus(32, 3)
    x = g.coordinates()
    m = MetricField.flat(g)
    h = constant_higgs(m, [1.0, 0.0, 0.0])
    assert np.abs(weyl_laplacian_scalar(m, h, np.ones(g.sizes))).max() == 0.0
    f = np.sin(x[..., 0])
    # flat, theta = dx1: lap^W f = -sin - cos/2, to O(h^2)
    expected = -np.sin(x[..., 0]) - 0.5 * np.cos(x[..., 0])
    assert np.abs(weyl_laplacian_scalar(m, h, f) - expected).max() < 3e-2
    # theta = 0 reduces to the Laplace-Beltrami operator bitwise
    lc = domain_christoffels(m)
    assert np.array_equal(
        weyl_laplacian_scalar(m, HiggsField.zero(m), f, christoffels=lc),
        scalar_laplacian(m, f, lc),
    )


def test_weyl_laplacian_matches_coefficient_trace():
    # coefficient-level trace with Gamma^W agrees with the first-order form
    g = torus(12, 3)
    x = g.coordinates()
    m = MetricField.conformally_flat(g, 0.1 * np.sin(x[..., 2]))
    theta = np.zeros(g.sizes + (3,))
    theta[..., 0] = 0.4 * np.cos(x[..., 1])
    h = HiggsField.from_theta(m, theta)
    f = np.sin(x[..., 0]) * np.cos(x[..., 1])
    direct = weyl_laplacian_scalar(m, h, f)
    gw = weyl_connection(m, h)
    df = g.gradient(f)
    hess = np.stack(
        [np.stack([g.diff(df[..., j], i) for j in range(3)], axis=-1) for i in range(3)],
        axis=-2,
    )
    from_trace = np.einsum(
        "...ij,...ij->...", m.inverse, hess - np.einsum("...kij,...k->...ij", gw.gamma, df)
    )
    assert np.abs(direct - from_trace).max() < 1e-12


def test_higgs_sharp_consistency():
    g = torus(8, 3)
    rng = np.random.default_rng(5)
    a = rng.normal(size=(3, 3))
    m = MetricField.from_array(
        g, np.broadcast_to(a.T @ a + 3 * np.eye(3), g.sizes + (3, 3)).copy()
    )
    theta = rng.normal(size=g.sizes + (3,))
    h = HiggsField.from_theta(m, theta)
    assert h.sharp_residual(m) < 1e-12
