import math

import numpy as np
import pytest
from numpy.polynomial import legendre
from scipy import integrate

from swimthrust import fields as F
from swimthrust import quadrature as Q
from swimthrust import thrust as TH

# published Gauss-Kronrod (7, 15) abscissae and weights, non-negative half
GK15_NODES = [0.991455371120812639, 0.949107912342758525, 0.864864423359769073, 0.741531185599394440,
              0.586087235467691130, 0.405845151377397167, 0.207784955007898468, 0.0]
GK15_KRONROD = [0.022935322010529225, 0.063092092629978553, 0.104790010322250184, 0.140653259715525919,
                0.169004726639267903, 0.190350578064785410, 0.204432940075298892, 0.209482141084727828]


def test_gauss_kronrod_matches_published_table():
    x, wk, wg = Q.gauss_kronrod(7)
    np.testing.assert_allclose(x[7:][::-1], GK15_NODES, atol=1e-15)
    np.testing.assert_allclose(wk[7:][::-1], GK15_KRONROD, atol=1e-15)
    xg, wgl = legendre.leggauss(7)
    np.testing.assert_allclose(wg[wg > 0], wgl, atol=1e-15)


@pytest.mark.parametrize("n", [5, 10, 15])
def test_gauss_kronrod_exactness(n):
    x, wk, wg = Q.gauss_kronrod(n)
    for deg in range(3 * n + 2):
        exact = 2.0 / (deg + 1) if deg % 2 == 0 else 0.0
        assert np.dot(wk, x**deg) == pytest.approx(exact, abs=1e-13)
    assert np.dot(wg, x ** (2 * n - 1)) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("rule", [Q.SurfaceRule(), Q.SurfaceRule(7, 13), Q.SurfaceRule(24, 48, 0.37)])
def test_surface_weights_sum_to_area(rule):
    _, w = rule.nodes()
    assert w.sum() == pytest.approx(4 * math.pi, abs=1e-13)


def test_surface_integral_examples():
    one = Q.integrate_surface(lambda x, n: np.ones(len(x)))
    assert one.value == pytest.approx(4 * math.pi, abs=1e-13)
    assert one.converged
    psi_er = Q.integrate_surface(lambda x, n: F.dipole_potential(x)[:, None] * (-n))
    np.testing.assert_allclose(psi_er.value, [4 * math.pi / 3, 0.0, 0.0], atol=1e-13)
    x1sq = Q.integrate_surface(lambda x, n: x[:, 0] ** 2)
    assert x1sq.value == pytest.approx(4 * math.pi / 3, abs=1e-13)


def test_surface_normal_points_into_body():
    x = np.array([[2.0, 0.0, 0.0]])
    np.testing.assert_array_equal(Q.surface_normal(x), [[-1.0, 0.0, 0.0]])


def test_surface_rejects_non_finite_integrand():
    with pytest.raises(Q.QuadratureError, match="node"):
        Q.integrate_surface(lambda x, n: np.where(x[:, 2] > 0.99, np.nan, 1.0))


def test_exterior_inverse_fourth_power():
    res = Q.integrate_exterior(lambda x: np.linalg.norm(x, axis=1) ** -4)
    assert res.converged
    assert abs(res.value - 4 * math.pi) < 1e-6
    assert res.error_estimate <= 1e-6


def test_exterior_psi_squared_separable_oracle():
    # psi^2 = x_1^2 / r^6: angular factor int xhat_1^2 = 4 pi / 3, radial int_1^inf r^-2 dr = 1
    angular = Q.integrate_surface(lambda x, n: x[:, 0] ** 2).value
    radial, _ = integrate.quad(lambda r: r**-4 * r**2, 1, np.inf)
    res = Q.integrate_exterior(lambda x: F.dipole_potential(x) ** 2)
    assert abs(res.value - angular * radial) < 1e-6
    assert angular * radial == pytest.approx(4 * math.pi / 3, rel=1e-12)


@pytest.mark.parametrize("h", [50.0, 200.0])
def test_exterior_boundary_layer_probe(h):
    f = lambda x: np.exp(-h * (np.linalg.norm(x, axis=1) - 1)) * np.linalg.norm(x, axis=1) ** -2
    res = Q.integrate_exterior(f, layer_scale=h)
    oracle, _ = integrate.quad(lambda r: 4 * math.pi * math.exp(-h * (r - 1)), 1, np.inf, epsabs=1e-13)
    assert abs(res.value - oracle) < 1e-6
    assert oracle == pytest.approx(4 * math.pi / h, rel=1e-10)


def test_exterior_rotation_invariance():
    f = lambda x: np.linalg.norm(x, axis=1) ** -5
    a = Q.integrate_exterior(f, Q.VolumeRule())
    b = Q.integrate_exterior(f, Q.VolumeRule(surface=Q.SurfaceRule(phi_offset=0.731)))
    assert abs(a.value - b.value) < 1e-12


def test_exterior_vector_valued():
    res = Q.integrate_exterior(lambda x: F.field_a(x)[0] * F.dipole_potential(x)[:, None])
    # psi a = grad(psi^2 / 2); only the surface term survives, and it is even in x_2, x_3
    assert abs(res.value[1]) < 1e-10 and abs(res.value[2]) < 1e-10


def test_non_convergence_is_flagged():
    rule = Q.VolumeRule(abs_tol=1e-14, max_panels=8)
    res = Q.integrate_exterior(lambda x: np.exp(-200 * (np.linalg.norm(x, axis=1) - 1)) * np.cos(
        200 * np.linalg.norm(x, axis=1)), rule, layer_scale=0.0)
    assert not res.converged
    assert res.error_estimate > 1e-14


def test_exterior_rejects_non_finite_integrand():
    with pytest.raises(Q.QuadratureError):
        Q.integrate_exterior(lambda x: np.full(len(x), np.inf))


@pytest.mark.parametrize("probe, h", [
    (lambda x: np.linalg.norm(x, axis=1) ** -4, 0.0),
    (lambda x: np.exp(-50 * (np.linalg.norm(x, axis=1) - 1)) / np.linalg.norm(x, axis=1) ** 2, 50.0),
])
def test_refinement_monotonicity_on_probes(probe, h):
    rule = Q.VolumeRule()
    a = Q.integrate_exterior(probe, rule, h)
    b = Q.integrate_exterior(probe, rule.refined(), h)
    assert abs(a.value - b.value) <= max(a.error_estimate, 1e-15)


def dense_uniform(h, n_panels=1000, order=8):
    """Brute force: uniform composite Gauss-Legendre in u for r = 1 + u / (1 - u)."""
    dirs, w = Q.SurfaceRule(6, 12).nodes()
    xg, wg = legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    half = 0.5 * np.diff(edges)
    u = (edges[:-1, None] + half[:, None] * (xg + 1)).ravel()
    wu = (half[:, None] * wg).ravel()
    r = 1 + u / (1 - u)
    jac = 1 / (1 - u) ** 2
    total = 0.0
    for chunk in np.array_split(np.arange(len(r)), 20):
        pts = (r[chunk, None, None] * dirs[None]).reshape(-1, 3)
        k = TH.reduced_kernels(pts, h)[:, 1, :].sum(axis=-1).reshape(len(chunk), len(w))
        total += np.sum((k @ w) * r[chunk] ** 2 * jac[chunk] * wu[chunk])
    return total


@pytest.mark.parametrize("h", [1.0, 10.0, 100.0])
def test_layer_rule_agrees_with_dense_uniform_rule(h):
    res = TH.thrust_reduced(F.ModelParams(h), Q.VolumeRule())
    assert abs(res.G[1] - dense_uniform(h)) < 10 * 1e-6
