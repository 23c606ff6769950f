import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swimthrust import fields as F
from swimthrust import tensors as T
from conftest import random_exterior_points, random_surface_points


@given(st.floats(1.0, 50.0), st.floats(0.01, math.pi - 0.01), st.floats(0.0, 2 * math.pi - 1e-9))
def test_space_point_round_trip(r, theta, phi):
    p = F.SpacePoint.from_spherical(r, theta, phi)
    got = p.spherical
    assert got[0] == pytest.approx(r, rel=1e-12)
    assert got[1] == pytest.approx(theta, abs=1e-10)
    assert math.cos(got[2] - phi) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("r, theta, phi, expected", [
    (1.0, math.pi / 2, 0.0, 1.0),
    (2.0, math.pi / 2, 0.0, 0.25),
    (3.0, 0.0, 1.3, 0.0),
    (1.7, math.pi, 0.2, 0.0),
])
def test_dipole_potential_examples(r, theta, phi, expected):
    assert F.dipole_potential(F.SpacePoint.from_spherical(r, theta, phi)) == pytest.approx(expected, abs=1e-15)


def test_dipole_potential_rejects_interior_points():
    with pytest.raises(F.DomainError):
        F.dipole_potential([0.5, 0.0, 0.0])
    with pytest.raises(F.DomainError):
        F.fields_G([0.0, 0.3, 0.2], 1.0)


def test_field_a_on_axis():
    a, Ja = F.field_a([1.0, 0.0, 0.0])
    np.testing.assert_allclose(a, [-2.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(Ja, Ja.T, atol=1e-15)


def test_field_a_jacobian_vs_finite_differences():
    p = np.array([1.5, 0.7, -0.3])
    _, Ja = F.field_a(p)
    fd = F.fd_jacobian(lambda x: F.field_a(x)[0], p)
    np.testing.assert_allclose(Ja, fd, atol=1e-8)
    assert abs(np.trace(Ja)) < 1e-14  # psi is harmonic


def test_field_a_is_gradient_of_psi(rng):
    x = random_exterior_points(rng, 40)
    np.testing.assert_allclose(F.field_a(x)[0], F.fd_gradient(F.dipole_potential, x), atol=1e-8)


@pytest.mark.parametrize("h", [0.0, 0.3, 1.0, 7.0, 40.0])
def test_torsional_profiles_boundary_values(h):
    g1, g2, G1, G2 = F.torsional_profiles(1.0, h)
    assert (float(g1), float(g2), float(G1), float(G2)) == pytest.approx((1.0, 0.0, 1.0, 0.0), abs=1e-15)


def test_torsional_profiles_rigid_rotation_limit():
    r = np.linspace(1.0, 30.0, 50)
    _, _, G1, G2 = F.torsional_profiles(r, 0.0)
    np.testing.assert_allclose(G1, r**-2, rtol=1e-15)
    np.testing.assert_array_equal(G2, 0.0)


@pytest.mark.parametrize("h", [0.5, 2.0, 10.0])
def test_torsional_profiles_solve_radial_ode(h):
    # independent 1D oracle: f(r) sin(theta) e_phi has vector Laplacian
    # (f'' + 2 f'/r - 2 f/r^2) sin(theta) e_phi, and the torsional pair obeys
    # Lap G1 = 2 h^2 G2, Lap G2 = -2 h^2 G1
    r = np.linspace(1.05, 4.0, 30)
    step = 1e-3 / max(h, 1.0)

    def op(k):
        f = lambda rr: F.torsional_profiles(rr, h)[k]
        d1 = (f(r + step) - f(r - step)) / (2 * step)
        d2 = (f(r + step) - 2 * f(r) + f(r - step)) / step**2
        return d2 + 2 * d1 / r - 2 * f(r) / r**2

    _, _, G1, G2 = F.torsional_profiles(r, h)
    scale = 2 * h * h * max(np.abs(G1).max(), np.abs(G2).max())
    assert np.max(np.abs(op(2) - 2 * h * h * G2)) < 1e-4 * scale
    assert np.max(np.abs(op(3) + 2 * h * h * G1)) < 1e-4 * scale


@pytest.mark.parametrize("h", [0.0, 0.5, 5.0, 20.0])
def test_G_jacobians_vs_finite_differences(h, rng):
    x = random_exterior_points(rng, 30, r_max=3.0)
    for k, (val, jac) in enumerate(F.fields_G(x, h)):
        fd = F.fd_jacobian(lambda y: F.fields_G(y, h)[k][0], x)
        scale = max(np.abs(jac).max(), 1e-300)
        assert np.max(np.abs(jac - fd)) <= 1e-7 * max(scale, 1.0)
        assert np.max(np.abs(T.trace(jac))) < 1e-12


def test_G_fields_are_azimuthal(rng):
    x = random_exterior_points(rng, 20)
    (v1, _), (v2, _) = F.fields_G(x, 3.0)
    np.testing.assert_allclose(T.dot(v1, x), 0.0, atol=1e-15)
    np.testing.assert_allclose(v2[:, 2], 0.0, atol=1e-15)


def test_G2_surface_conditions(rng):
    x = random_surface_points(rng, 50)
    _, (v2, J2) = F.fields_G(x, 4.0)
    np.testing.assert_allclose(v2, 0.0, atol=1e-15)
    np.testing.assert_allclose(T.mat_vec(J2, -x), 0.0, atol=1e-13)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_stokes_aux_boundary_and_far_field(i, rng):
    x = random_surface_points(rng, 50)
    val, _, _, _ = F.stokes_aux(i, x)
    np.testing.assert_allclose(val, np.broadcast_to(np.eye(3)[i - 1], val.shape), atol=1e-14)
    far = F.stokes_aux(i, 1e6 * x)[0]
    assert np.abs(far).max() < 1e-5


def test_stokes_aux_example():
    val, _, p, _ = F.stokes_aux(1, [2.0, 0.0, 0.0])
    np.testing.assert_allclose(val, [11 / 16, 0.0, 0.0], rtol=1e-14)
    assert p == pytest.approx(1.5 / 4)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_stokes_aux_solves_stokes(i, rng):
    x = random_exterior_points(rng, 50)
    _, jac, _, gp = F.stokes_aux(i, x)
    lap = F.laplacian(lambda y: F.stokes_aux(i, y)[1], x)
    assert np.max(np.abs(lap - gp)) < 1e-7
    assert np.max(np.abs(T.trace(jac))) < 1e-12
    fd = F.fd_jacobian(lambda y: F.stokes_aux(i, y)[0], x)
    np.testing.assert_allclose(jac, fd, atol=1e-8)


def test_stokes_aux_rejects_bad_axis():
    with pytest.raises(ValueError):
        F.stokes_aux(0, [2.0, 0.0, 0.0])


def test_harmonic_field_time_derivative():
    a = F.a_field()
    G1, _ = F.G_fields(1.0)
    f = F.HarmonicField(G1, a)
    x = np.array([[1.3, -0.4, 0.8]])
    t, dt = 0.7, 1e-5
    fd = (f.evaluate(x, t + dt)[0] - f.evaluate(x, t - dt)[0]) / (2 * dt)
    np.testing.assert_allclose(f.time_derivative().evaluate(x, t)[0], fd, atol=1e-9)


@pytest.mark.parametrize("sign", ["paper", "flipped"])
def test_model_boundary_identity(sign, rng):
    model = F.build_model(F.ModelParams(2.0), sign)
    x = random_surface_points(rng, 100)
    for t in rng.uniform(0, 2 * np.pi, 5):
        v = model.V0.evaluate(x, t)[0]
        u = model.u_star.evaluate(x, t)[0]
        z = model.zeta0.evaluate(x, t)[0]
        assert np.abs(v - u - z).max() < 1e-12


def test_model_requires_positive_h():
    with pytest.raises(ValueError):
        F.build_model(F.ModelParams(0.0))
    with pytest.raises(ValueError):
        F.ModelParams(-1.0)
    with pytest.raises(ValueError):
        F.ModelParams(1.0, mass_ratio=0.0)


def test_model_mass():
    params = F.ModelParams(3.0, mass_ratio=2.0)
    assert params.M == pytest.approx(36.0)


def test_laplacian_near_surface_stays_outside():
    x = np.array([[1.0 + 1e-7, 0.0, 0.0], [0.0, 1.0, 0.0]])
    # the stencil shrinks with the gap so no evaluation point enters the body
    F.laplacian(lambda y: F.stokes_aux(1, y)[1], x)
