"""Closed-form flow and deformation fields around the unit sphere.

All quantities are dimensionless (lengths scaled by the sphere radius, time by
the inverse oscillation frequency). Fields are evaluated in Cartesian
components on batched points ``x`` of shape ``(..., 3)``; Jacobians use the
derivative-first convention of :mod:`swimthrust.tensors`,
``J[..., i, j] = d v_j / d x_i``.

The catalog:

* ``psi = x_1 / r^3`` -- harmonic dipole potential, ``a = grad psi``.
* ``G_1, G_2`` -- azimuthal torsional oscillation profiles ``G(r) sin(theta) e_phi``
  decaying like ``exp(-h (r - 1))``.
* ``h^(i), p^(i)`` -- steady Stokes flow past the unit sphere translating along
  ``e_i`` (unit velocity on the surface).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import tensors as T

#: density-matched body, m / a^3 = volume of the unit ball
DEFAULT_MASS_RATIO = 4.0 * math.pi / 3.0

_ROT = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
_DOMAIN_SLACK = 1e-12


class DomainError(ValueError):
    """Raised when a field is evaluated inside the body (r < 1)."""


@dataclass(frozen=True)
class SpacePoint:
    """A point with paired Cartesian and spherical representations.

    The zenith is ``e_3``: ``x = r (sin t cos p, sin t sin p, cos t)`` with
    polar angle ``t`` in [0, pi] and azimuth ``p`` in [0, 2 pi).
    """

    cartesian: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cartesian", T.as_vec(self.cartesian).copy())

    @classmethod
    def from_spherical(cls, r: float, theta: float, phi: float) -> "SpacePoint":
        st = math.sin(theta)
        return cls(np.array([r * st * math.cos(phi), r * st * math.sin(phi), r * math.cos(theta)]))

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.cartesian))

    @property
    def theta(self) -> float:
        x1, x2, x3 = self.cartesian
        return math.atan2(math.hypot(x1, x2), x3)

    @property
    def phi(self) -> float:
        return math.atan2(self.cartesian[1], self.cartesian[0]) % (2.0 * math.pi)

    @property
    def spherical(self) -> tuple[float, float, float]:
        return self.r, self.theta, self.phi


@dataclass(frozen=True)
class ModelParams:
    """Stokes number and body mass ratio.

    ``h = sqrt(omega / (2 nu)) a``; the dimensionless body mass entering the
    rigid-body equation is ``M = 2 (m / a^3) h^2``.

    ``g1_fault`` perturbs the ``2 h^2 r`` coefficient of the torsional profile
    ``g_1``. It exists only so tests can check that the verification suite
    notices a broken field; leave it at zero.
    """

    h: float
    mass_ratio: float = DEFAULT_MASS_RATIO
    g1_fault: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h >= 0):
            raise ValueError(f"h must be a finite number >= 0, got {self.h}")
        if not (math.isfinite(self.mass_ratio) and self.mass_ratio > 0):
            raise ValueError(f"mass_ratio must be > 0, got {self.mass_ratio}")

    @property
    def M(self) -> float:
        return 2.0 * self.mass_ratio * self.h**2


def points(p) -> np.ndarray:
    """Coerce a SpacePoint or array-like of points to a float array ``(..., 3)``."""
    if isinstance(p, SpacePoint):
        return p.cartesian
    return T.as_vec(p)


def _radius(x: np.ndarray, check: bool = True) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    if check and np.any(r < 1.0 - _DOMAIN_SLACK):
        raise DomainError(f"point inside the body: min r = {r.min():.6g} < 1")
    return r


# ---------------------------------------------------------------------------
# dipole


def dipole_potential(p) -> np.ndarray:
    """``psi = sin(theta) cos(phi) / r^2``, identically ``x_1 / r^3``."""
    x = points(p)
    r = _radius(x)
    return x[..., 0] / r**3


def field_a(p) -> tuple[np.ndarray, np.ndarray]:
    """Value and Jacobian of ``a = grad psi``.

    ``a_j = delta_1j / r^3 - 3 x_1 x_j / r^5`` and the Jacobian is the
    (symmetric, traceless) Hessian of ``psi``.
    """
    x = points(p)
    r = _radius(x)[..., None]
    x1 = x[..., :1]
    e1 = T.BASIS[0]
    val = e1 / r**3 - 3.0 * x1 * x / r**5
    r_ = r[..., None]
    x1_ = x1[..., None]
    jac = (
        -3.0 * (T.dyad(x, np.broadcast_to(e1, x.shape)) + T.dyad(np.broadcast_to(e1, x.shape), x)) / r_**5
        - 3.0 * x1_ * T.IDENTITY / r_**5
        + 15.0 * x1_ * T.dyad(x, x) / r_**7
    )
    return val, jac


# ---------------------------------------------------------------------------
# torsional oscillation


def torsional_profiles(r, h: float, g1_fault: float = 0.0):
    """Radial profiles ``(g_1, g_2, G_1, G_2)`` of the torsional fields.

    ``G_k(r)`` multiplies ``sin(theta) e_phi``. At ``r = 1``: ``g_1 = 1``,
    ``g_2 = 0``, ``G_1 = 1``, ``G_2 = 0`` for every ``h``.
    """
    r = np.asarray(r, dtype=float)
    d = 1.0 + 2.0 * h + 2.0 * h * h
    g1 = (1.0 + h * (r + 1.0) + (2.0 + g1_fault) * h * h * r) / d
    g2 = h * (r - 1.0) / d
    env = np.exp(-h * (r - 1.0)) / r**2
    c, s = np.cos(h * (r - 1.0)), np.sin(h * (r - 1.0))
    return g1, g2, env * (g1 * c + g2 * s), env * (g1 * s - g2 * c)


def _torsional_derivatives(r, h: float, g1_fault: float = 0.0):
    """``(G_1, G_1', G_2, G_2')`` as functions of r."""
    d = 1.0 + 2.0 * h + 2.0 * h * h
    g1 = (1.0 + h * (r + 1.0) + (2.0 + g1_fault) * h * h * r) / d
    g2 = h * (r - 1.0) / d
    dg1 = (h + (2.0 + g1_fault) * h * h) / d
    dg2 = h / d
    arg = h * (r - 1.0)
    c, s = np.cos(arg), np.sin(arg)
    env = np.exp(-arg) / r**2
    denv = -(h + 2.0 / r)  # env' / env
    u = g1 * c + g2 * s
    w = g1 * s - g2 * c
    du = dg1 * c - g1 * h * s + dg2 * s + g2 * h * c
    dw = dg1 * s + g1 * h * c - dg2 * c + g2 * h * s
    return env * u, env * (du + denv * u), env * w, env * (dw + denv * w)


def _azimuthal(x, r, G, dG):
    """Value and Jacobian of ``G(r) sin(theta) e_phi = (G / r) (-x_2, x_1, 0)``."""
    f = (G / r)[..., None]
    df = (dG / r - G / r**2)[..., None]
    wx = T.mat_vec(_ROT, x)
    val = f * wx
    jac = df[..., None] * T.dyad(x / r[..., None], wx) + f[..., None] * T.transpose(_ROT)
    return val, jac


def fields_G(p, h: float, g1_fault: float = 0.0):
    """Values and Jacobians of both torsional fields: ``((G1, dG1), (G2, dG2))``."""
    x = points(p)
    r = _radius(x)
    G1, dG1, G2, dG2 = _torsional_derivatives(r, h, g1_fault)
    return _azimuthal(x, r, G1, dG1), _azimuthal(x, r, G2, dG2)


# ---------------------------------------------------------------------------
# steady Stokes flow past the sphere


def stokes_aux(i: int, p):
    """Translating-sphere Stokes solution ``(h^(i), grad h^(i), p^(i), grad p^(i))``.

    ``i`` is the axis index 1, 2 or 3. ``h^(i)_l = A(r) x_i x_l + B(r) delta_il``
    with ``A = 3/4 (r^-3 - r^-5)`` and ``B = 1/4 (3 r^-1 + r^-3)``; the
    pressure is ``p^(i) = 3/2 x_i / r^3``.
    """
    if i not in (1, 2, 3):
        raise ValueError(f"axis index must be 1, 2 or 3, got {i}")
    x = points(p)
    r = _radius(x)
    ei = np.broadcast_to(T.BASIS[i - 1], x.shape)
    xi = x[..., i - 1]
    A = 0.75 * (r**-3 - r**-5)
    B = 0.25 * (3.0 / r + r**-3)
    dA = 0.75 * (-3.0 * r**-4 + 5.0 * r**-6)
    dB = 0.25 * (-3.0 * r**-2 - 3.0 * r**-4)
    val = (A * xi)[..., None] * x + B[..., None] * ei
    xhat = x / r[..., None]
    jac = (
        (dA * xi)[..., None, None] * T.dyad(xhat, x)
        + A[..., None, None] * (T.dyad(ei, x) + xi[..., None, None] * T.IDENTITY)
        + dB[..., None, None] * T.dyad(xhat, ei)
    )
    pres = 1.5 * xi / r**3
    gpres = 1.5 * (ei / r[..., None] ** 3 - 3.0 * xi[..., None] * x / r[..., None] ** 5)
    return val, jac, pres, gpres


# ---------------------------------------------------------------------------
# field containers


VectorFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class SteadyField:
    """A time-independent vector field: ``evaluate(x) -> (value, jacobian)``.

    Fields support addition and scalar multiplication so harmonic parts can be
    assembled from the catalog above.
    """

    fn: VectorFn
    name: str = ""

    def evaluate(self, p):
        return self.fn(points(p))

    def value(self, p) -> np.ndarray:
        return self.evaluate(p)[0]

    def jacobian(self, p) -> np.ndarray:
        return self.evaluate(p)[1]

    def __add__(self, other: "SteadyField") -> "SteadyField":
        def fn(x):
            v1, j1 = self.fn(x)
            v2, j2 = other.fn(x)
            return v1 + v2, j1 + j2

        return SteadyField(fn, f"({self.name} + {other.name})")

    def __sub__(self, other: "SteadyField") -> "SteadyField":
        return self + (-1.0) * other

    def __rmul__(self, c: float) -> "SteadyField":
        c = float(c)

        def fn(x):
            v, j = self.fn(x)
            return c * v, c * j

        return SteadyField(fn, f"{c:g}*{self.name}")

    def __neg__(self) -> "SteadyField":
        return (-1.0) * self

    @staticmethod
    def constant(vec, name: str = "const") -> "SteadyField":
        vec = T.as_vec(vec).copy()

        def fn(x):
            shape = x.shape[:-1]
            return np.broadcast_to(vec, shape + (3,)).copy(), np.zeros(shape + (3, 3))

        return SteadyField(fn, name)

    @staticmethod
    def zero() -> "SteadyField":
        return SteadyField.constant(np.zeros(3), "0")


@dataclass(frozen=True)
class ScalarField:
    """A time-independent scalar field: ``evaluate(x) -> (value, gradient)``."""

    fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    name: str = ""

    def evaluate(self, p):
        return self.fn(points(p))

    def __rmul__(self, c: float) -> "ScalarField":
        c = float(c)

        def fn(x):
            v, g = self.fn(x)
            return c * v, c * g

        return ScalarField(fn, f"{c:g}*{self.name}")

    @staticmethod
    def zero() -> "ScalarField":
        return ScalarField(lambda x: (np.zeros(x.shape[:-1]), np.zeros(x.shape)), "0")


@dataclass(frozen=True)
class HarmonicField:
    """First-harmonic field ``A(x) cos t + B(x) sin t``."""

    cos_part: SteadyField
    sin_part: SteadyField

    def evaluate(self, p, t: float):
        x = points(p)
        va, ja = self.cos_part.evaluate(x)
        vb, jb = self.sin_part.evaluate(x)
        c, s = math.cos(t), math.sin(t)
        return c * va + s * vb, c * ja + s * jb

    def time_derivative(self) -> "HarmonicField":
        # d/dt (A cos t + B sin t) = B cos t - A sin t
        return HarmonicField(self.sin_part, -self.cos_part)

    def __add__(self, other: "HarmonicField") -> "HarmonicField":
        return HarmonicField(self.cos_part + other.cos_part, self.sin_part + other.sin_part)

    def __sub__(self, other: "HarmonicField") -> "HarmonicField":
        return HarmonicField(self.cos_part - other.cos_part, self.sin_part - other.sin_part)


@dataclass(frozen=True)
class HarmonicScalar:
    """First-harmonic scalar field ``A(x) cos t + B(x) sin t``."""

    cos_part: ScalarField
    sin_part: ScalarField

    def evaluate(self, p, t: float):
        x = points(p)
        va, ga = self.cos_part.evaluate(x)
        vb, gb = self.sin_part.evaluate(x)
        c, s = math.cos(t), math.sin(t)
        return c * va + s * vb, c * ga + s * gb


# ---------------------------------------------------------------------------
# catalog as SteadyField objects


def a_field() -> SteadyField:
    return SteadyField(field_a, "a")


def G_fields(h: float, g1_fault: float = 0.0) -> tuple[SteadyField, SteadyField]:
    def g1(x):
        return fields_G(x, h, g1_fault)[0]

    def g2(x):
        return fields_G(x, h, g1_fault)[1]

    return SteadyField(g1, "G1"), SteadyField(g2, "G2")


def stokes_field(i: int) -> tuple[SteadyField, ScalarField]:
    def vel(x):
        v, j, _, _ = stokes_aux(i, x)
        return v, j

    def pres(x):
        _, _, q, gq = stokes_aux(i, x)
        return q, gq

    return SteadyField(vel, f"h{i}"), ScalarField(pres, f"p{i}")


def psi_field() -> ScalarField:
    def fn(x):
        return dipole_potential(x), field_a(x)[0]

    return ScalarField(fn, "psi")


P0_SIGNS = {"paper": -1.0, "flipped": 1.0}


@dataclass(frozen=True)
class Model:
    """Harmonic fields of the stretch-plus-torsion swimmer.

    ``s`` is the displacement, ``u_star = d s / dt`` the boundary velocity,
    ``V0`` the leading-order flow with pressure ``p0`` and ``zeta0`` the
    (spatially constant) leading-order body velocity.
    """

    params: ModelParams
    p0_sign: float
    s: HarmonicField
    u_star: HarmonicField
    V0: HarmonicField
    p0: HarmonicScalar
    zeta0: HarmonicField
    extras: dict = field(default_factory=dict, compare=False)


def build_model(params: ModelParams, p0_sign: str | float = "paper") -> Model:
    """Assemble ``s, u*, V0, p0, zeta0`` for the given parameters.

    ``p0 = sign * 2 h^2 psi sin t`` with ``sign = -1`` for ``"paper"`` and
    ``+1`` for ``"flipped"``. ``zeta0 = -(4 pi / 3M) cos t e_1`` and the
    displacement carries the matching constant ``-int zeta0 dt``.
    """
    if params.h <= 0:
        raise ValueError("build_model needs h > 0: the body mass M = 2 (m/a^3) h^2 vanishes at h = 0")
    sign = P0_SIGNS[p0_sign] if isinstance(p0_sign, str) else float(p0_sign)
    if sign not in (-1.0, 1.0):
        raise ValueError(f"p0 sign must be +1 or -1, got {p0_sign}")
    h = params.h
    a = a_field()
    G1, G2 = G_fields(h, params.g1_fault)
    kappa = 4.0 * math.pi / (3.0 * params.M)
    # -int zeta0 dt = +kappa sin t e_1
    drift = SteadyField.constant(kappa * T.BASIS[0], "drift")
    s = HarmonicField(G1, a + G2 + drift)
    V0 = HarmonicField(a + G2, -G1)
    zeta0 = HarmonicField(SteadyField.constant(-kappa * T.BASIS[0], "zeta0"), SteadyField.zero())
    p0 = HarmonicScalar(ScalarField.zero(), (sign * 2.0 * h * h) * psi_field())
    return Model(params, sign, s, s.time_derivative(), V0, p0, zeta0, {"a": a, "G1": G1, "G2": G2})


# ---------------------------------------------------------------------------
# finite-difference oracles (tests and verification only)


def fd_jacobian(value_fn: Callable[[np.ndarray], np.ndarray], p, step: float | None = None) -> np.ndarray:
    """Fourth-order central-difference Jacobian ``J[..., i, j] = d v_j / d x_i``.

    The default step is ``1e-5 * max(1, r)`` per point.
    """
    x = points(p)
    if step is None:
        hs = 1e-5 * np.maximum(1.0, np.linalg.norm(x, axis=-1))[..., None]
    else:
        hs = np.full(x.shape[:-1] + (1,), float(step))
    rows = []
    for i in range(3):
        d = hs * T.BASIS[i]
        fp1, fm1 = value_fn(x + d), value_fn(x - d)
        fp2, fm2 = value_fn(x + 2 * d), value_fn(x - 2 * d)
        rows.append((8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * hs))
    return np.stack(rows, axis=-2)


def fd_gradient(scalar_fn: Callable[[np.ndarray], np.ndarray], p, step: float | None = None) -> np.ndarray:
    """Fourth-order central-difference gradient of a scalar field."""
    return fd_jacobian(lambda y: scalar_fn(y)[..., None], p, step)[..., 0]


def grad_jacobian(jac_fn: Callable[[np.ndarray], np.ndarray], p, rel_step: float = 1e-4,
                  richardson: bool = True) -> np.ndarray:
    """Derivatives of an exact Jacobian: ``D[..., l, j, k] = d_l J_jk``.

    Second-order central differences with step ``rel_step * r``; with
    ``richardson`` the steps ``s`` and ``2 s`` are combined to cancel the
    leading error term. Near the surface the step shrinks so that no stencil
    point falls inside the body.
    """
    x = points(p)
    r = np.linalg.norm(x, axis=-1)
    reach = 2.0 if richardson else 1.0
    hs = np.minimum(rel_step * r, np.maximum(r - 1.0, 0.0) / (1.25 * reach))
    hs = np.maximum(hs, 1e-300)[..., None]

    def central(scale):
        out = []
        for l in range(3):
            d = scale * hs * T.BASIS[l]
            out.append((jac_fn(x + d) - jac_fn(x - d)) / (2.0 * scale * hs[..., None]))
        return np.stack(out, axis=-3)

    d1 = central(1.0)
    if not richardson:
        return d1
    d2 = central(2.0)
    return (4.0 * d1 - d2) / 3.0


def laplacian(jac_fn: Callable[[np.ndarray], np.ndarray], p, rel_step: float = 1e-4,
              richardson: bool = True) -> np.ndarray:
    """Vector Laplacian ``(Lap v)_k = d_l (grad v)_lk`` by differencing an exact Jacobian."""
    D = grad_jacobian(jac_fn, p, rel_step, richardson)
    return np.einsum("...llk->...k", D)
