"""Time-averaged self-propulsion thrust of the stretch-plus-torsion sphere.

Two independent evaluation paths are provided.

*Reduced* (:func:`thrust_reduced`) integrates the closed-form kernel built
from ``grad a``, ``grad G_1``, ``grad G_2`` and the Stokes fields ``h^(i)``::

    K_i = grad a : (grad G1 . grad h) - D(G1) : (grad a . grad h)
          + 1/2 [grad a . W1 - W1 . grad a] : D(h)
          - h^2 h_k (grad G2)_kl a_l
    R_i = D(G2) : (grad G1 . grad h) - D(G1) : (grad G2 . grad h)
          + 1/2 [P + P^T - Q - Q^T] : D(h)

with ``W1 = grad G1 - (grad G1)^T``, ``P = grad G1 . grad G2``,
``Q = grad G2 . grad G1`` and ``h = h^(i)``. The thrust is
``G_i = int (K_i + R_i)``; ``R`` is also reported on its own.

*Raw* (:func:`thrust_raw`) averages and integrates the original functionals
term by term. Writing ``<f g>`` for the period average, the terms are::

    G1_i = - int <(grad s)^T : grad V0> p^(i)
    I1_i = - int 2 h^2 <(V0 - u* - zeta0) . grad V0> . h^(i)
    I2_i = - int <d_j s_l d_l T_jk> h^(i)_k
    I3_i = + int <grad s . grad V0 + (grad s . grad V0)^T> : D(h^(i))
    I4_i = - e_i . int_S <T . H(s)^T> . n

with ``T = T(V0, p0) = 2 D(V0) - p0 I`` and ``H(s) = div s I - (grad s)^T``.
``(grad s)^T : grad V0`` is ``d_l s_i d_i V0_l``. Third derivatives of the
stress come from differencing exact Jacobians (Richardson, two steps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fields as F
from . import quadrature as Q
from . import tensors as T

AXES = (1, 2, 3)


# ---------------------------------------------------------------------------
# first-harmonic algebra


@dataclass(frozen=True)
class Harmonic:
    """Pointwise values of ``A cos t + B sin t`` (arrays of any matching shape)."""

    cos: np.ndarray
    sin: np.ndarray

    def at(self, t: float) -> np.ndarray:
        return math.cos(t) * self.cos + math.sin(t) * self.sin

    def dt(self) -> "Harmonic":
        return Harmonic(self.sin, -self.cos)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Harmonic":
        """Apply a *linear* pointwise map to both parts."""
        return Harmonic(fn(self.cos), fn(self.sin))

    def __add__(self, other: "Harmonic") -> "Harmonic":
        return Harmonic(self.cos + other.cos, self.sin + other.sin)

    def __sub__(self, other: "Harmonic") -> "Harmonic":
        return Harmonic(self.cos - other.cos, self.sin - other.sin)

    def __neg__(self) -> "Harmonic":
        return Harmonic(-self.cos, -self.sin)


def time_average(f: Harmonic, g: Harmonic, combine: Callable = np.multiply) -> np.ndarray:
    """Period average of ``combine(f(t), g(t))`` for a bilinear ``combine``.

    ``<cos^2> = <sin^2> = 1/2`` and ``<sin cos> = 0`` give
    ``1/2 [combine(A_f, A_g) + combine(B_f, B_g)]``.
    """
    return 0.5 * (combine(f.cos, g.cos) + combine(f.sin, g.sin))


def average_product(f: Callable[[np.ndarray], Harmonic], g: Callable[[np.ndarray], Harmonic],
                    combine: Callable = np.multiply) -> Callable[[np.ndarray], np.ndarray]:
    """Steady evaluator ``x -> <combine(f(x, t), g(x, t))>`` for harmonic evaluators ``f, g``."""

    def evaluate(x):
        return time_average(f(x), g(x), combine)

    return evaluate


def harmonic_values(field: F.HarmonicField) -> Callable[[np.ndarray], tuple[Harmonic, Harmonic]]:
    """Evaluator ``x -> (value, jacobian)`` harmonics of a :class:`HarmonicField`."""

    def evaluate(x):
        vc, jc = field.cos_part.evaluate(x)
        vs, js = field.sin_part.evaluate(x)
        return Harmonic(vc, vs), Harmonic(jc, js)

    return evaluate


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class ThrustResult:
    """Thrust at one Stokes number.

    ``G = G0 + G1_vec`` is the total thrust (``R`` is already included in
    ``G``) and ``gamma1 = G / (6 pi)`` the leading-order mean velocity
    coefficient.
    """

    h: float
    G: np.ndarray
    G0: np.ndarray
    G1_vec: np.ndarray
    R: np.ndarray
    error_estimate: float
    n_evals: int
    converged: bool
    path: str
    breakdown: dict = field(default_factory=dict, compare=False)

    @property
    def gamma1(self) -> np.ndarray:
        return propulsion_velocity(self.G)


def propulsion_velocity(G) -> np.ndarray:
    """``gamma_1 = M^-1 . G`` with the sphere's resistance ``M = 6 pi I``."""
    return np.asarray(G, dtype=float) / (6.0 * math.pi)


# ---------------------------------------------------------------------------
# reduced path


def reduced_kernels(x: np.ndarray, h: float, g1_fault: float = 0.0) -> np.ndarray:
    """Reduced kernels at points ``x``: array ``(..., 3, 3)`` indexed
    ``[..., axis, term]`` with terms ``(volume, h^2 term, R)``."""
    x = F.points(x)
    a, Ja = F.field_a(x)
    (_, J1), (_, J2) = F.fields_G(x, h, g1_fault)
    D1, D2 = T.sym(J1), T.sym(J2)
    W1 = J1 - T.transpose(J1)
    commutator = T.matmul(Ja, W1) - T.matmul(W1, Ja)
    P, Qm = T.matmul(J1, J2), T.matmul(J2, J1)
    mixed = P + T.transpose(P) - Qm - T.transpose(Qm)
    out = []
    for i in AXES:
        hv, Jh, _, _ = F.stokes_aux(i, x)
        Dh = T.sym(Jh)
        volume = T.ddot(Ja, T.matmul(J1, Jh)) - T.ddot(D1, T.matmul(Ja, Jh)) + 0.5 * T.ddot(commutator, Dh)
        layer = -h * h * T.dot(T.vec_mat(hv, J2), a)
        rest = T.ddot(D2, T.matmul(J1, Jh)) - T.ddot(D1, T.matmul(J2, Jh)) + 0.5 * T.ddot(mixed, Dh)
        out.append(np.stack([volume, layer, rest], axis=-1))
    return np.stack(out, axis=-2)


def reduced_integrand(i: int, p, params: F.ModelParams) -> np.ndarray:
    """Full reduced kernel ``K_i + R_i`` for axis ``i`` in {1, 2, 3}."""
    if i not in AXES:
        raise ValueError(f"axis index must be 1, 2 or 3, got {i}")
    k = reduced_kernels(F.points(p), params.h, params.g1_fault)
    return k[..., i - 1, :].sum(axis=-1)


def thrust_reduced(params: F.ModelParams, rule: Q.VolumeRule = Q.VolumeRule()) -> ThrustResult:
    res = Q.integrate_exterior(lambda x: reduced_kernels(x, params.h, params.g1_fault), rule, params.h)
    v = np.asarray(res.value)
    G = v.sum(axis=1)
    return ThrustResult(
        h=params.h,
        G=G,
        G0=G.copy(),
        G1_vec=np.zeros(3),
        R=v[:, 2].copy(),
        error_estimate=res.error_estimate,
        n_evals=res.n_evals,
        converged=res.converged,
        path="reduced",
        breakdown={"volume": v[:, 0].copy(), "layer": v[:, 1].copy(), "R": v[:, 2].copy()},
    )


# ---------------------------------------------------------------------------
# raw path


RAW_VOLUME_TERMS = ("G1", "I1", "I2", "I3")


def _stress_gradient(field: F.SteadyField, pressure: F.ScalarField, x, rel_step: float):
    """``d_l T_jk`` for ``T = grad v + (grad v)^T - p I`` as ``(..., l, j, k)``."""
    DJ = F.grad_jacobian(field.jacobian, x, rel_step, richardson=True)
    _, gp = pressure.evaluate(x)
    return DJ + np.swapaxes(DJ, -1, -2) - gp[..., :, None, None] * T.IDENTITY


def raw_volume_kernels(x: np.ndarray, model: F.Model, rel_step: float = 1e-4) -> np.ndarray:
    """Averaged raw volume integrands ``(..., 3, 4)`` indexed ``[..., axis, term]``
    with terms ``(G1, I1, I2, I3)``."""
    x = F.points(x)
    h = model.params.h
    s_val, s_J = harmonic_values(model.s)(x)
    V_val, V_J = harmonic_values(model.V0)(x)
    u_val, _ = harmonic_values(model.u_star)(x)
    z_val, _ = harmonic_values(model.zeta0)(x)
    dT = Harmonic(
        _stress_gradient(model.V0.cos_part, model.p0.cos_part, x, rel_step),
        _stress_gradient(model.V0.sin_part, model.p0.sin_part, x, rel_step),
    )

    # pieces shared by all axes
    sT_ddot_gradV = time_average(s_J, V_J, lambda A, B: T.ddot(T.transpose(A), B))
    slip = V_val - u_val - z_val
    inertial = time_average(slip, V_J, T.vec_mat)
    stress_work = time_average(s_J, dT, lambda S, D: np.einsum("...jl,...ljk->...k", S, D))
    X = time_average(s_J, V_J, T.matmul)
    X = X + T.transpose(X)

    out = []
    for i in AXES:
        hv, Jh, pi, _ = F.stokes_aux(i, x)
        Dh = T.sym(Jh)
        out.append(np.stack([
            -sT_ddot_gradV * pi,
            -2.0 * h * h * T.dot(inertial, hv),
            -T.dot(stress_work, hv),
            T.ddot(X, Dh),
        ], axis=-1))
    return np.stack(out, axis=-2)


def raw_surface_kernel(x: np.ndarray, n: np.ndarray, model: F.Model) -> np.ndarray:
    """Averaged surface integrand of ``I4``: ``-<T . H(s)^T> . n`` as ``(..., 3)``."""
    s_val, s_J = harmonic_values(model.s)(x)
    V_val, V_J = harmonic_values(model.V0)(x)
    pc, _ = model.p0.cos_part.evaluate(x)
    ps, _ = model.p0.sin_part.evaluate(x)
    stress = Harmonic(
        2.0 * T.sym(V_J.cos) - pc[..., None, None] * T.IDENTITY,
        2.0 * T.sym(V_J.sin) - ps[..., None, None] * T.IDENTITY,
    )

    def H(J):
        return T.trace(J)[..., None, None] * T.IDENTITY - T.transpose(J)

    Hs = s_J.map(H)
    avg = time_average(stress, Hs, lambda A, B: T.matmul(A, T.transpose(B)))
    return -T.mat_vec(avg, n)


def thrust_raw(params: F.ModelParams, rule: Q.VolumeRule = Q.VolumeRule(),
               surface_rule: Q.SurfaceRule = Q.SurfaceRule(), p0_sign: str | float = "flipped",
               rel_step: float = 1e-4) -> ThrustResult:
    """Raw-path thrust; needs ``h > 0``.

    ``p0_sign`` selects the dynamic pressure ``-2 h^2 psi sin t`` (``"paper"``)
    or ``+2 h^2 psi sin t`` (``"flipped"``, the sign that solves the unsteady
    Stokes equations for ``V_1 = a cos t``).
    """
    model = F.build_model(params, p0_sign)
    vol = Q.integrate_exterior(lambda x: raw_volume_kernels(x, model, rel_step), rule, params.h)
    surf = Q.integrate_surface(lambda x, n: raw_surface_kernel(x, n, model), surface_rule)
    v = np.asarray(vol.value)
    I4 = np.asarray(surf.value)
    terms = {name: v[:, k].copy() for k, name in enumerate(RAW_VOLUME_TERMS)}
    terms["I4"] = I4
    G1 = terms["G1"]
    G0 = terms["I1"] + terms["I2"] + terms["I3"] + I4
    return ThrustResult(
        h=params.h,
        G=G0 + G1,
        G0=G0,
        G1_vec=G1,
        R=np.full(3, np.nan),
        error_estimate=vol.error_estimate + surf.error_estimate,
        n_evals=vol.n_evals + surf.n_evals,
        converged=vol.converged and surf.converged,
        path="raw",
        breakdown=terms,
    )
