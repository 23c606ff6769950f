"""Numerical verification of the field identities behind the thrust formulas.

Every check samples points from a seeded generator, evaluates a residual and
compares it with an explicit tolerance. Results are collected in a
:class:`VerificationReport`, which renders as a table or as JSON.

Entries flagged ``informational`` are reported but do not decide the overall
verdict; they record quantities whose expected value is disputed (for
instance the residual under the losing sign of the dynamic pressure).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import fields as F
from . import quadrature as Q
from . import tensors as T
from . import thrust as TH

DEFAULT_SEED = 20240613


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float
    samples: int
    informational: bool = False
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


@dataclass
class VerificationReport:
    seed: int
    checks: list[Check] = field(default_factory=list)

    def extend(self, checks: Iterable[Check]) -> None:
        self.checks.extend(checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.informational and not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_table(self) -> str:
        width = max([len(c.name) for c in self.checks] + [5])
        lines = [f"{'check':<{width}}  {'residual':>10}  {'tol':>8}  {'n':>5}  status", "-" * (width + 40)]
        for c in self.checks:
            status = ("PASS" if c.passed else "FAIL") + (" (info)" if c.informational else "")
            lines.append(f"{c.name:<{width}}  {c.residual:10.3e}  {c.tolerance:8.1e}  {c.samples:5d}  {status}")
            if c.note:
                lines.append(f"{'':<{width}}    {c.note}")
        lines.append("-" * (width + 40))
        lines.append(f"seed {self.seed}: {'ALL CHECKS PASSED' if self.passed else f'{len(self.failures())} CHECK(S) FAILED'}")
        return "\n".join(lines)

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "passed": self.passed,
            "checks": [dict(asdict(c), passed=c.passed) for c in self.checks],
        }
        return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# sampling


def sample_points(rng: np.random.Generator, n: int, r_min: float = 1.001, r_max: float = 100.0) -> np.ndarray:
    """Points with log-uniform radius in ``[r_min, r_max]`` and uniform direction."""
    r = np.exp(rng.uniform(math.log(r_min), math.log(r_max), n))
    return r[:, None] * sample_directions(rng, n)


def sample_directions(rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.normal(size=(n, 3))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def _max(a) -> float:
    return float(np.max(np.abs(a)))


# ---------------------------------------------------------------------------
# steady Stokes fields and the resistance matrix


def check_stokes_aux(rng: np.random.Generator, n_surface: int = 200, n_volume: int = 100,
                     tol_boundary: float = 1e-12, tol_momentum: float = 1e-7,
                     tol_div: float = 1e-9) -> list[Check]:
    """Boundary values, momentum balance and incompressibility of ``h^(i), p^(i)``."""
    xs = sample_directions(rng, n_surface)
    xv = sample_points(rng, n_volume)
    bnd = mom = div = 0.0
    for i in TH.AXES:
        v, _, _, _ = F.stokes_aux(i, xs)
        bnd = max(bnd, _max(v - T.BASIS[i - 1]))
        _, J, _, gp = F.stokes_aux(i, xv)
        lap = F.laplacian(lambda y: F.stokes_aux(i, y)[1], xv)
        mom = max(mom, _max(lap - gp))
        div = max(div, _max(T.trace(J)))
    return [
        Check("stokes_aux.boundary_equals_e_i", bnd, tol_boundary, 3 * n_surface),
        Check("stokes_aux.momentum_residual", mom, tol_momentum, 3 * n_volume),
        Check("stokes_aux.divergence", div, tol_div, 3 * n_volume),
    ]


def compute_M(rule: Q.SurfaceRule = Q.SurfaceRule()) -> np.ndarray:
    """``M_ji = int_S T_jk(h^(i), p^(i)) n_k`` with ``n = -e_r``."""
    M = np.zeros((3, 3))
    for i in TH.AXES:
        def traction(x, n, i=i):
            _, J, p, _ = F.stokes_aux(i, x)
            stress = J + T.transpose(J) - p[:, None, None] * T.IDENTITY
            return T.mat_vec(stress, n)

        M[:, i - 1] = np.asarray(Q.integrate_surface(traction, rule).value)
    return M


def check_M(rule: Q.SurfaceRule = Q.SurfaceRule(), tol_rel: float = 1e-6, tol_off: float = 1e-8,
            tol_refine: float = 1e-10) -> list[Check]:
    M = compute_M(rule)
    M2 = compute_M(rule.refined())
    six_pi = 6.0 * math.pi
    off = M - np.diag(np.diag(M))
    return [
        Check("M.diagonal_equals_6pi", _max(np.diag(M) / six_pi - 1.0), tol_rel, 3),
        Check("M.off_diagonal", _max(off), tol_off, 6),
        Check("M.refinement", _max(M2 - M), tol_refine, 9),
    ]


# ---------------------------------------------------------------------------
# catalog fields


def check_fields(rng: np.random.Generator, hs=(0.0, 0.5, 5.0, 20.0), n: int = 500,
                 tol_jac: float = 1e-7, tol_div: float = 1e-9, n_surface: int = 50) -> list[Check]:
    """Exact Jacobians against finite differences, solenoidality, surface values."""
    x = sample_points(rng, n, 1.01, 50.0)
    xs = sample_directions(rng, n_surface)

    def rel_err(value_fn, jac):
        fd = F.fd_jacobian(value_fn, x)
        return _max(fd - jac) / max(_max(jac), 1e-300)

    jac_err = rel_err(lambda y: F.field_a(y)[0], F.field_a(x)[1])
    div = _max(T.trace(F.field_a(x)[1]))
    sym = _max(F.field_a(x)[1] - T.transpose(F.field_a(x)[1]))
    g2_surface = g2n = 0.0
    for h in hs:
        for k in range(2):
            jac_err = max(jac_err, rel_err(lambda y: F.fields_G(y, h)[k][0], F.fields_G(x, h)[k][1]))
            div = max(div, _max(T.trace(F.fields_G(x, h)[k][1])))
        (_, _), (G2s, J2s) = F.fields_G(xs, h)
        g2_surface = max(g2_surface, _max(G2s))
        g2n = max(g2n, _max(T.mat_vec(J2s, Q.surface_normal(xs))))
    for i in TH.AXES:
        _, J, _, gp = F.stokes_aux(i, x)
        jac_err = max(jac_err, rel_err(lambda y: F.stokes_aux(i, y)[0], J))
        fd_gp = F.fd_gradient(lambda y: F.stokes_aux(i, y)[2], x)
        jac_err = max(jac_err, _max(fd_gp - gp) / _max(gp))
        div = max(div, _max(T.trace(J)))
    return [
        Check("fields.jacobian_vs_finite_differences", jac_err, tol_jac, n),
        Check("fields.divergence_free", div, tol_div, n),
        Check("fields.grad_a_symmetric", sym, 1e-12, n),
        Check("fields.G2_vanishes_on_surface", g2_surface, 1e-12, n_surface * len(hs)),
        Check("fields.grad_G2_dot_n_on_surface", g2n, 1e-9, n_surface * len(hs)),
    ]


# ---------------------------------------------------------------------------
# unsteady Stokes system


def _torsional_residual(G1: F.SteadyField, G2: F.SteadyField, h: float, x) -> float:
    # s2 = G1 cos t + G2 sin t, d_t s2 = G2 cos t - G1 sin t
    res_cos = 2 * h * h * G2.value(x) - F.laplacian(G1.jacobian, x)
    res_sin = -2 * h * h * G1.value(x) - F.laplacian(G2.jacobian, x)
    return max(_max(res_cos), _max(res_sin))


def _momentum_residual(model: F.Model, x) -> tuple[float, float]:
    """Max residual of ``2 h^2 d_t V0 - Lap V0 + grad p0`` and of ``div V0``."""
    h = model.params.h
    dV = model.V0.time_derivative()
    out = 0.0
    for part, dpart, ppart in ((model.V0.cos_part, dV.cos_part, model.p0.cos_part),
                               (model.V0.sin_part, dV.sin_part, model.p0.sin_part)):
        _, gp = ppart.evaluate(x)
        res = 2 * h * h * dpart.value(x) - F.laplacian(part.jacobian, x) + gp
        out = max(out, _max(res))
    div = max(_max(T.trace(model.V0.cos_part.jacobian(x))), _max(T.trace(model.V0.sin_part.jacobian(x))))
    return out, div


def check_unsteady_stokes(params: F.ModelParams, rng: np.random.Generator, n: int = 100,
                          tol: float = 1e-6, n_surface: int = 100) -> list[Check]:
    """Residuals of the torsional subsystem, of the full ``V0`` system for both
    signs of ``p0``, and of the boundary identity ``V0 = d_t s + zeta0``."""
    h = params.h
    x = sample_points(rng, n)
    G1, G2 = F.G_fields(h, params.g1_fault)
    tag = f"[h={h:g}]"
    checks = [Check(f"unsteady.torsional_residual{tag}", _torsional_residual(G1, G2, h, x), tol, n)]

    residuals = {}
    for sign in ("paper", "flipped"):
        model = F.build_model(params, sign)
        residuals[sign], div = _momentum_residual(model, x)
        checks.append(Check(f"unsteady.momentum_residual[p0={sign}]{tag}", residuals[sign], tol, n,
                            informational=True, note=f"scale 4h^2|a|max = {4 * h * h * _max(F.field_a(x)[0]):.3e}"))
    winners = [s for s, v in residuals.items() if v <= tol]
    checks.append(Check(f"unsteady.unique_p0_sign{tag}", 0.0 if len(winners) == 1 else 1.0, 0.5, 2,
                        note=f"satisfying sign: {', '.join(winners) or 'none'}"))
    checks.append(Check(f"unsteady.divergence{tag}", div, 1e-9, n))

    model = F.build_model(params, "paper")
    xs = sample_directions(rng, n_surface)
    ts = rng.uniform(0.0, 2 * math.pi, n_surface)
    bc = 0.0
    for xi, t in zip(xs, ts):
        V = model.V0.evaluate(xi[None], t)[0]
        u = model.u_star.evaluate(xi[None], t)[0]
        z = model.zeta0.evaluate(xi[None], t)[0]
        bc = max(bc, _max(V - u - z))
    checks.append(Check(f"unsteady.boundary_V0_equals_u_plus_zeta{tag}", bc, 1e-12, n_surface))

    # rigid-body balance M zeta0' + int_S T(V1, p0) . n = 0 at t = pi/2 (cos terms vanish)
    for sign in ("paper", "flipped"):
        m = F.build_model(params, sign)

        def traction(xq, nq, m=m):
            p = m.p0.sin_part.evaluate(xq)[0]
            return -p[:, None] * nq

        force = np.asarray(Q.integrate_surface(traction).value)
        zeta_dot = m.zeta0.time_derivative().sin_part.value(np.zeros((1, 3)))[0]
        checks.append(Check(f"unsteady.rigid_body_balance[p0={sign}]{tag}", _max(params.M * zeta_dot + force),
                            1e-9, 1, informational=True,
                            note="zeta0 = -(4 pi / 3M) cos t e_1; does not enter the thrust"))
    return checks


# ---------------------------------------------------------------------------
# cancellation identities


def check_cancellations(params_list: Iterable[F.ModelParams], rng: np.random.Generator,
                        rule: Q.VolumeRule = Q.VolumeRule(), n_surface: int = 100,
                        n_volume: int = 100) -> list[Check]:
    xs = sample_directions(rng, n_surface)
    a_s = F.field_a(xs)[0]
    grad_sq = _max(T.dot(a_s, a_s) - 1.0)

    def d6(x, n):
        psi = F.dipole_potential(x)
        _, Ja = F.field_a(x)
        return psi[:, None] * T.mat_vec(Ja, n)

    d6_val = _max(Q.integrate_surface(d6).value)
    half_flux = _max(Q.integrate_surface(lambda x, n: 0.5 * T.dot(F.field_a(x)[0], F.field_a(x)[0])[:, None] * n).value)
    checks = [
        Check("cancel.psi_d_i_grad_psi_dot_n", d6_val, 1e-8, 3),
        Check("cancel.grad_psi_sq_equals_one_on_surface", grad_sq, 1e-12, n_surface,
              note="|grad psi|^2 = 1 + 3 x_1^2 on the unit sphere"),
        Check("cancel.half_grad_psi_sq_flux", half_flux, 1e-8, 3),
    ]
    xv = sample_points(rng, n_volume)
    for params in params_list:
        tag = f"[h={params.h:g}]"
        (_, _), (_, J2) = F.fields_G(xs, params.h)
        checks.append(Check(f"cancel.grad_G2_dot_n{tag}", _max(T.mat_vec(J2, Q.surface_normal(xs))), 1e-9, n_surface))
        model = F.build_model(params)
        inertial = TH.raw_volume_kernels(xv, model)[..., 1]
        checks.append(Check(f"cancel.inertial_kernel{tag}", _max(inertial), 1e-10, n_volume))
        G1 = G1_integral(model, rule)
        checks.append(Check(f"cancel.G1_vector{tag}", _max(G1.value), 10 * rule.abs_tol, 3))
    return checks


def G1_integral(model: F.Model, rule: Q.VolumeRule = Q.VolumeRule()) -> Q.QuadResult:
    """``-int <(grad s)^T : grad V0> p^(i) e_i`` without any derivative differencing."""
    sv = TH.harmonic_values(model.s)
    vv = TH.harmonic_values(model.V0)

    def kernel(x):
        _, sJ = sv(x)
        _, VJ = vv(x)
        avg = TH.time_average(sJ, VJ, lambda A, B: T.ddot(T.transpose(A), B))
        return np.stack([-avg * F.stokes_aux(i, x)[2] for i in TH.AXES], axis=-1)

    return Q.integrate_exterior(kernel, rule, model.params.h)


# ---------------------------------------------------------------------------
# raw functional against the reduced integrals, term by term


def check_path_equivalence(params: F.ModelParams, rule: Q.VolumeRule = Q.VolumeRule(),
                           factor: float = 50.0) -> list[Check]:
    """Compare the raw functional with the reduced integrals.

    Besides the totals (raw run with each sign of ``p0``) the intermediate
    identities are compared separately: ``I2 + I4`` against the stress and
    pressure part of the reduced kernel, and ``I3`` against its
    ``: D(h)`` part.
    """
    tol = factor * rule.abs_tol
    tag = f"[h={params.h:g}]"
    red = TH.thrust_reduced(params, rule)
    parts = _reduced_parts(params, rule)
    checks = []
    for sign in ("flipped", "paper"):
        raw = TH.thrust_raw(params, rule, p0_sign=sign)
        b = raw.breakdown
        checks.append(Check(f"paths.raw_minus_reduced[p0={sign}]{tag}", _max(raw.G - red.G), tol, 3,
                            informational=(sign == "paper"),
                            note=f"raw G2 = {raw.G[1]:.8f}, reduced G2 = {red.G[1]:.8f}"))
        if sign == "paper":
            checks.append(Check(f"paths.I2_plus_I4{tag}", _max(b["I2"] + b["I4"] - parts["stress"]), tol, 3,
                                note=f"raw {(b['I2'] + b['I4'])[1]:.8f} vs reduced {parts['stress'][1]:.8f}"))
            checks.append(Check(f"paths.I3{tag}", _max(b["I3"] - parts["strain"]), tol, 3,
                                note=f"raw {b['I3'][1]:.8f} vs reduced {parts['strain'][1]:.8f}"))
            checks.append(Check(f"paths.I1{tag}", _max(b["I1"]), tol, 3))
            checks.append(Check(f"paths.G1{tag}", _max(b["G1"]), tol, 3))
    return checks


def _reduced_parts(params: F.ModelParams, rule: Q.VolumeRule) -> dict[str, np.ndarray]:
    """Reduced integrals split into the ``T : (grad s . grad h)`` part (stress)
    and the ``: D(h)`` part (strain), each including its share of ``R``."""
    h = params.h

    def kernel(x):
        a, Ja = F.field_a(x)
        (_, J1), (_, J2) = F.fields_G(x, h)
        D1, D2 = T.sym(J1), T.sym(J2)
        W1 = J1 - T.transpose(J1)
        P, Qm = T.matmul(J1, J2), T.matmul(J2, J1)
        out = []
        for i in TH.AXES:
            hv, Jh, _, _ = F.stokes_aux(i, x)
            Dh = T.sym(Jh)
            stress = (T.ddot(Ja, T.matmul(J1, Jh)) - T.ddot(D1, T.matmul(Ja, Jh))
                      + T.ddot(D2, T.matmul(J1, Jh)) - T.ddot(D1, T.matmul(J2, Jh))
                      - h * h * T.dot(T.vec_mat(hv, J2), a))
            strain = 0.5 * T.ddot(T.matmul(Ja, W1) - T.matmul(W1, Ja) + P + T.transpose(P) - Qm - T.transpose(Qm), Dh)
            out.append(np.stack([stress, strain], axis=-1))
        return np.stack(out, axis=-2)

    v = np.asarray(Q.integrate_exterior(kernel, rule, h).value)
    return {"stress": v[:, 0], "strain": v[:, 1]}


# ---------------------------------------------------------------------------
# pulsating ball


@dataclass(frozen=True)
class PulsationSpec:
    """Radius ``R(t) = 1 + eps sin t`` of a pulsating ball (``R(0) = 1``)."""

    eps: float = 0.3

    def __post_init__(self):
        if not 0 <= self.eps < 1:
            raise ValueError("eps must lie in [0, 1) so that R(t) > 0")

    def R(self, t):
        return 1.0 + self.eps * np.sin(t)

    def R_dot(self, t):
        return self.eps * np.cos(t)

    def R_ddot(self, t):
        return -self.eps * np.sin(t)

    def a(self, t):
        """Source strength ``a(t) = -R^2 R'``."""
        return -self.R(t) ** 2 * self.R_dot(t)

    def a_dot(self, t):
        R, Rd = self.R(t), self.R_dot(t)
        return -(2.0 * R * Rd * Rd + R * R * self.R_ddot(t))


def pulsating_flow(spec: PulsationSpec, t: float, y: np.ndarray):
    """Velocity, velocity gradient and pressure of the pulsating-ball flow.

    ``v = a(t) grad(1/|y|)`` and ``p = -a'(t)/|y| - a(t)^2 |grad(1/|y|)|^2 / 2``.
    """
    rho = np.linalg.norm(y, axis=-1)
    a = spec.a(t)
    g = -y / rho[:, None] ** 3
    hess = -T.IDENTITY / rho[:, None, None] ** 3 + 3.0 * T.dyad(y, y) / rho[:, None, None] ** 5
    p = -spec.a_dot(t) / rho - 0.5 * a * a * T.dot(g, g)
    return a * g, a * hess, p


def check_pulsating_ball(spec: PulsationSpec = PulsationSpec(), times=None, rng=None,
                         tol: float = 1e-8, n_surface: int = 100) -> list[Check]:
    """Both surface force integrals vanish, and ``v = (R'/R) y`` on ``|y| = R``."""
    if times is None:
        times = np.linspace(0.0, 2 * math.pi, 8, endpoint=False) + math.pi / 4
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    viscous = pressure = bc = euler = 0.0
    for t in times:
        R = float(spec.R(t))

        def strain_force(y, n, t=t):
            _, J, _ = pulsating_flow(spec, t, y)
            return T.mat_vec(J + T.transpose(J), n)

        def pressure_force(y, n, t=t):
            _, _, p = pulsating_flow(spec, t, y)
            return p[:, None] * n

        viscous = max(viscous, _max(Q.integrate_surface(strain_force, radius=R).value))
        pressure = max(pressure, _max(Q.integrate_surface(pressure_force, radius=R).value))
        y = R * sample_directions(rng, n_surface)
        v, _, _ = pulsating_flow(spec, t, y)
        bc = max(bc, _max(v - (spec.R_dot(t) / R) * y))
        # d_t v + v . grad v + grad p = 0 (the flow is harmonic, so Lap v = 0)
        yv = (R + rng.uniform(0.0, 3.0, n_surface))[:, None] * sample_directions(rng, n_surface)
        dt = 1e-4
        vp = pulsating_flow(spec, t + dt, yv)[0]
        vm = pulsating_flow(spec, t - dt, yv)[0]
        v, J, _ = pulsating_flow(spec, t, yv)
        gp = F.fd_gradient(lambda q: pulsating_flow(spec, t, q)[2], yv)
        euler = max(euler, _max((vp - vm) / (2 * dt) + T.vec_mat(v, J) + gp))
    nt = len(times)
    return [
        Check("pulsating.strain_force", viscous, tol, nt),
        Check("pulsating.pressure_force", pressure, tol, nt),
        Check("pulsating.boundary_velocity", bc, 1e-12, nt * n_surface),
        Check("pulsating.momentum_residual", euler, 1e-6, nt * n_surface),
    ]


# ---------------------------------------------------------------------------
# suite


def run_all(seed: int = DEFAULT_SEED, abs_tol: float = 1e-6, mass_ratio: float = F.DEFAULT_MASS_RATIO,
            g1_fault: float = 0.0, equivalence_h=(1.0,),
            progress: Callable[[str], None] | None = None) -> VerificationReport:
    """Run every check with a fixed seed."""
    rng = np.random.default_rng(seed)
    rule = Q.VolumeRule(abs_tol=abs_tol)
    report = VerificationReport(seed)
    say = progress or (lambda msg: None)

    say("steady Stokes fields")
    report.extend(check_stokes_aux(rng))
    say("resistance matrix")
    report.extend(check_M())
    say("field catalog")
    report.extend(check_fields(rng))
    for h in (0.5, 1.0, 5.0, 20.0):
        say(f"unsteady Stokes system, h = {h:g}")
        report.extend(check_unsteady_stokes(F.ModelParams(h, mass_ratio, g1_fault), rng))
    say("cancellation identities")
    report.extend(check_cancellations([F.ModelParams(h, mass_ratio, g1_fault) for h in (1.0, 10.0)], rng, rule))
    for h in equivalence_h:
        say(f"raw vs reduced thrust, h = {h:g}")
        report.extend(check_path_equivalence(F.ModelParams(h, mass_ratio, g1_fault), rule))
    say("pulsating ball")
    report.extend(check_pulsating_ball(rng=rng))
    return report
