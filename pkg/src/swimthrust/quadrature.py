"""Deterministic quadrature on the unit sphere and on its exterior.

Surface integrals use a product rule: Gauss-Legendre in ``cos(theta)`` and the
trapezoid rule in ``phi``. Exterior integrals combine that angular rule with an
adaptive Gauss-Kronrod radial integration over two sections:

* a boundary-layer section ``r in [1, 1 + c / max(h, 1)]`` resolving the
  ``exp(-h (r - 1))`` oscillation-decay of the torsional fields;
* a far-field section mapped by ``r = 1 + u / (1 - u)``, ``u in [u0, 1)``,
  which turns algebraic decay into a regular integrand.

Panels are bisected (largest error first) until the summed Gauss/Kronrod
difference meets the tolerance. The angular rule is exact for the
trigonometric polynomials that appear in the thrust integrands, so the
reported error is the radial one.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import legendre as L


class QuadratureError(RuntimeError):
    """Raised when an integrand returns a non-finite sample."""


@lru_cache(maxsize=None)
def gauss_kronrod(n: int = 10) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Kronrod ``(n, 2n+1)`` rule on [-1, 1].

    Returns ``(nodes, kronrod_weights, gauss_weights)`` where ``gauss_weights``
    is zero on the Kronrod-only nodes. The extension nodes are the zeros of
    the Stieltjes polynomial ``E_{n+1}``, found from its orthogonality
    ``int P_n E_{n+1} P_k = 0`` for ``k = 0..n``.
    """
    xg, wg = L.leggauss(n)
    xq, wq = L.leggauss(3 * n + 4)
    P = np.array([L.legval(xq, np.eye(n + 2)[m]) for m in range(n + 2)])
    Pn = P[n]
    # moments[k, m] = int P_n P_m P_k
    moments = np.einsum("q,kq,mq->km", wq * Pn, P[: n + 1], P)
    c = np.linalg.solve(moments[:, : n + 1], -moments[:, n + 1])
    xk = np.sort(L.legroots(np.append(c, 1.0)).real)
    x = np.sort(np.concatenate([xg, xk]))
    x[np.abs(x) < 1e-15] = 0.0
    V = np.array([L.legval(x, np.eye(2 * n + 1)[m]) for m in range(2 * n + 1)])
    rhs = np.zeros(2 * n + 1)
    rhs[0] = 2.0
    wk = np.linalg.solve(V, rhs)
    gw = np.zeros_like(x)
    for xi, wi in zip(xg, wg):
        gw[np.argmin(np.abs(x - xi))] = wi
    return x, wk, gw


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray | float
    error_estimate: float
    n_evals: int
    converged: bool


# ---------------------------------------------------------------------------
# sphere


@dataclass(frozen=True)
class SurfaceRule:
    """Product rule on the unit sphere: ``n_polar`` Gauss nodes in ``cos(theta)``
    times ``n_azimuth`` equispaced azimuths starting at ``phi_offset``."""

    n_polar: int = 24
    n_azimuth: int = 48
    phi_offset: float = 0.0

    def __post_init__(self):
        if self.n_polar < 1 or self.n_azimuth < 1:
            raise ValueError("node counts must be positive")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit directions ``(N, 3)`` and weights ``(N,)`` summing to ``4 pi``."""
        return _sphere_nodes(self.n_polar, self.n_azimuth, self.phi_offset)

    def coarser(self) -> "SurfaceRule":
        return SurfaceRule(max(1, self.n_polar // 2), max(1, self.n_azimuth // 2), self.phi_offset)

    def refined(self) -> "SurfaceRule":
        return SurfaceRule(2 * self.n_polar, 2 * self.n_azimuth, self.phi_offset)


@lru_cache(maxsize=32)
def _sphere_nodes(n_polar: int, n_azimuth: int, phi_offset: float):
    ct, wt = L.leggauss(n_polar)
    st = np.sqrt(1.0 - ct * ct)
    phi = phi_offset + 2.0 * math.pi * np.arange(n_azimuth) / n_azimuth
    dirs = np.stack(
        [np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)), np.outer(ct, np.ones_like(phi))], axis=-1
    ).reshape(-1, 3)
    w = np.outer(wt, np.full(n_azimuth, 2.0 * math.pi / n_azimuth)).ravel()
    dirs.setflags(write=False)
    w.setflags(write=False)
    return dirs, w


def _check_finite(values: np.ndarray, x: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values.reshape(len(x), -1)))[0, 0]
        raise QuadratureError(f"non-finite integrand at node {bad}, x = {x[bad]}")


def _weighted_sum(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.tensordot(w, values, axes=(0, 0))


def surface_normal(x: np.ndarray) -> np.ndarray:
    """Normal on a centred sphere pointing into the body (out of the fluid): ``-e_r``."""
    return -x / np.linalg.norm(x, axis=-1, keepdims=True)


def integrate_surface(f: Callable[[np.ndarray, np.ndarray], np.ndarray], rule: SurfaceRule = SurfaceRule(),
                      radius: float = 1.0, tol: float = 1e-10) -> QuadResult:
    """Integrate ``f(x, n)`` over the sphere ``|x| = radius``.

    ``n = -e_r`` is the normal pointing out of the fluid region. ``f`` gets
    arrays of points ``(N, 3)`` and normals ``(N, 3)`` and returns ``(N,)``
    or ``(N, ...)``. The error estimate compares against the rule with half
    the nodes in each direction.
    """

    def apply(r: SurfaceRule):
        dirs, w = r.nodes()
        x = radius * dirs
        vals = np.asarray(f(x, -dirs), dtype=float)
        _check_finite(vals, x)
        return _weighted_sum(vals, radius**2 * w), len(w)

    value, n1 = apply(rule)
    coarse, n2 = apply(rule.coarser())
    err = float(np.max(np.abs(value - coarse)))
    return QuadResult(_scalar_or_array(value), err, n1 + n2, err <= tol)


def _scalar_or_array(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


# ---------------------------------------------------------------------------
# exterior of the sphere


@dataclass(frozen=True)
class VolumeRule:
    """Settings for :func:`integrate_exterior`.

    ``layer_width`` is the ``c`` in the boundary-layer section
    ``[1, 1 + c / max(h, 1)]``; ``initial_panels`` is the starting split of
    each section; ``max_panels`` caps the adaptive refinement.
    """

    abs_tol: float = 1e-6
    rel_tol: float = 0.0
    surface: SurfaceRule = SurfaceRule()
    kronrod_n: int = 10
    layer_width: float = 10.0
    initial_panels: int = 4
    max_panels: int = 400

    def __post_init__(self):
        if not self.abs_tol > 0 or self.rel_tol < 0:
            raise ValueError("abs_tol must be > 0 and rel_tol >= 0")

    def refined(self) -> "VolumeRule":
        """Same tolerances with the angular grid and starting panels doubled."""
        return VolumeRule(self.abs_tol, self.rel_tol, self.surface.refined(), self.kronrod_n,
                          self.layer_width, 2 * self.initial_panels, 2 * self.max_panels)


def _identity_map(u):
    return u, np.ones_like(u)


def _far_map(u):
    return 1.0 + u / (1.0 - u), 1.0 / (1.0 - u) ** 2


@dataclass
class _Panel:
    lo: float
    hi: float
    section: int
    value: np.ndarray
    err: float


def integrate_radial(g: Callable[[np.ndarray], np.ndarray], layer_scale: float = 0.0,
                     rule: VolumeRule = VolumeRule()) -> QuadResult:
    """Adaptive ``int_1^inf g(r) dr`` for a vectorised ``g: (m,) -> (m, ...)``."""
    x, wk, wg = gauss_kronrod(rule.kronrod_n)
    r1 = 1.0 + rule.layer_width / max(layer_scale, 1.0)
    sections = [(1.0, r1, _identity_map), (1.0 - 1.0 / r1, 1.0, _far_map)]
    n_evals = 0

    def panel(lo, hi, section):
        nonlocal n_evals
        mapping = sections[section][2]
        half = 0.5 * (hi - lo)
        u = lo + half * (x + 1.0)
        r, jac = mapping(u)
        vals = np.asarray(g(r), dtype=float)
        _check_finite(vals, np.stack([r, r, r], axis=-1))
        n_evals += len(u)
        vals = vals * (half * jac).reshape((-1,) + (1,) * (vals.ndim - 1))
        k = _weighted_sum(vals, wk)
        gs = _weighted_sum(vals, wg)
        return _Panel(lo, hi, section, k, float(np.max(np.abs(k - gs))))

    heap: list[tuple[float, int, _Panel]] = []
    counter = 0
    for s, (lo, hi, _) in enumerate(sections):
        edges = np.linspace(lo, hi, rule.initial_panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            p = panel(a, b, s)
            heapq.heappush(heap, (-p.err, counter, p))
            counter += 1

    def totals():
        # ordered reduction keeps results independent of refinement history
        ps = sorted((item[2] for item in heap), key=lambda p: (p.section, p.lo))
        return sum(p.value for p in ps), sum(p.err for p in ps)

    value, err = totals()
    while True:
        target = max(rule.abs_tol, rule.rel_tol * float(np.max(np.abs(value))))
        if err <= target or len(heap) >= rule.max_panels:
            break
        _, _, worst = heapq.heappop(heap)
        mid = 0.5 * (worst.lo + worst.hi)
        for a, b in ((worst.lo, mid), (mid, worst.hi)):
            p = panel(a, b, worst.section)
            heapq.heappush(heap, (-p.err, counter, p))
            counter += 1
        value, err = totals()
    target = max(rule.abs_tol, rule.rel_tol * float(np.max(np.abs(value))))
    return QuadResult(_scalar_or_array(value), float(err), n_evals, err <= target)


def integrate_exterior(f: Callable[[np.ndarray], np.ndarray], rule: VolumeRule = VolumeRule(),
                       layer_scale: float = 0.0) -> QuadResult:
    """``int_{r > 1} f dV`` for an integrand decaying at least like ``r^-4``.

    ``f`` maps points ``(N, 3)`` to ``(N,)`` or ``(N, ...)``. ``layer_scale``
    is the Stokes number ``h`` setting the boundary-layer width. A result
    that misses the tolerance within ``rule.max_panels`` comes back with
    ``converged = False``.
    """
    dirs, w = rule.surface.nodes()
    nd = len(dirs)

    def shell(r):
        pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(vals, pts)
        vals = vals.reshape((len(r), nd) + vals.shape[1:])
        ang = np.tensordot(w, vals, axes=(0, 1))
        return ang * (r**2).reshape((-1,) + (1,) * (ang.ndim - 1))

    res = integrate_radial(shell, layer_scale, rule)
    return QuadResult(res.value, res.error_estimate, res.n_evals * nd, res.converged)
