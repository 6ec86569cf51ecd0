"""Upper half-plane geometry and the unit tangent bundle metric.

A tangent point is a :class:`~horoflow.psl2.Mat2` ``u``; its base point is
``u . i`` and its direction is the image of the upward unit vector at ``i``.
The distance on T^1 H is the hyperbolic distance of the base points plus the
angle between the two directions after parallel transport along the joining
geodesic, which makes it invariant under left multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import psl2
from .errors import InvalidInputError
from .psl2 import Mat2

TWO_PI = 2.0 * math.pi

# B_eps = {[[lam, 0], [t, 1/lam]] : |log lam| < BOREL_BOX * eps, |t| < BOREL_BOX * eps}
BOREL_BOX = 0.25

WWU_HORIZON = 50.0
WWU_STEP = 0.05


@dataclass(frozen=True, slots=True)
class HPoint:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)) or self.im <= 0:
            raise InvalidInputError(f"not a point of the upper half-plane: {self.re} + {self.im}i")

    def __complex__(self):
        return complex(self.re, self.im)


I = HPoint(0.0, 1.0)


@dataclass(frozen=True, slots=True)
class TangentPoint:
    u: Mat2

    @property
    def base(self) -> HPoint:
        return base_point(self.u)

    @property
    def angle(self) -> float:
        return direction(self.u)


def _as_mat(p) -> Mat2:
    return p.u if isinstance(p, TangentPoint) else p


def base_point(u: Mat2) -> HPoint:
    n2 = u.c * u.c + u.d * u.d
    return HPoint((u.a * u.c + u.b * u.d) / n2, 1.0 / n2)


def direction(u: Mat2) -> float:
    """Euclidean angle in [0, 2pi) of the unit vector ``u`` carries at its base."""
    return (0.5 * math.pi - 2.0 * math.atan2(u.c, u.d)) % TWO_PI


def mobius(u: Mat2, z: HPoint) -> HPoint:
    w = (u.a * complex(z) + u.b) / (u.c * complex(z) + u.d)
    return HPoint(w.real, w.imag)


def cayley(z) -> complex:
    """Half-plane to unit disk, ``i`` to 0."""
    z = complex(z)
    return (z - 1j) / (z + 1j)


def hyp_dist(z: HPoint, w: HPoint) -> float:
    # 2 asinh(|z-w| / (2 sqrt(Im z Im w))) keeps precision at small separations
    r = math.hypot(z.re - w.re, z.im - w.im)
    return 2.0 * math.asinh(r / (2.0 * math.sqrt(z.im * w.im)))


def _wrap(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


def _geodesic_tangents(z: HPoint, w: HPoint) -> tuple[float, float]:
    """Angles of the geodesic from z to w: its tangent at z and its onward tangent at w."""
    # zeta -> (zeta - x)/y has positive real derivative, so angles survive the move to i
    u = (w.re - z.re) / z.im
    v = w.im / z.im
    r2 = u * u + v * v
    chord = (u, v - 1.0)
    t0 = (2.0 * u, r2 - 1.0)
    t1 = (-2.0 * u * v, u * u - v * v + 1.0)
    if t0[0] * chord[0] + t0[1] * chord[1] < 0:
        t0 = (-t0[0], -t0[1])
    if t1[0] * chord[0] + t1[1] * chord[1] < 0:
        t1 = (-t1[0], -t1[1])
    return math.atan2(t0[1], t0[0]), math.atan2(t1[1], t1[0])


def fiber_angle(p, q) -> float:
    """Angle between the directions of p and q after transport along the base geodesic."""
    up, uq = _as_mat(p), _as_mat(q)
    zp, zq = base_point(up), base_point(uq)
    ap, aq = direction(up), direction(uq)
    if hyp_dist(zp, zq) < 1e-15:
        return abs(_wrap(ap - aq))
    phi_p, phi_q = _geodesic_tangents(zp, zq)
    return abs(_wrap((ap - phi_p) - (aq - phi_q)))


def t1_dist(p, q) -> float:
    up, uq = _as_mat(p), _as_mat(q)
    return hyp_dist(base_point(up), base_point(uq)) + fiber_angle(up, uq)


def borel_part(m: Mat2, tol: float = 1e-12):
    """``(lam, t)`` if ``m`` is lower triangular in PSL(2,R), else None."""
    if abs(m.b) > tol * max(1.0, m.frob()):
        return None
    if m.a < 0:
        m = -m
    if m.a <= 0:
        return None
    return m.a, m.c


def in_borel_ball(m: Mat2, eps: float) -> bool:
    bt = borel_part(m)
    if bt is None:
        return False
    lam, t = bt
    r = BOREL_BOX * eps
    return abs(math.log(lam)) < r and abs(t) < r


def sample_borel_ball(eps: float, rng: np.random.Generator) -> Mat2:
    r = BOREL_BOX * eps
    lam = math.exp(rng.uniform(-r, r))
    return Mat2(lam, 0.0, rng.uniform(-r, r), 1.0 / lam)


def wwu_algebraic(u, v, eps: float) -> bool:
    """``u^-1 v`` lies in the Borel ball B_eps."""
    uu, vv = _as_mat(u), _as_mat(v)
    return in_borel_ball(uu.inv() @ vv, eps)


def wwu_distances(u, v, horizon: float = WWU_HORIZON, step: float = WWU_STEP) -> np.ndarray:
    """``d(g_-t u, g_-t v)`` for ``t = 0, step, ..., horizon``.

    By left invariance this equals ``d(Id, a(t) m a(-t))`` with ``m = u^-1 v``,
    which keeps entries bounded and avoids cancellation near the boundary.
    """
    if not (horizon > 0 and step > 0 and step <= horizon):
        raise InvalidInputError(f"need 0 < step <= horizon, got step={step}, horizon={horizon}")
    m = _as_mat(u).inv() @ _as_mat(v)
    # an upper-right entry at round-off level would be blown up by e^t; treat it as zero
    if abs(m.b) <= 1e-12 * max(1.0, m.frob()):
        m = Mat2(m.a, 0.0, m.c, m.d)
    ident = Mat2.identity()
    n = int(math.floor(horizon / step + 1e-9))
    out = np.empty(n + 1)
    for k in range(n + 1):
        t = k * step
        e = math.exp(t)
        out[k] = t1_dist(ident, Mat2(m.a, m.b * e, m.c / e, m.d))
    return out


def wwu_membership(u, v, eps: float, horizon: float = WWU_HORIZON, step: float = WWU_STEP) -> bool:
    """Numeric check of the past-orbit condition, up to ``horizon``.

    A True answer means "not falsified up to horizon".
    """
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    return bool(np.all(wwu_distances(u, v, horizon, step) < eps))
