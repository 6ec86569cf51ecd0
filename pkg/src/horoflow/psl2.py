"""SL(2,R) / PSL(2,R) matrix algebra.

Points of the unit tangent bundle of the hyperbolic plane are represented by
determinant-one 2x2 matrices.  The geodesic and horocycle flows act on the
right by one-parameter subgroups, always through closed-form matrices (no ODE
integration), so the only error source is floating-point rounding.

Scalar values use :class:`Mat2`; long orbits and Monte-Carlo batches use plain
numpy arrays of shape ``(..., 2, 2)`` through the ``*_arr`` helpers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CorruptedStateError, DegenerateFactorizationError, InvalidInputError

DET_TOL = 1e-9
RENORMALIZE_EVERY = 1000


@dataclass(frozen=True, slots=True)
class Mat2:
    """Row-major 2x2 real matrix ``[[a, b], [c, d]]``."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_array(cls, m) -> "Mat2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, o: "Mat2") -> "Mat2":
        return Mat2(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def trace(self) -> float:
        return self.a + self.d

    def inv(self) -> "Mat2":
        # inverse of a det-1 matrix; callers renormalize first if unsure
        return Mat2(self.d, -self.b, -self.c, self.a)

    def entries(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def canonical(self) -> "Mat2":
        """Projective representative: first nonzero entry (a, b, c, d order) positive."""
        for v in self.entries():
            if v != 0.0:
                return self if v > 0 else -self
        return self

    def frob(self) -> float:
        return math.sqrt(self.a**2 + self.b**2 + self.c**2 + self.d**2)

    def dist(self, o: "Mat2") -> float:
        """Frobenius distance of the SL(2) matrices, no sign identification."""
        return math.sqrt(
            (self.a - o.a) ** 2 + (self.b - o.b) ** 2 + (self.c - o.c) ** 2 + (self.d - o.d) ** 2
        )

    def pdist(self, o: "Mat2") -> float:
        """Frobenius distance in PSL(2,R): min over the two sign representatives."""
        return min(self.dist(o), self.dist(-o))

    def is_close(self, o: "Mat2", tol: float = 1e-12) -> bool:
        return self.pdist(o) <= tol


@dataclass(frozen=True, slots=True)
class BorelElement:
    """Lower-triangular ``[[lam, 0], [t, 1/lam]]`` with ``lam > 0``."""

    lam: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and math.isfinite(self.t)):
            raise InvalidInputError(f"non-finite Borel element ({self.lam}, {self.t})")
        if self.lam <= 0:
            raise InvalidInputError(f"Borel element needs lam > 0, got {self.lam}")

    def matrix(self) -> Mat2:
        return Mat2(self.lam, 0.0, self.t, 1.0 / self.lam)

    @classmethod
    def from_matrix(cls, m: Mat2, tol: float = 1e-12) -> "BorelElement":
        scale = max(1.0, m.frob())
        if abs(m.b) > tol * scale:
            raise InvalidInputError(f"matrix is not lower triangular (b = {m.b:.3e})")
        if m.a < 0:
            m = -m
        return cls(m.a, m.c)


def check(u: Mat2) -> Mat2:
    if not all(math.isfinite(v) for v in u.entries()):
        raise InvalidInputError(f"non-finite matrix entries {u.entries()}")
    if abs(u.det() - 1.0) > DET_TOL:
        raise InvalidInputError(f"|det - 1| = {abs(u.det() - 1.0):.3e} exceeds {DET_TOL}")
    return u


def _finite(name: str, x: float) -> float:
    if not math.isfinite(x):
        raise InvalidInputError(f"{name} must be finite, got {x}")
    return float(x)


def diag_mat(t: float) -> Mat2:
    h = 0.5 * t
    return Mat2(math.exp(h), 0.0, 0.0, math.exp(-h))


def uplus(s: float) -> Mat2:
    return Mat2(1.0, s, 0.0, 1.0)


def uminus(s: float) -> Mat2:
    return Mat2(1.0, 0.0, s, 1.0)


def rotation(theta: float) -> Mat2:
    """``[[cos, -sin], [sin, cos]]``; fixes i and turns tangent directions by ``-2*theta``."""
    c, s = math.cos(theta), math.sin(theta)
    return Mat2(c, -s, s, c)


def geodesic_flow(u: Mat2, t: float) -> Mat2:
    check(u)
    return u @ diag_mat(_finite("t", t))


def horocycle_flow(u: Mat2, s: float, sign: str = "+") -> Mat2:
    check(u)
    s = _finite("s", s)
    if sign == "+":
        return u @ uplus(s)
    if sign == "-":
        return u @ uminus(s)
    raise InvalidInputError(f"sign must be '+' or '-', got {sign!r}")


def borel_factorize(b0: BorelElement, s: float) -> tuple[BorelElement, float]:
    """Solve ``h_{-s} b0 = b1 h_{-l}`` for the Borel element ``b1`` and time ``l``.

    Multiplying out both sides gives ``lam1 = lam0 - s*t0``, ``t1 = t0`` and
    ``l = s / (lam0 * lam1)``.
    """
    s = _finite("s", s)
    lam1 = b0.lam - s * b0.t
    if not lam1 > 0:
        raise DegenerateFactorizationError(
            f"lam0 - s*t0 = {lam1:.6g} <= 0: intersection leaves the Borel chart"
        )
    return BorelElement(lam1, b0.t), s / (b0.lam * lam1)


def iwasawa(u: Mat2) -> tuple[float, float, float]:
    """NAK coordinates: ``u = [[1,x],[0,1]] diag(sqrt y, 1/sqrt y) rotation(theta)``."""
    check(u)
    n2 = u.c * u.c + u.d * u.d
    x = (u.a * u.c + u.b * u.d) / n2
    y = 1.0 / n2
    theta = math.atan2(u.c, u.d) % math.pi
    if theta >= math.pi:
        theta = 0.0
    return x, y, theta


def from_iwasawa(x: float, y: float, theta: float) -> Mat2:
    r = math.sqrt(y)
    return uplus(x) @ Mat2(r, 0.0, 0.0, 1.0 / r) @ rotation(theta)


def renormalize(u: Mat2) -> Mat2:
    det = u.det()
    if not det > 0:
        raise CorruptedStateError(f"determinant {det} is not positive")
    r = math.sqrt(det)
    return Mat2(u.a / r, u.b / r, u.c / r, u.d / r)


def compose_steps(u: Mat2, steps, n: int, renormalize_every: int | None = RENORMALIZE_EVERY) -> Mat2:
    """Right-multiply ``u`` by ``steps[k % len(steps)]`` for ``k < n``.

    With ``renormalize_every`` set, the determinant is pulled back to 1 at that
    cadence; ``None`` disables it (used to measure raw drift).
    """
    m = len(steps)
    for k in range(n):
        u = u @ steps[k % m]
        if renormalize_every and (k + 1) % renormalize_every == 0:
            u = renormalize(u)
    return u


# ---------------------------------------------------------------------------
# batched helpers on arrays of shape (..., 2, 2)


def diag_arr(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (2, 2))
    out[..., 0, 0] = np.exp(0.5 * t)
    out[..., 1, 1] = np.exp(-0.5 * t)
    return out


def uplus_arr(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    out[..., 0, 1] = s
    return out


def uminus_arr(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    out[..., 1, 0] = s
    return out


FLOW_ARRAYS = {"geodesic": diag_arr, "hplus": uplus_arr, "hminus": uminus_arr}


def flow_matrices(flow: str, params) -> np.ndarray:
    try:
        return FLOW_ARRAYS[flow](params)
    except KeyError:
        raise InvalidInputError(f"unknown flow {flow!r}; expected one of {sorted(FLOW_ARRAYS)}") from None


def det_arr(U: np.ndarray) -> np.ndarray:
    return U[..., 0, 0] * U[..., 1, 1] - U[..., 0, 1] * U[..., 1, 0]


def renormalize_arr(U: np.ndarray) -> np.ndarray:
    det = det_arr(U)
    if np.any(~(det > 0)):
        raise CorruptedStateError("non-positive determinant in batch")
    return U / np.sqrt(det)[..., None, None]


def iwasawa_arr(U: np.ndarray):
    a, b, c, d = U[..., 0, 0], U[..., 0, 1], U[..., 1, 0], U[..., 1, 1]
    n2 = c * c + d * d
    return (a * c + b * d) / n2, 1.0 / n2, np.mod(np.arctan2(c, d), np.pi)


def from_iwasawa_arr(x, y, theta) -> np.ndarray:
    x, y, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, theta)))
    r = np.sqrt(y)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(x.shape + (2, 2))
    # n(x) a(y) k(theta), expanded
    out[..., 0, 0] = r * c + x * s / r
    out[..., 0, 1] = -r * s + x * c / r
    out[..., 1, 0] = s / r
    out[..., 1, 1] = c / r
    return out


def frob_arr(U: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(U * U, axis=(-2, -1)))


def pdist_arr(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    return np.minimum(frob_arr(U - V), frob_arr(U + V))


def identity_suite(trials: int = 1000, states: int = 100, seed: int = 0, span: float = 5.0) -> dict:
    """Max residuals of both commutation relations over seeded ``(t, s)`` and states.

    ``g_t h+_s = h+_{s e^-t} g_t`` and ``g_t h-_s = h-_{s e^t} g_t`` are checked
    on the identity plus ``states`` random points (Iwasawa box sampling).
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(-span, span, trials)
    s = rng.uniform(-span, span, trials)
    x = rng.uniform(-1.0, 1.0, states)
    y = np.exp(rng.uniform(-1.0, 1.0, states))
    th = rng.uniform(0.0, np.pi, states)
    U = np.concatenate([np.eye(2)[None], from_iwasawa_arr(x, y, th)])

    D = diag_arr(t)
    plus_lhs = uplus_arr(s) @ D
    plus_rhs = D @ uplus_arr(s * np.exp(-t))
    minus_lhs = uminus_arr(s) @ D
    minus_rhs = D @ uminus_arr(s * np.exp(t))

    res_plus = frob_arr(U[:, None] @ plus_lhs[None] - U[:, None] @ plus_rhs[None])
    res_minus = frob_arr(U[:, None] @ minus_lhs[None] - U[:, None] @ minus_rhs[None])
    return {
        "trials": trials,
        "states": states + 1,
        "seed": seed,
        "max_residual_hplus": float(res_plus.max()),
        "max_residual_hminus": float(res_minus.max()),
    }
