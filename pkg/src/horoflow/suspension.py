"""Suspension of the octagon group into a torus: Gamma \\ (PSL(2,R) x T^k).

Gamma acts diagonally, ``gamma . (u, theta) = (gamma u, theta + rho(gamma))``,
with ``rho`` sending generators to rotation vectors.  The leafwise flows act on
the right on the PSL factor and never touch theta.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import psl2
from .errors import DomainError, InvalidInputError
from .fuchsian import NGEN, FuchsianGroup, inverse_index, reduce
from .hyperplane import TangentPoint, sample_borel_ball, t1_dist
from .psl2 import BorelElement, Mat2

GOLDEN_CONJ = (math.sqrt(5.0) - 1.0) / 2.0
SQRT2_M1 = math.sqrt(2.0) - 1.0


@dataclass(frozen=True)
class TorusRep:
    """Generator index -> rotation vector in [0, 1)^k."""

    k: int
    rot: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.k < 1 or len(self.rot) != NGEN:
            raise InvalidInputError("need k >= 1 and one rotation vector per generator")
        for i, r in enumerate(self.rot):
            if len(r) != self.k or not all(0.0 <= c < 1.0 for c in r):
                raise InvalidInputError(f"rotation {i} must be a {self.k}-vector in [0, 1)")
            back = self.rot[inverse_index(i)]
            if any(torus_gap(a, -b) > 1e-12 for a, b in zip(r, back)):
                raise InvalidInputError(f"rot(inverse of {i}) != -rot({i}) mod 1")

    @classmethod
    def from_generators(cls, rots) -> "TorusRep":
        """Build from the rotation vectors of generators 0..3; inverses are filled in."""
        rots = [tuple(float(c) % 1.0 for c in np.atleast_1d(r)) for r in rots]
        if len(rots) != 4:
            raise InvalidInputError("need rotation vectors for generators 0..3")
        inv = [tuple((-c) % 1.0 for c in r) for r in rots]
        return cls(len(rots[0]), tuple(rots + inv))

    @property
    def table(self) -> np.ndarray:
        return np.array(self.rot, dtype=float)

    def word_shift(self, word) -> np.ndarray:
        out = np.zeros(self.k)
        for i in word:
            out += self.rot[i]
        return np.mod(out, 1.0)

    def to_dict(self) -> dict:
        return {"k": self.k, "rot": {str(i): list(r) for i, r in enumerate(self.rot)}}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "TorusRep":
        rot = tuple(tuple(float(c) for c in d["rot"][str(i)]) for i in range(NGEN))
        return cls(int(d["k"]), rot)


def default_rep() -> TorusRep:
    return TorusRep.from_generators([[GOLDEN_CONJ], [SQRT2_M1], [0.0], [0.0]])


def torus_gap(a: float, b: float) -> float:
    d = (a - b) % 1.0
    return min(d, 1.0 - d)


def torus_dist(a, b) -> float:
    """Flat quotient metric: max over coordinates of circle distance."""
    return max((torus_gap(x, y) for x, y in zip(a, b)), default=0.0)


@dataclass(frozen=True)
class SuspensionState:
    u: TangentPoint
    theta: tuple[float, ...]

    @classmethod
    def make(cls, u, theta) -> "SuspensionState":
        u = u if isinstance(u, TangentPoint) else TangentPoint(u)
        return cls(u, tuple(float(c) % 1.0 for c in np.atleast_1d(theta)))


_FLOWS = {
    "geodesic": lambda u, t: psl2.geodesic_flow(u, t),
    "hplus": lambda u, t: psl2.horocycle_flow(u, t, "+"),
    "hminus": lambda u, t: psl2.horocycle_flow(u, t, "-"),
}


def susp_flow(s: SuspensionState, t: float, which: str) -> SuspensionState:
    try:
        f = _FLOWS[which]
    except KeyError:
        raise InvalidInputError(f"unknown flow {which!r}; expected one of {sorted(_FLOWS)}") from None
    return SuspensionState(TangentPoint(f(s.u.u, t)), s.theta)


def act(group: FuchsianGroup, rep: TorusRep, word, s: SuspensionState) -> SuspensionState:
    """Diagonal left action of the group element ``word`` (product left to right)."""
    g = group.word_matrix(word)
    shift = rep.word_shift(word)
    return SuspensionState(TangentPoint(g @ s.u.u), tuple(np.mod(np.array(s.theta) + shift, 1.0)))


def susp_reduce(group: FuchsianGroup, rep: TorusRep, s: SuspensionState) -> SuspensionState:
    r = reduce(group, s.u)
    if not r.word:
        return s
    theta = np.mod(np.array(s.theta) + rep.word_shift(r.word), 1.0)
    return SuspensionState(r.rep, tuple(float(c) for c in theta))


@dataclass
class WwuProductReport:
    eps: float
    horizon: float
    bound: float
    max_deviation: list[float] = field(default_factory=list)
    passed: list[bool] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(self.passed)


def product_deviation(b: Mat2, dtheta: float, horizon: float, step: float = 0.1) -> float:
    """Max over ``t in [0, horizon]`` of ``d_T1(g_-t u, g_-t ub) + d_torus``.

    Uses left invariance: ``d(g_-t u, g_-t ub) = d(Id, a(t) b a(-t))``.
    """
    ident = Mat2.identity()
    n = int(math.floor(horizon / step + 1e-9))
    worst = 0.0
    for j in range(n + 1):
        e = math.exp(j * step)
        worst = max(worst, t1_dist(ident, Mat2(b.a, b.b * e, b.c / e, b.d)) + dtheta)
    return worst


def wwu_product_check(s: SuspensionState, eps: float, horizon: float = 30.0, trials: int = 100,
                      seed=0, step: float = 0.1) -> WwuProductReport:
    """Sample ``(u b, theta')`` with ``b`` in B_eps and ``theta'`` eps-close; track the past orbit.

    Each trial passes if the product distance to the orbit of ``s`` stays
    within ``2 eps`` up to ``horizon``.
    """
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    rng = np.random.default_rng(seed)
    rep = WwuProductReport(eps, horizon, 2.0 * eps)
    k = len(s.theta)
    for _ in range(trials):
        b = sample_borel_ball(eps, rng)
        theta2 = np.mod(np.array(s.theta) + rng.uniform(-eps, eps, k), 1.0)
        dev = product_deviation(b, torus_dist(s.theta, theta2), horizon, step)
        rep.max_deviation.append(dev)
        rep.passed.append(dev <= rep.bound)
    return rep


def intersection_point(p: SuspensionState, q: SuspensionState, s: float):
    """The point ``q'`` where the horocycle arc through ``q`` meets ``W^wu(h_s p)``.

    With ``q = p b0`` (``b0`` Borel), solve ``h_-s b0 = b1 h_-l`` and return
    ``(q', l)`` where ``q' = (p h_s b1, theta(q))`` and ``p h_s b1 = q h_l``.
    """
    rel = p.u.u.inv() @ q.u.u
    scale = max(1.0, rel.frob())
    if abs(rel.b) > 1e-12 * scale:
        raise DomainError(f"p^-1 q is not in the Borel group (upper-right entry {rel.b:.3e})")
    if rel.a < 0:
        rel = -rel
    b0 = BorelElement(rel.a, rel.c)
    b1, l = psl2.borel_factorize(b0, s)
    u2 = p.u.u @ psl2.uplus(s) @ b1.matrix()
    return SuspensionState(TangentPoint(u2), q.theta), l


def intersection_residual(p: SuspensionState, q: SuspensionState, s: float, q2: SuspensionState, l: float) -> float:
    """``|| p h_s b1 - q h_l ||_F`` in PSL(2,R), with ``q2 = p h_s b1``."""
    return q2.u.u.pdist(q.u.u @ psl2.uplus(l))
