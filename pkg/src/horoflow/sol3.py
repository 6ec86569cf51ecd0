"""Sol^3, its lattice quotient T^3_A, and the three left-invariant flows.

Coordinates ``(x, y, z)`` are eigenbasis coordinates with the group law
``(x, y, z).(x', y', z') = (x + e^z x', y + e^-z y', z + z')``.  The lattice
built from a hyperbolic ``A`` in SL(2, Z) has z-period ``log(lambda)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidMatrixError, SolRangeError

Z_LIMIT = 700.0
DEFAULT_A = ((2, 1), (1, 1))
SOL_FLOWS = ("hplus", "geodesic", "vperp")


@dataclass(frozen=True, slots=True)
class SolPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise InvalidInputError(f"non-finite Sol point {(self.x, self.y, self.z)}")

    def as_tuple(self):
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class SolLattice:
    A: tuple[tuple[int, int], tuple[int, int]]
    lam: float
    P: tuple[tuple[float, float], tuple[float, float]]
    z_period: float

    @property
    def P_arr(self) -> np.ndarray:
        return np.array(self.P)

    @property
    def P_inv(self) -> np.ndarray:
        return np.linalg.inv(self.P_arr)

    def cell_volume(self) -> float:
        """Haar volume of the reduced fundamental cell."""
        return abs(float(np.linalg.det(self.P_arr))) * self.z_period

    def element(self, m: int, n: int, p: int) -> SolPoint:
        """The Sol point realizing the lattice element ``(m, n, p)``."""
        P = self.P
        return SolPoint(P[0][0] * m + P[0][1] * n, P[1][0] * m + P[1][1] * n, p * self.z_period)

    def to_dict(self) -> dict:
        return {"A": [list(r) for r in self.A], "lambda": self.lam, "P": [list(r) for r in self.P],
                "z_period": self.z_period}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _guard(z: float):
    if abs(z) > Z_LIMIT:
        raise SolRangeError(f"|z| = {abs(z):.6g} exceeds {Z_LIMIT}")


def sol_mul(p: SolPoint, q: SolPoint) -> SolPoint:
    _guard(p.z)
    _guard(q.z)
    return SolPoint(p.x + math.exp(p.z) * q.x, p.y + math.exp(-p.z) * q.y, p.z + q.z)


def sol_inv(p: SolPoint) -> SolPoint:
    _guard(p.z)
    return SolPoint(-math.exp(-p.z) * p.x, -math.exp(p.z) * p.y, -p.z)


def sol_flows(p: SolPoint, s: float, which: str) -> SolPoint:
    """Right multiplication by ``(s,0,0)``, ``(0,0,s)`` or ``(0,s,0)``."""
    _guard(p.z)
    if not math.isfinite(s):
        raise InvalidInputError(f"flow parameter must be finite, got {s}")
    if which == "hplus":
        return SolPoint(p.x + math.exp(p.z) * s, p.y, p.z)
    if which == "geodesic":
        _guard(p.z + s)
        return SolPoint(p.x, p.y, p.z + s)
    if which == "vperp":
        return SolPoint(p.x, p.y + math.exp(-p.z) * s, p.z)
    raise InvalidInputError(f"unknown Sol flow {which!r}; expected one of {SOL_FLOWS}")


def make_lattice(A=DEFAULT_A) -> SolLattice:
    """Eigen-data of a hyperbolic ``A``: ``P^-1 diag(lam, 1/lam) P = A``.

    Rows of ``P`` are left eigenvectors of ``A``; ``A`` must have trace > 2
    so that the monodromy is a positive diagonal matrix in Sol^3.
    """
    try:
        (a, b), (c, d) = ((int(A[0][0]), int(A[0][1])), (int(A[1][0]), int(A[1][1])))
    except (TypeError, ValueError, IndexError):
        raise InvalidMatrixError(f"A must be a 2x2 integer matrix, got {A!r}") from None
    if np.any(np.asarray(A, dtype=float) != np.array([[a, b], [c, d]], dtype=float)):
        raise InvalidMatrixError(f"A must have integer entries, got {A!r}")
    if a * d - b * c != 1:
        raise InvalidMatrixError(f"det(A) = {a * d - b * c}, expected 1")
    tr = a + d
    if abs(tr) <= 2:
        raise InvalidMatrixError(f"|trace(A)| = {abs(tr)} <= 2: A is not hyperbolic")
    if tr < -2:
        raise InvalidMatrixError("trace(A) < -2: use -A, whose eigenvalues are positive")
    lam = (tr + math.sqrt(tr * tr - 4)) / 2.0
    rows = []
    for mu in (lam, 1.0 / lam):
        # (c, mu - a) A = mu (c, mu - a); c != 0 for hyperbolic A with det 1
        r = np.array([c, mu - a], dtype=float)
        rows.append(r / np.linalg.norm(r))
    P = np.array(rows)
    resid = np.abs(np.linalg.inv(P) @ np.diag([lam, 1.0 / lam]) @ P - np.array([[a, b], [c, d]])).max()
    if resid > 1e-10:
        raise InvalidMatrixError(f"eigen-decomposition residual {resid:.3e}")
    return SolLattice(((a, b), (c, d)), lam, tuple(map(tuple, P.tolist())), math.log(lam))


def _round_half_up(w):
    return np.floor(np.asarray(w) + 0.5)


def sol_reduce_arr(lat: SolLattice, X: np.ndarray) -> np.ndarray:
    """Vectorized :func:`sol_reduce` on an ``(N, 3)`` array."""
    X = np.asarray(X, dtype=float)
    if np.any(np.abs(X[:, 2]) > Z_LIMIT):
        raise SolRangeError(f"|z| exceeds {Z_LIMIT}")
    T = lat.z_period
    k = np.floor(X[:, 2] / T)
    z = X[:, 2] - k * T
    # rounding can land exactly on T or just below 0
    hi = z >= T
    k[hi] += 1
    z[hi] -= T
    lo = z < 0
    k[lo] -= 1
    z[lo] += T
    xy = np.stack([np.exp(-k * T) * X[:, 0], np.exp(k * T) * X[:, 1]], axis=1)
    w = xy @ lat.P_inv.T
    xy = xy - _round_half_up(w) @ lat.P_arr.T
    return np.column_stack([xy, z])


def sol_reduce(lat: SolLattice, p: SolPoint) -> SolPoint:
    """Canonical representative of ``Gamma p``.

    First ``(0, 0, -k log lam)`` on the left brings z into ``[0, log lam)``,
    then Babai rounding in the horizontal lattice ``P Z^2`` centres (x, y).
    """
    r = sol_reduce_arr(lat, np.array([p.as_tuple()]))[0]
    return SolPoint(float(r[0]), float(r[1]), float(r[2]))


def sol_metric_length(path) -> float:
    """Length of a polyline under ``e^-2z dx^2 + e^2z dy^2 + dz^2`` (midpoint rule)."""
    P = np.array([p.as_tuple() if isinstance(p, SolPoint) else p for p in path], dtype=float)
    if len(P) < 2:
        raise InvalidInputError("path needs at least two points")
    d = np.diff(P, axis=0)
    zm = 0.5 * (P[1:, 2] + P[:-1, 2])
    return float(np.sum(np.sqrt(np.exp(-2 * zm) * d[:, 0] ** 2 + np.exp(2 * zm) * d[:, 1] ** 2 + d[:, 2] ** 2)))


def flow_arr(X: np.ndarray, s, which: str) -> np.ndarray:
    """Apply a Sol flow to an ``(N, 3)`` batch for times ``s`` of shape ``(M,)``; returns ``(N, M, 3)``."""
    X = np.asarray(X, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.broadcast_to(X[:, None, :], (X.shape[0], s.shape[0], 3)).copy()
    if which == "hplus":
        out[..., 0] += np.exp(X[:, 2])[:, None] * s[None, :]
    elif which == "geodesic":
        out[..., 2] += s[None, :]
    elif which == "vperp":
        out[..., 1] += np.exp(-X[:, 2])[:, None] * s[None, :]
    else:
        raise InvalidInputError(f"unknown Sol flow {which!r}; expected one of {SOL_FLOWS}")
    return out
