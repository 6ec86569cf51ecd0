"""The genus-2 regular-octagon Fuchsian group and Dirichlet-domain reduction.

The octagon is centred at ``i`` with interior angles pi/4.  Opposite sides are
paired by hyperbolic translations through ``i``; generator ``k`` (k < 4) is the
translation towards the side whose outward normal at ``i`` points at angle
``pi/2 + k*pi/4``, and generator ``k + 4`` is its inverse.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import psl2
from .errors import ConstructionValidationError, IterationCapError
from .hyperplane import HPoint, TangentPoint, base_point, hyp_dist
from .psl2 import Mat2

NGEN = 8
MAX_REDUCE_STEPS = 10**6
REDUCE_TOL = 1e-12


def inverse_index(i: int) -> int:
    return (i + 4) % NGEN


@dataclass(frozen=True)
class FuchsianGroup:
    gens: tuple[Mat2, ...]
    relator: tuple[int, ...]
    center: HPoint
    domain_radius_bound: float
    inradius: float
    gen_array: np.ndarray = field(repr=False, compare=False)

    def word_matrix(self, word) -> Mat2:
        m = Mat2.identity()
        for i in word:
            m = m @ self.gens[i]
        return m

    def to_dict(self) -> dict:
        return {
            "generators": [list(g.entries()) for g in self.gens],
            "relator": list(self.relator),
            "center": [self.center.re, self.center.im],
            "domain_radius_bound": self.domain_radius_bound,
            "inradius": self.inradius,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass(frozen=True)
class ReducedTangent:
    rep: TangentPoint
    word: tuple[int, ...]


def _relator_residual(gens, word) -> float:
    m = Mat2.identity()
    for i in word:
        m = m @ gens[i]
    return m.pdist(Mat2.identity())


def _candidate_relators():
    """Cyclically reduced words using each generator once with each sign.

    Words are normalized to start with generator 0, and a word and its inverse
    count as one candidate.
    """
    seen = set()
    for rest in itertools.permutations(range(1, NGEN)):
        w = (0,) + rest
        if any(w[(j + 1) % NGEN] == inverse_index(w[j]) for j in range(NGEN)):
            continue
        inv = tuple(inverse_index(i) for i in reversed(w))
        k = inv.index(0)
        inv = inv[k:] + inv[:k]
        key = min(w, inv)
        if key in seen:
            continue
        seen.add(key)
        yield key


@lru_cache(maxsize=None)
def build_octagon_group() -> FuchsianGroup:
    half_len = math.acosh(1.0 + math.sqrt(2.0))  # cosh(l/2) = 1 + sqrt 2
    t0 = psl2.diag_mat(2.0 * half_len)
    gens = []
    for k in range(4):
        r = psl2.rotation(-k * math.pi / 8.0)  # turns directions at i by k*pi/4
        gens.append(r @ t0 @ r.inv())
    gens += [g.inv() for g in gens]

    hits = [w for w in _candidate_relators() if _relator_residual(gens, w) <= 1e-8]
    if len(hits) != 1:
        raise ConstructionValidationError(f"expected exactly one relator ordering, found {len(hits)}")
    relator = hits[0]

    target = 2.0 * (1.0 + math.sqrt(2.0))
    for g in gens:
        if abs(abs(g.trace()) - target) > 1e-10:
            raise ConstructionValidationError(f"generator trace {g.trace()} != {target}")

    cot = 1.0 + math.sqrt(2.0)  # cot(pi/8)
    return FuchsianGroup(
        gens=tuple(gens),
        relator=relator,
        center=HPoint(0.0, 1.0),
        domain_radius_bound=math.acosh(cot * cot),
        inradius=math.acosh(cot),
        gen_array=np.array([g.as_array() for g in gens]),
    )


def _tol_key(key: float) -> float:
    # key = ||u||_F^2 = 2 cosh d(i, u i); a 1e-12 drop in d is a drop of 2 sinh(d) * 1e-12 in key
    return REDUCE_TOL * math.sqrt(max(key * key - 4.0, 0.0))


def reduce(group: FuchsianGroup, u, max_steps: int = MAX_REDUCE_STEPS) -> ReducedTangent:
    """Greedy descent into the Dirichlet domain centred at ``i``.

    Each step left-multiplies by the generator that brings the base point
    closest to the centre, provided it gains more than 1e-12 in distance;
    equal candidates go to the lowest generator index.
    """
    m = u.u if isinstance(u, TangentPoint) else u
    word = []
    for _ in range(max_steps):
        key = m.a**2 + m.b**2 + m.c**2 + m.d**2
        best, best_key = -1, key - _tol_key(key)
        for i, g in enumerate(group.gens):
            cand = g @ m
            k = cand.a**2 + cand.b**2 + cand.c**2 + cand.d**2
            if k < best_key:
                best, best_key = i, k
        if best < 0:
            return ReducedTangent(TangentPoint(m), tuple(word))
        m = group.gens[best] @ m
        word.append(best)
    raise IterationCapError(f"reduction did not terminate within {max_steps} steps")


def _candidate_keys(G: np.ndarray, U: np.ndarray) -> np.ndarray:
    """``||g U||_F^2`` for every generator: shape ``(N, 8)``."""
    r0, r1 = U[:, None, 0, :], U[:, None, 1, :]
    c0 = G[None, :, 0, 0, None] * r0 + G[None, :, 0, 1, None] * r1
    c1 = G[None, :, 1, 0, None] * r0 + G[None, :, 1, 1, None] * r1
    return np.sum(c0 * c0, axis=2) + np.sum(c1 * c1, axis=2)


def _threshold(key: np.ndarray) -> np.ndarray:
    return key - REDUCE_TOL * np.sqrt(np.maximum(key * key - 4.0, 0.0))


def reduce_arr(group: FuchsianGroup, U: np.ndarray, max_steps: int = MAX_REDUCE_STEPS):
    """Vectorized :func:`reduce` over an ``(N, 2, 2)`` batch.

    Returns the reduced batch and an ``(N, 8)`` array counting how often each
    generator was applied; the same greedy rule as the scalar version.
    """
    U = np.array(U, dtype=float, copy=True)
    n = U.shape[0]
    counts = np.zeros((n, NGEN), dtype=np.int64)
    G = group.gen_array
    active = np.arange(n)
    for _ in range(max_steps):
        if active.size == 0:
            return U, counts
        Ua = U[active]
        ckey = _candidate_keys(G, Ua)
        best = np.argmin(ckey, axis=1)
        rows = np.arange(active.size)
        move = ckey[rows, best] < _threshold(np.sum(Ua * Ua, axis=(1, 2)))
        idx = active[move]
        U[idx] = G[best[move]] @ Ua[move]
        counts[idx, best[move]] += 1
        active = idx
    raise IterationCapError(f"batch reduction did not terminate within {max_steps} steps")


def domain_mask(group: FuchsianGroup, U: np.ndarray) -> np.ndarray:
    """True where no generator moves the base point closer to the centre (the reduce rule)."""
    ckey = _candidate_keys(group.gen_array, U).min(axis=1)
    return ~(ckey < _threshold(np.sum(U * U, axis=(1, 2))))


def random_word(group: FuchsianGroup, length: int, seed) -> tuple[int, ...]:
    if length < 0:
        raise ValueError("length must be non-negative")
    rng = np.random.default_rng(seed)
    word = []
    for _ in range(length):
        if not word:
            word.append(int(rng.integers(NGEN)))
        else:
            choices = [i for i in range(NGEN) if i != inverse_index(word[-1])]
            word.append(choices[int(rng.integers(len(choices)))])
    return tuple(word)


def random_word_element(group: FuchsianGroup, length: int, seed) -> Mat2:
    return group.word_matrix(random_word(group, length, seed))


def reduced_words(length: int):
    """All freely reduced words of exactly ``length`` letters."""
    if length == 0:
        yield ()
        return
    for w in reduced_words(length - 1):
        for i in range(NGEN):
            if w and i == inverse_index(w[-1]):
                continue
            yield w + (i,)


def min_distance_to_identity(group: FuchsianGroup, max_length: int = 6) -> float:
    """Smallest PSL distance to the identity among nontrivial reduced words."""
    G = group.gen_array
    ident = np.eye(2)
    layer = G.copy()
    last = np.arange(NGEN)
    best = float(psl2.pdist_arr(layer, ident).min())
    for _ in range(2, max_length + 1):
        nxt, nlast = [], []
        for i in range(NGEN):
            keep = last != inverse_index(i)
            nxt.append(layer[keep] @ G[i])
            nlast.append(np.full(int(keep.sum()), i))
        layer = np.concatenate(nxt)
        last = np.concatenate(nlast)
        best = min(best, float(psl2.pdist_arr(layer, ident).min()))
    return best


def in_domain(group: FuchsianGroup, z: HPoint, slack: float = 1e-9) -> bool:
    """Whether ``z`` is no farther from ``i`` than from any ``g^{+-1} i``."""
    d0 = hyp_dist(z, group.center)
    return all(hyp_dist(z, base_point(g)) >= d0 - slack for g in group.gens)


def boundary_polygon(group: FuchsianGroup, per_side: int = 24) -> list[HPoint]:
    """Points along the octagon boundary, counter-clockwise in the disk picture."""
    # disk angles: side midpoints at k*pi/4, vertices at pi/8 + k*pi/4
    phi = -math.pi / 8 + (math.pi / 4) * np.arange(NGEN * per_side) / per_side
    w = np.tanh(boundary_radius(phi) / 2) * np.exp(1j * phi)
    z = 1j * (1 + w) / (1 - w)
    return [HPoint(float(v.real), float(v.imag)) for v in z]


def boundary_radius(phi) -> np.ndarray:
    """Distance from ``i`` to the octagon boundary in disk direction ``phi``."""
    r_in = math.acosh(1.0 + math.sqrt(2.0))
    psi = np.mod(np.asarray(phi, dtype=float) + math.pi / 8, math.pi / 4) - math.pi / 8
    return np.arctanh(math.tanh(r_in) / np.cos(psi))
