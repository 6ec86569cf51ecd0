"""Observables, Birkhoff averages and Monte-Carlo measure checks.

Birkhoff averages use left-endpoint sums ``(1/n) sum_{j<n} f(x_j)`` where
``x_j`` is the reduced state at time ``j*dt``.  Orbits are generated in
chunks: inside a chunk every point is the closed-form flow of the chunk's
(reduced) starting state and is reduced on its own, which is the same point
as reducing after every step.  All starts of an experiment run as one numpy
batch; each start draws from its own seeded stream ``(seed, start_index)``,
so results never depend on scheduling.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import psl2
from .errors import ConfigError, InvalidInputError, RejectionEfficiencyError
from .fuchsian import FuchsianGroup, build_octagon_group, domain_mask, reduce_arr
from .hyperplane import BOREL_BOX, TangentPoint
from .sol3 import SOL_FLOWS, SolLattice, flow_arr, make_lattice, sol_reduce_arr
from .suspension import SuspensionState, TorusRep, default_rep

DEFAULT_DT = 0.01
CHUNK_TIME = 5.0
MAX_CHUNK_STEPS = 1000

# engineering thresholds for the suspension proxy of unique ergodicity
SPREAD_ABS_TOL = 0.05
SPREAD_DECAY = 3.0


# ---------------------------------------------------------------------------
# spaces


@dataclass(frozen=True)
class SuspensionSpace:
    group: FuchsianGroup
    rep: TorusRep
    name: str = "suspension"
    flows: tuple[str, ...] = ("geodesic", "hplus", "hminus")

    def size(self, st) -> int:
        return st[0].shape[0]

    def reduce(self, st):
        U, theta = st
        U, counts = reduce_arr(self.group, U)
        return psl2.renormalize_arr(U), np.mod(theta + counts @ self.rep.table, 1.0)

    def orbit(self, st, flow, times):
        """States at ``times`` (shape M) from each of the B states: flat batch of B*M."""
        U, theta = st
        F = psl2.flow_matrices(flow, times)
        V = np.einsum("bij,mjk->bmik", U, F).reshape(-1, 2, 2)
        return V, np.repeat(theta, len(times), axis=0)

    def advance(self, st, flow, t):
        return self.reduce(self.orbit(st, flow, np.array([t])))


@dataclass(frozen=True)
class SolSpace:
    lattice: SolLattice
    name: str = "sol"
    flows: tuple[str, ...] = SOL_FLOWS

    def size(self, st) -> int:
        return st.shape[0]

    def reduce(self, st):
        return sol_reduce_arr(self.lattice, st)

    def orbit(self, st, flow, times):
        return flow_arr(st, times, flow).reshape(-1, 3)

    def advance(self, st, flow, t):
        return self.reduce(self.orbit(st, flow, np.array([t])))


def make_space(name: str, A=None, rep: TorusRep | None = None):
    if name == "suspension":
        return SuspensionSpace(build_octagon_group(), rep or default_rep())
    if name == "sol":
        return SolSpace(make_lattice(A) if A is not None else make_lattice())
    raise ConfigError(f"unknown space {name!r}; expected 'suspension' or 'sol'")


# ---------------------------------------------------------------------------
# observables


OBSERVABLE_KINDS = ("torus_fourier", "leafwise_height", "sol_z_cosine", "constant")


@dataclass(frozen=True)
class Observable:
    """A Gamma-invariant test function, evaluated on reduced states only.

    ``torus_fourier``: ``cos(2 pi m.theta)``; ``leafwise_height``: distance
    from the reduced base point to the domain centre; ``sol_z_cosine``:
    ``cos(2 pi z / z_period)``; ``constant``: ``c``.
    """

    name: str
    kind: str
    m: tuple[int, ...] = ()
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in OBSERVABLE_KINDS:
            raise ConfigError(f"unknown observable kind {self.kind!r}")

    @classmethod
    def torus_fourier(cls, m) -> "Observable":
        m = tuple(int(v) for v in np.atleast_1d(m))
        return cls(f"torus_fourier{list(m)}", "torus_fourier", m=m)

    @classmethod
    def leafwise_height(cls) -> "Observable":
        return cls("leafwise_height", "leafwise_height")

    @classmethod
    def sol_z_cosine(cls) -> "Observable":
        return cls("sol_z_cosine", "sol_z_cosine")

    @classmethod
    def constant(cls, c: float) -> "Observable":
        return cls(f"constant({c!r})", "constant", c=float(c))

    @classmethod
    def from_spec(cls, spec) -> "Observable":
        if isinstance(spec, str):
            spec = {"kind": spec}
        kind = spec.get("kind")
        extra = set(spec) - {"kind", "m", "c"}
        if extra:
            raise ConfigError(f"unknown observable keys {sorted(extra)}")
        if kind == "torus_fourier":
            return cls.torus_fourier(spec.get("m", [1]))
        if kind == "leafwise_height":
            return cls.leafwise_height()
        if kind == "sol_z_cosine":
            return cls.sol_z_cosine()
        if kind == "constant":
            return cls.constant(spec.get("c", 0.0))
        raise ConfigError(f"unknown observable kind {kind!r}")

    def to_spec(self) -> dict:
        if self.kind == "torus_fourier":
            return {"kind": self.kind, "m": list(self.m)}
        if self.kind == "constant":
            return {"kind": self.kind, "c": self.c}
        return {"kind": self.kind}

    @property
    def sup_norm(self) -> float:
        if self.kind == "constant":
            return abs(self.c)
        if self.kind == "leafwise_height":
            return build_octagon_group().domain_radius_bound
        return 1.0

    def reference(self, space) -> float | None:
        """Space average where it is known in closed form."""
        if self.kind == "constant":
            return self.c
        if self.kind == "torus_fourier" and any(self.m):
            return 0.0
        if self.kind == "sol_z_cosine":
            return 0.0
        return None

    def evaluate(self, space, st) -> np.ndarray:
        if self.kind == "constant":
            return np.full(space.size(st), self.c)
        if isinstance(space, SuspensionSpace):
            U, theta = st
            if self.kind == "torus_fourier":
                if len(self.m) != theta.shape[1]:
                    raise InvalidInputError(f"frequency {self.m} does not match torus dimension {theta.shape[1]}")
                return np.cos(2.0 * np.pi * (theta @ np.array(self.m, dtype=float)))
            if self.kind == "leafwise_height":
                key = np.sum(U * U, axis=(1, 2))
                return np.arccosh(np.maximum(0.5 * key, 1.0))
        if isinstance(space, SolSpace) and self.kind == "sol_z_cosine":
            return np.cos(2.0 * np.pi * st[:, 2] / space.lattice.z_period)
        raise InvalidInputError(f"observable {self.kind} is not defined on the {space.name} space")


# ---------------------------------------------------------------------------
# Liouville / Haar sampling


def liouville_sample_arr(group: FuchsianGroup, n: int, seed, block: int = 4096) -> np.ndarray:
    """``(n, 2, 2)`` unit tangent vectors, Liouville-distributed in the Dirichlet domain."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    R = group.domain_radius_bound
    xr, y_lo, y_hi = math.sinh(R), math.exp(-R), math.exp(R)
    out, drawn = [], 0
    have = 0
    while have < n:
        x = rng.uniform(-xr, xr, block)
        y = 1.0 / rng.uniform(1.0 / y_hi, 1.0 / y_lo, block)  # density ~ 1/y^2
        th = rng.uniform(0.0, np.pi, block)
        U = psl2.from_iwasawa_arr(x, y, th)
        keep = U[domain_mask(group, U)]
        drawn += block
        out.append(keep)
        have += len(keep)
        if drawn >= 100_000 and have / drawn < 1e-4:
            raise RejectionEfficiencyError(f"acceptance {have / drawn:.2e} below 1e-4")
    return np.concatenate(out)[:n]


def liouville_sample(group: FuchsianGroup, n: int, seed) -> list[TangentPoint]:
    return [TangentPoint(psl2.Mat2.from_array(m)) for m in liouville_sample_arr(group, n, seed)]


def _start_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def suspension_starts(space: SuspensionSpace, count: int, seed: int):
    U, theta = [], []
    for i in range(count):
        rng = _start_rng(seed, i)
        U.append(liouville_sample_arr(space.group, 1, rng)[0])
        theta.append(rng.uniform(0.0, 1.0, space.rep.k))
    return np.array(U), np.array(theta)


def sol_starts(space: SolSpace, count: int, seed: int, start_z=None) -> np.ndarray:
    """Seeded starts in the reduced cell; ``start_z`` (fractions of the z-period) pins x=y=0."""
    lat = space.lattice
    if start_z is not None:
        return np.array([[0.0, 0.0, float(f) * lat.z_period] for f in start_z])
    X = []
    for i in range(count):
        rng = _start_rng(seed, i)
        w = rng.uniform(-0.5, 0.5, 2)
        X.append([*(lat.P_arr @ w), rng.uniform(0.0, lat.z_period)])
    return np.array(X)


# ---------------------------------------------------------------------------
# Birkhoff averages


@dataclass
class BirkhoffReport:
    space: str
    flow: str
    observable: str
    starts: list
    times: list[float]
    averages: np.ndarray
    spread: np.ndarray
    reference: float | None = None
    meta: dict = field(default_factory=dict)


def _checkpoint_steps(T: float, dt: float, checkpoints) -> tuple[int, list[int]]:
    if not (dt > 0 and T >= dt and math.isfinite(T)):
        raise InvalidInputError(f"need 0 < dt <= T, got dt={dt}, T={T}")
    n_total = int(round(T / dt))
    steps = []
    for c in checkpoints:
        k = int(round(c / dt))
        if not (0 < c <= T * (1 + 1e-12)) or k < 1 or k > n_total:
            raise InvalidInputError(f"checkpoint {c} outside (0, T]")
        steps.append(k)
    return n_total, steps


def birkhoff_batch(space, state, flow: str, observables, T: float, dt: float, checkpoints) -> np.ndarray:
    """Averages of each observable at each checkpoint: array ``(n_obs, B, n_checkpoints)``."""
    if flow not in space.flows:
        raise InvalidInputError(f"flow {flow!r} not available on {space.name}; expected one of {space.flows}")
    n_total, cp = _checkpoint_steps(T, dt, checkpoints)
    order = np.argsort(cp, kind="stable")
    B = space.size(state)
    nobs = len(observables)
    out = np.empty((nobs, B, len(cp)))
    chunk = max(1, min(MAX_CHUNK_STEPS, int(CHUNK_TIME / dt)))
    cur = space.reduce(state)
    f0 = None
    S = np.zeros((nobs, B))
    j0, ci = 0, 0
    while ci < len(order):
        m = min(chunk, n_total - j0)
        pts = space.reduce(space.orbit(cur, flow, dt * np.arange(m)))
        vals = np.stack([o.evaluate(space, pts).reshape(B, m) for o in observables])
        if f0 is None:
            f0 = vals[:, :, 0].copy()
        cs = np.cumsum(vals - f0[:, :, None], axis=2) + S[:, :, None]
        while ci < len(order) and cp[order[ci]] <= j0 + m:
            k = cp[order[ci]]
            out[:, :, order[ci]] = f0 + cs[:, :, k - j0 - 1] / k
            ci += 1
        S = cs[:, :, -1]
        j0 += m
        if ci < len(order):
            cur = space.advance(cur, flow, m * dt)
    return out


def sample_orbit(space, state, flow: str, T: float, dt: float):
    """Reduced states of a single start at times ``0, dt, ..., T``."""
    if flow not in space.flows:
        raise InvalidInputError(f"flow {flow!r} not available on {space.name}; expected one of {space.flows}")
    n_total, _ = _checkpoint_steps(T, dt, [])
    n_total += 1
    chunk = max(1, min(MAX_CHUNK_STEPS, int(CHUNK_TIME / dt)))
    cur = space.reduce(_as_batch(space, state))
    parts, done = [], 0
    while done < n_total:
        m = min(chunk, n_total - done)
        parts.append(space.reduce(space.orbit(cur, flow, dt * np.arange(m))))
        done += m
        if done < n_total:
            cur = space.advance(cur, flow, m * dt)
    if isinstance(space, SuspensionSpace):
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    return np.concatenate(parts)


def birkhoff(space, state, flow: str, observable: Observable, T: float, dt: float, checkpoints) -> BirkhoffReport:
    """Single-start Birkhoff report; ``state`` is a SuspensionState, SolPoint or batch of one."""
    st = _as_batch(space, state)
    avg = birkhoff_batch(space, st, flow, [observable], T, dt, checkpoints)[0]
    return BirkhoffReport(space.name, flow, observable.name, [_describe(space, st, 0)], list(checkpoints),
                          avg, np.zeros(len(checkpoints)), observable.reference(space))


def _as_batch(space, state):
    if isinstance(space, SuspensionSpace):
        if isinstance(state, SuspensionState):
            return state.u.u.as_array()[None], np.array([state.theta])
        return state
    if hasattr(state, "as_tuple"):
        return np.array([state.as_tuple()])
    return np.atleast_2d(np.asarray(state, dtype=float))


def _describe(space, st, i):
    if isinstance(space, SuspensionSpace):
        return {"u": st[0][i].ravel().tolist(), "theta": st[1][i].tolist()}
    return {"x": float(st[i, 0]), "y": float(st[i, 1]), "z": float(st[i, 2])}


# ---------------------------------------------------------------------------
# equidistribution experiments


EQUIDIST_DEFAULTS = {
    "space": "suspension",
    "flow": "hplus",
    "observable": {"kind": "torus_fourier", "m": [1]},
    "starts": 8,
    "start_z": None,
    "T": 2e4,
    "dt": DEFAULT_DT,
    "checkpoints": [2e2, 2e3, 2e4],
    "seed": 0,
}


def _config(config: dict) -> dict:
    unknown = set(config) - set(EQUIDIST_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown experiment keys {sorted(unknown)}")
    cfg = dict(EQUIDIST_DEFAULTS)
    cfg.update({k: v for k, v in config.items() if v is not None})
    return cfg


def experiment_starts(space, cfg):
    if isinstance(space, SuspensionSpace):
        return suspension_starts(space, int(cfg["starts"]), int(cfg["seed"]))
    return sol_starts(space, int(cfg["starts"]), int(cfg["seed"]), cfg.get("start_z"))


def equidist_experiments(config: dict, observables) -> list[BirkhoffReport]:
    """One orbit pass per start shared by several observables."""
    cfg = _config(config)
    space = make_space(cfg["space"])
    st = experiment_starts(space, cfg)
    obs = [o if isinstance(o, Observable) else Observable.from_spec(o) for o in observables]
    avg = birkhoff_batch(space, st, cfg["flow"], obs, float(cfg["T"]), float(cfg["dt"]), cfg["checkpoints"])
    starts = [_describe(space, st, i) for i in range(space.size(st))]
    reports = []
    for o, a in zip(obs, avg):
        reports.append(BirkhoffReport(space.name, cfg["flow"], o.name, starts, [float(c) for c in cfg["checkpoints"]],
                                      a, a.max(axis=0) - a.min(axis=0), o.reference(space),
                                      meta={"config": {**cfg, "observable": o.to_spec()}}))
    return reports


def equidist_experiment(config: dict) -> BirkhoffReport:
    cfg = _config(config)
    return equidist_experiments(cfg, [cfg["observable"]])[0]


def equidist_verdict(report: BirkhoffReport) -> dict:
    """Pass/fail of the start-independence proxy; thresholds are engineering choices."""
    first, last = float(report.spread[0]), float(report.spread[-1])
    if report.space == "suspension":
        ok = last <= SPREAD_ABS_TOL and last <= first / SPREAD_DECAY
        rule = f"spread(T_max) <= {SPREAD_ABS_TOL} and <= spread(T_min)/{SPREAD_DECAY}"
    else:
        ok = last >= first - 1e-12 and last > 0
        rule = "spread does not shrink (distinct limits)"
    return {"rule": rule, "spread_first": first, "spread_last": last, "passed": bool(ok),
            "thresholds_are_engineering_choices": True}


def report_to_csv(report: BirkhoffReport, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    buf.write("start_index,checkpoint_T,average,running_spread\n")
    for i in range(report.averages.shape[0]):
        for j, t in enumerate(report.times):
            buf.write(f"{i},{t:.17g},{report.averages[i, j]:.17g},{report.spread[j]:.17g}\n")
    return buf.getvalue()


def report_summary(report: BirkhoffReport) -> dict:
    return {
        "space": report.space,
        "flow": report.flow,
        "observable": report.observable,
        "times": report.times,
        "spread": [float(v) for v in report.spread],
        "reference": report.reference,
        "starts": report.starts,
        "verdict": equidist_verdict(report),
    }


# ---------------------------------------------------------------------------
# Haar window disintegration


FIXED_BOX = (-1.0, 1.0, math.exp(-1.0), math.e, -0.5 * math.pi, 0.5 * math.pi)


def borel_chart_arr(U: np.ndarray):
    """Write ``U = h+(s) [[lam, 0], [t, 1/lam]]`` in PSL(2,R); returns ``s, lam, t, valid``."""
    sgn = np.where(U[:, 1, 1] < 0, -1.0, 1.0)
    b, c, d = sgn * U[:, 0, 1], sgn * U[:, 1, 0], sgn * U[:, 1, 1]
    valid = d > 0
    dd = np.where(valid, d, 1.0)
    return b / dd, 1.0 / dd, c, valid


def in_window(U: np.ndarray, lo: float, hi: float, eps: float) -> np.ndarray:
    s, lam, t, valid = borel_chart_arr(U)
    r = BOREL_BOX * eps
    return valid & (s > lo) & (s < hi) & (np.abs(np.log(np.where(valid, lam, 1.0))) < r) & (np.abs(t) < r)


def _window_box(windows, eps: float):
    """An Iwasawa box ``(x, y, theta)`` containing every window, with margin."""
    r = BOREL_BOX * eps
    g = np.linspace(-r, r, 41)
    L, Tt = np.meshgrid(g, g)
    lam = np.exp(L.ravel())
    beta = np.zeros((lam.size, 2, 2))
    beta[:, 0, 0], beta[:, 1, 0], beta[:, 1, 1] = lam, Tt.ravel(), 1.0 / lam
    x, y, th = psl2.iwasawa_arr(beta)
    th = np.where(th > 0.5 * np.pi, th - np.pi, th)
    mx = 1.25 * np.abs(x).max() + 1e-3
    my = 1.25 * np.abs(np.log(y)).max() + 1e-3
    mt = 1.25 * np.abs(th).max() + 1e-3
    lo = min(a for a, _ in windows)
    hi = max(b for _, b in windows)
    return (lo - mx, hi + mx, math.exp(-my), math.exp(my), -mt, mt)


def haar_window_estimates(windows, eps: float, n: int, seed, box="adaptive"):
    """Haar measures of ``h+_(a,b) B_eps`` for each window ``(a, b)``, from one sample.

    Samples carry the NAK density ``dx dy / y^2 dtheta`` on a coordinate box;
    returns ``(estimates, standard_errors, box)``.
    """
    if n < 10_000:
        raise InvalidInputError("n must be >= 10^4")
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    bx = _window_box(windows, eps) if box == "adaptive" else (FIXED_BOX if box == "fixed" else tuple(box))
    x0, x1, y0, y1, t0, t1 = bx
    rng = np.random.default_rng(seed)
    x = rng.uniform(x0, x1, n)
    y = 1.0 / rng.uniform(1.0 / y1, 1.0 / y0, n)
    th = rng.uniform(t0, t1, n)
    U = psl2.from_iwasawa_arr(x, y, th)
    vol = (x1 - x0) * (1.0 / y0 - 1.0 / y1) * (t1 - t0)
    est, se = [], []
    for a, b in windows:
        p = float(np.mean(in_window(U, a, b, eps)))
        est.append(vol * p)
        se.append(vol * math.sqrt(p * (1.0 - p) / n))
    return est, se, bx


@dataclass
class HaarWindowReport:
    eps: float
    delta: float
    c: float
    n: int
    estimates: tuple[float, float]
    standard_errors: tuple[float, float]
    z_score: float
    passed: bool
    box: tuple

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def haar_window_test(eps: float, delta: float, c: float, n: int, seed, box="adaptive") -> HaarWindowReport:
    """Compare the Haar measures of ``h+_(0,delta) B_eps`` and ``h+_(c,c+delta) B_eps``."""
    if delta <= 0:
        raise InvalidInputError("delta must be positive")
    (e1, e2), (s1, s2), bx = haar_window_estimates([(0.0, delta), (c, c + delta)], eps, n, seed, box)
    comb = math.hypot(s1, s2)
    z = 0.0 if e1 == e2 else abs(e1 - e2) / comb if comb > 0 else math.inf
    return HaarWindowReport(eps, delta, c, n, (e1, e2), (s1, s2), z, bool(z <= 3.0), tuple(float(v) for v in bx))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()
