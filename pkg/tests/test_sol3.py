import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horoflow.errors import InvalidInputError, InvalidMatrixError, SolRangeError
from horoflow.sol3 import (
    SolPoint,
    flow_arr,
    make_lattice,
    sol_flows,
    sol_inv,
    sol_metric_length,
    sol_mul,
    sol_reduce,
    sol_reduce_arr,
)

E = math.e
coord = st.floats(-3, 3, allow_nan=False)
points = st.builds(SolPoint, coord, coord, coord)


@pytest.fixture(scope="module")
def lat():
    return make_lattice()


def approx_pt(p, ref, tol):
    return max(abs(a - b) for a, b in zip(p.as_tuple(), ref)) <= tol


def test_mul_examples():
    assert sol_mul(SolPoint(1, 0, 0), SolPoint(0, 1, 0)) == SolPoint(1, 1, 0)
    assert approx_pt(sol_mul(SolPoint(0, 0, 1), SolPoint(1, 1, 0)), (E, 1 / E, 1), 1e-15)
    p = SolPoint(0.3, -1.2, 0.7)
    assert sol_mul(p, SolPoint(0, 0, 0)) == p


@settings(max_examples=200, deadline=None)
@given(points, points, points)
def test_associativity_and_inverse(p, q, r):
    a = sol_mul(sol_mul(p, q), r)
    b = sol_mul(p, sol_mul(q, r))
    assert approx_pt(a, b.as_tuple(), 1e-11 * max(1.0, *map(abs, a.as_tuple())))
    assert approx_pt(sol_mul(p, sol_inv(p)), (0, 0, 0), 1e-12 * max(1.0, abs(p.x) * E**3, abs(p.y) * E**3))


def test_range_guard():
    with pytest.raises(SolRangeError):
        sol_mul(SolPoint(0, 0, 701), SolPoint(0, 0, 0))
    with pytest.raises(SolRangeError):
        sol_flows(SolPoint(0, 0, 699), 2.0, "geodesic")
    with pytest.raises(InvalidInputError):
        SolPoint(math.nan, 0, 0)


def test_flow_examples():
    o = SolPoint(0, 0, 0)
    assert sol_flows(o, 1.0, "hplus") == SolPoint(1, 0, 0)
    assert approx_pt(sol_flows(SolPoint(0, 0, 1), 1.0, "hplus"), (E, 0, 1), 1e-15)
    t, s = math.log(2.0), 1.0
    lhs = sol_flows(sol_flows(o, s, "vperp"), -t, "geodesic")
    rhs = sol_flows(sol_flows(o, -t, "geodesic"), s * math.exp(-t), "vperp")
    assert approx_pt(lhs, rhs.as_tuple(), 1e-13)
    with pytest.raises(InvalidInputError):
        sol_flows(o, 1.0, "bogus")


@settings(max_examples=100, deadline=None)
@given(points, coord, coord, st.sampled_from(["hplus", "geodesic", "vperp"]))
def test_flows_are_right_multiplications(p, s1, s2, which):
    gen = {"hplus": (1, 0, 0), "geodesic": (0, 0, 1), "vperp": (0, 1, 0)}[which]
    q = sol_mul(p, SolPoint(*(s1 * g for g in gen)))
    assert approx_pt(sol_flows(p, s1, which), q.as_tuple(), 1e-12 * max(1.0, *map(abs, q.as_tuple())))
    a = sol_flows(sol_flows(p, s1, which), s2, which)
    b = sol_flows(p, s1 + s2, which)
    assert approx_pt(a, b.as_tuple(), 1e-11 * max(1.0, *map(abs, b.as_tuple())))


def test_flow_arr_matches_scalar():
    X = np.array([[0.1, 0.2, 0.3], [-1.0, 0.5, -0.4]])
    s = np.array([0.0, 0.5, 2.0])
    for which in ("hplus", "geodesic", "vperp"):
        out = flow_arr(X, s, which)
        for i in range(2):
            for j in range(3):
                assert tuple(out[i, j]) == pytest.approx(sol_flows(SolPoint(*X[i]), s[j], which).as_tuple())


def test_lattice_examples(lat):
    assert lat.lam == pytest.approx((3 + math.sqrt(5)) / 2, abs=1e-15)
    assert lat.lam == pytest.approx(2.6180340, abs=1e-7)
    assert lat.z_period == pytest.approx(0.9624237, abs=1e-7)
    P = lat.P_arr
    resid = np.linalg.inv(P) @ np.diag([lat.lam, 1 / lat.lam]) @ P - np.array(lat.A)
    assert np.abs(resid).max() <= 1e-10
    with pytest.raises(InvalidMatrixError):
        make_lattice([[1, 1], [0, 1]])
    with pytest.raises(InvalidMatrixError):
        make_lattice([[2, 1], [1, 2]])
    with pytest.raises(InvalidMatrixError):
        make_lattice([[-2, 1], [1, -1]])
    with pytest.raises(InvalidMatrixError):
        make_lattice([[2.5, 1], [1, 1]])
    assert make_lattice([[3, 2], [1, 1]]).lam > 1


def test_lattice_is_a_subgroup(lat):
    # the lattice element (m, n, p) acts on the fibre coordinates by A^p
    g1, g2 = lat.element(1, 0, 0), lat.element(0, 0, 1)
    conj = sol_mul(sol_mul(g2, g1), sol_inv(g2))
    a, c = lat.A[0][0], lat.A[1][0]
    assert approx_pt(conj, lat.element(a, c, 0).as_tuple(), 1e-12)
    w = np.linalg.solve(lat.P_arr, [conj.x, conj.y])
    assert np.allclose(w, np.round(w), atol=1e-12)


def test_lattice_json(lat):
    d = json.loads(lat.to_json())
    assert d["A"] == [[2, 1], [1, 1]] and d["z_period"] == lat.z_period


def test_reduce_examples(lat):
    r = sol_reduce(lat, SolPoint(0, 0, lat.z_period))
    assert approx_pt(r, (0, 0, 0), 1e-15)
    p = SolPoint(0.05, -0.1, 0.4)
    assert sol_reduce(lat, p) == p


def test_reduce_output_range(lat):
    rng = np.random.default_rng(1)
    X = rng.uniform(-20, 20, (2000, 3))
    R = sol_reduce_arr(lat, X)
    assert np.all((R[:, 2] >= 0) & (R[:, 2] < lat.z_period))
    w = R[:, :2] @ lat.P_inv.T
    assert np.all(np.abs(w) <= 0.5 + 1e-12)
    assert np.allclose(sol_reduce_arr(lat, R), R, atol=1e-12)


def test_gamma_invariance(lat):
    rng = np.random.default_rng(2)
    T = lat.z_period
    for _ in range(100):
        m, n, p = rng.integers(-3, 4, 3)
        gamma = lat.element(int(m), int(n), int(p))
        q = SolPoint(*rng.uniform(-1, 1, 2), rng.uniform(-2, 2))
        a, b = sol_reduce(lat, sol_mul(gamma, q)), sol_reduce(lat, q)
        assert math.cos(2 * math.pi * a.z / T) == pytest.approx(math.cos(2 * math.pi * b.z / T), abs=1e-10)
        assert approx_pt(a, b.as_tuple(), 1e-9)


def test_hplus_preserves_reduced_height(lat):
    rng = np.random.default_rng(3)
    p = SolPoint(*rng.uniform(-1, 1, 3))
    z0 = sol_reduce(lat, p).z
    for s in rng.uniform(-50, 50, 50):
        assert sol_reduce(lat, sol_flows(p, s, "hplus")).z == pytest.approx(z0, abs=1e-12)


def test_haar_pushforward_is_uniform(lat):
    # a shifted, sheared fundamental box maps onto the reduced cell; volume
    # preservation means its uniform measure lands uniformly on 8 equal cells
    rng = np.random.default_rng(4)
    n = 200_000
    T = lat.z_period
    basis = lat.P_arr @ np.array([[1.0, 1.0], [0.0, 1.0]])
    w = rng.uniform(0, 1, (n, 2))
    xy = w @ basis.T + np.array([0.3, -0.2])
    z = 0.37 * T + rng.uniform(0, T, n)
    R = sol_reduce_arr(lat, np.column_stack([xy, z]))
    ww = R[:, :2] @ lat.P_inv.T
    cell = (ww[:, 0] > 0).astype(int) * 4 + (ww[:, 1] > 0).astype(int) * 2 + (R[:, 2] > T / 2).astype(int)
    frac = np.bincount(cell, minlength=8) / n
    se = math.sqrt(0.125 * 0.875 / n)
    assert np.all(np.abs(frac - 0.125) <= 3 * se)
    assert lat.cell_volume() == pytest.approx(abs(np.linalg.det(basis)) * T)


def test_metric_length_examples():
    zs = [SolPoint(0, 0, k / 1000) for k in range(1001)]
    assert sol_metric_length(zs) == pytest.approx(1.0, abs=1e-6)
    xs = [SolPoint(k / 1000, 0, 0) for k in range(1001)]
    assert sol_metric_length(xs) == pytest.approx(1.0, abs=1e-6)
    x1 = [SolPoint(k / 1000, 0, 1) for k in range(1001)]
    assert sol_metric_length(x1) == pytest.approx(1 / E, abs=1e-5)
    with pytest.raises(InvalidInputError):
        sol_metric_length([SolPoint(0, 0, 0)])
