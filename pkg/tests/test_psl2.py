import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horoflow import psl2
from horoflow.errors import CorruptedStateError, DegenerateFactorizationError, InvalidInputError
from horoflow.psl2 import BorelElement, Mat2

finite = st.floats(-5, 5, allow_nan=False)


def random_mat(rng, span=2.0):
    x = rng.uniform(-span, span)
    y = math.exp(rng.uniform(-span, span))
    return psl2.from_iwasawa(x, y, rng.uniform(0, math.pi))


def close(m: Mat2, ref, tol):
    return np.abs(m.as_array() - np.asarray(ref, dtype=float)).max() <= tol


# flows


def test_geodesic_flow_examples():
    ident = Mat2.identity()
    assert close(psl2.geodesic_flow(ident, 2.0), [[math.e, 0], [0, 1 / math.e]], 1e-15)
    u = random_mat(np.random.default_rng(1))
    assert psl2.geodesic_flow(u, 0.0) == u
    back = psl2.geodesic_flow(psl2.geodesic_flow(ident, 1.0), -1.0)
    assert back.dist(ident) <= 1e-14


def test_horocycle_flow_examples():
    ident = Mat2.identity()
    assert psl2.horocycle_flow(ident, 3.0, "+") == Mat2(1, 3, 0, 1)
    assert psl2.horocycle_flow(ident, 0.0, "-") == ident


def test_commutation_example_ln2():
    ident = Mat2.identity()
    t = math.log(2.0)
    lhs = psl2.geodesic_flow(psl2.horocycle_flow(ident, 1.0, "+"), t)
    rhs = psl2.horocycle_flow(psl2.geodesic_flow(ident, t), 0.5, "+")
    assert lhs.dist(rhs) <= 1e-13


@settings(max_examples=200, deadline=None)
@given(finite, finite, st.sampled_from(["geodesic", "+", "-"]))
def test_flow_additivity(t1, t2, kind):
    u = random_mat(np.random.default_rng(3))

    def f(m, t):
        return psl2.geodesic_flow(m, t) if kind == "geodesic" else psl2.horocycle_flow(m, t, kind)

    a = f(f(u, t1), t2)
    b = f(u, t1 + t2)
    assert a.dist(b) <= 1e-12 * max(1.0, a.frob())


def test_flows_reject_bad_input():
    ident = Mat2.identity()
    with pytest.raises(InvalidInputError):
        psl2.geodesic_flow(ident, math.nan)
    with pytest.raises(InvalidInputError):
        psl2.horocycle_flow(ident, math.inf)
    with pytest.raises(InvalidInputError):
        psl2.horocycle_flow(ident, 1.0, "x")
    with pytest.raises(InvalidInputError):
        psl2.geodesic_flow(Mat2(1, 0, 0, 2), 1.0)
    with pytest.raises(InvalidInputError):
        psl2.geodesic_flow(Mat2(math.nan, 0, 0, 1), 1.0)


def test_identity_suite_small():
    r = psl2.identity_suite(trials=100, states=10, seed=5)
    assert r["max_residual_hplus"] <= 1e-11
    assert r["max_residual_hminus"] <= 1e-11


# projective sign


@given(st.tuples(finite, finite, finite, finite))
def test_canonical_idempotent_and_sign_blind(e):
    m = Mat2(*e)
    c = m.canonical()
    assert c.canonical() == c
    assert (-m).canonical() == c


def test_projective_equality():
    u = random_mat(np.random.default_rng(2))
    assert u.pdist(-u) == 0.0
    assert u.is_close(-u)


# Borel factorization


def residual(b0, s, b1, l):
    return (psl2.uplus(-s) @ b0.matrix()).dist(b1.matrix() @ psl2.uplus(-l))


def test_borel_examples():
    b1, l = psl2.borel_factorize(BorelElement(1.0, 0.0), 0.7)
    assert (b1.lam, b1.t, l) == (1.0, 0.0, 0.7)
    b0 = BorelElement(1.0, 0.1)
    b1, l = psl2.borel_factorize(b0, 0.5)
    assert b1.lam == pytest.approx(0.95, abs=1e-15)
    assert b1.t == 0.1
    assert l == pytest.approx(0.5263158, abs=1e-7)
    assert residual(b0, 0.5, b1, l) <= 1e-12
    with pytest.raises(DegenerateFactorizationError):
        psl2.borel_factorize(BorelElement(1.0, 2.0), 1.0)


def test_borel_element_validation():
    with pytest.raises(InvalidInputError):
        BorelElement(0.0, 1.0)
    with pytest.raises(InvalidInputError):
        BorelElement(1.0, math.nan)
    b = BorelElement.from_matrix(-BorelElement(2.0, 0.5).matrix())
    assert (b.lam, b.t) == (2.0, 0.5)
    with pytest.raises(InvalidInputError):
        BorelElement.from_matrix(Mat2(1, 1, 0, 1))


def test_borel_uniqueness_by_perturbation():
    # the equation pins l and b1: any nearby pair with a 1e-9 residual is within 1e-7
    rng = np.random.default_rng(11)
    for _ in range(50):
        b0 = BorelElement(math.exp(rng.uniform(-1, 1)), rng.uniform(-1, 1))
        s = rng.uniform(-0.5, 0.5)
        b1, l = psl2.borel_factorize(b0, s)
        lhs = psl2.uplus(-s) @ b0.matrix()
        for _ in range(20):
            d = rng.normal(size=3) * 10.0 ** rng.uniform(-9, -1)
            lam2, t2, l2 = b1.lam + d[0], b1.t + d[1], l + d[2]
            if lam2 <= 0:
                continue
            res = lhs.dist(BorelElement(lam2, t2).matrix() @ psl2.uplus(-l2))
            if res <= 1e-9:
                assert max(abs(d)) <= 1e-7


# Iwasawa and renormalization


def test_iwasawa_examples():
    assert psl2.iwasawa(Mat2.identity()) == (0.0, 1.0, 0.0)
    x, y, th = psl2.iwasawa(Mat2(1, 2, 0, 1))
    assert (x, y, th) == (2.0, 1.0, 0.0)


def test_iwasawa_recomposition():
    rng = np.random.default_rng(4)
    for _ in range(500):
        u = random_mat(rng)
        x, y, th = psl2.iwasawa(u)
        assert y > 0 and 0 <= th < math.pi
        assert psl2.from_iwasawa(x, y, th).pdist(u) <= 1e-12 * max(1.0, u.frob())


def test_iwasawa_arr_matches_scalar():
    rng = np.random.default_rng(6)
    us = [random_mat(rng) for _ in range(50)]
    x, y, th = psl2.iwasawa_arr(np.array([u.as_array() for u in us]))
    for i, u in enumerate(us):
        assert (x[i], y[i], th[i]) == pytest.approx(psl2.iwasawa(u), abs=1e-14)


def test_renormalize_examples():
    assert psl2.renormalize(Mat2(2, 0, 0, 2)) == Mat2.identity()
    u = Mat2(2.0, 3.0, 1.0, 2.0)
    assert psl2.renormalize(u) == u
    v = Mat2(2.0, 3.0, 1.0, 2.5)
    assert abs(psl2.renormalize(v).det() - 1.0) <= 1e-15
    with pytest.raises(CorruptedStateError):
        psl2.renormalize(Mat2(0, 1, 1, 0))


def test_compose_steps_keeps_det():
    steps = [psl2.uplus(0.3), psl2.uminus(-0.3)]
    u = psl2.compose_steps(Mat2.identity(), steps, 20_000, renormalize_every=1000)
    assert abs(u.det() - 1.0) < 1e-9
    assert u.frob() < 10
