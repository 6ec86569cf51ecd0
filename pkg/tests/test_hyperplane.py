import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horoflow import psl2
from horoflow.hyperplane import (
    BOREL_BOX,
    I,
    HPoint,
    TangentPoint,
    cayley,
    hyp_dist,
    in_borel_ball,
    mobius,
    sample_borel_ball,
    t1_dist,
    wwu_algebraic,
    wwu_distances,
    wwu_membership,
)
from horoflow.errors import InvalidInputError
from horoflow.psl2 import Mat2


def random_mat(rng, span=1.5):
    return psl2.from_iwasawa(rng.uniform(-span, span), math.exp(rng.uniform(-span, span)), rng.uniform(0, math.pi))


def random_point(rng):
    return HPoint(rng.uniform(-2, 2), math.exp(rng.uniform(-2, 2)))


coord = st.floats(-3, 3, allow_nan=False)


def test_hpoint_validation():
    with pytest.raises(InvalidInputError):
        HPoint(0.0, 0.0)
    with pytest.raises(InvalidInputError):
        HPoint(math.nan, 1.0)


def test_tangent_views():
    p = TangentPoint(Mat2.identity())
    assert p.base == I
    assert p.angle == pytest.approx(math.pi / 2)
    assert 0 <= TangentPoint(psl2.rotation(2.0)).angle < 2 * math.pi


def test_mobius_examples():
    assert mobius(Mat2.identity(), I) == I
    w = mobius(psl2.diag_mat(2.0), I)
    assert w.re == 0 and w.im == pytest.approx(math.e**2, rel=1e-15)
    assert complex(mobius(psl2.uplus(1.0), I)) == pytest.approx(1 + 1j, abs=1e-15)


def test_mobius_composition():
    rng = np.random.default_rng(1)
    for _ in range(200):
        u, v, z = random_mat(rng), random_mat(rng), random_point(rng)
        a, b = mobius(u @ v, z), mobius(u, mobius(v, z))
        assert abs(complex(a) - complex(b)) <= 1e-12 * max(1.0, abs(complex(a)))
        assert a.im > 0


def test_hyp_dist_examples():
    assert hyp_dist(I, I) == 0.0
    assert hyp_dist(I, HPoint(0.0, math.e)) == pytest.approx(1.0, abs=1e-15)
    assert hyp_dist(I, HPoint(1.0, 1.0)) == pytest.approx(math.acosh(1.5), abs=1e-15)
    assert math.acosh(1.5) == pytest.approx(0.9624237, abs=1e-7)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord, coord, coord)
def test_hyp_dist_metric_axioms(a, b, c, d, e, f):
    z, w, v = HPoint(a, math.exp(b)), HPoint(c, math.exp(d)), HPoint(e, math.exp(f))
    assert hyp_dist(z, w) == pytest.approx(hyp_dist(w, z), abs=1e-12)
    assert hyp_dist(z, w) >= 0
    assert hyp_dist(z, v) <= hyp_dist(z, w) + hyp_dist(w, v) + 1e-9


def test_isometry_invariance():
    rng = np.random.default_rng(2)
    for _ in range(200):
        g, u, v = random_mat(rng), random_mat(rng), random_mat(rng)
        z, w = psl2.iwasawa(u)[:2], psl2.iwasawa(v)[:2]
        z, w = HPoint(*z), HPoint(*w)
        assert hyp_dist(mobius(g, z), mobius(g, w)) == pytest.approx(hyp_dist(z, w), abs=1e-10)
        assert t1_dist(g @ u, g @ v) == pytest.approx(t1_dist(u, v), abs=1e-10)


def test_t1_dist_examples():
    ident = Mat2.identity()
    u = random_mat(np.random.default_rng(3))
    assert t1_dist(u, u) == 0.0
    # rotation(theta) fixes i and turns the direction by 2 theta
    assert t1_dist(ident, psl2.rotation(math.pi / 4)) == pytest.approx(math.pi / 2, abs=1e-15)
    assert t1_dist(ident, psl2.geodesic_flow(ident, 1.0)) == pytest.approx(1.0, abs=1e-9)


def test_t1_dist_along_any_geodesic_is_time():
    rng = np.random.default_rng(4)
    for _ in range(100):
        u = random_mat(rng)
        t = rng.uniform(-3, 3)
        assert t1_dist(u, psl2.geodesic_flow(u, t)) == pytest.approx(abs(t), abs=1e-9)


def test_t1_dist_symmetry_and_triangle():
    # the angle term compares directions after transport along the joining geodesic;
    # holonomy makes the triangle inequality hold up to a small area term
    rng = np.random.default_rng(5)
    for _ in range(300):
        u = random_mat(rng)
        v = u @ random_mat(rng, 0.2)
        w = v @ random_mat(rng, 0.2)
        assert t1_dist(u, v) == pytest.approx(t1_dist(v, u), abs=1e-12)
        assert t1_dist(u, w) <= t1_dist(u, v) + t1_dist(v, w) + 0.05


def test_cayley_maps_into_disk():
    assert cayley(I) == 0
    rng = np.random.default_rng(6)
    assert all(abs(cayley(random_point(rng))) < 1 for _ in range(100))


# weakly unstable sets


def test_wwu_examples():
    rng = np.random.default_rng(7)
    u = TangentPoint(random_mat(rng))
    assert wwu_algebraic(u, u, 0.1) and wwu_membership(u, u, 0.1)
    b = Mat2(1, 0, 0.001, 1) @ psl2.diag_mat(0.002)
    v = TangentPoint(u.u @ b)
    assert wwu_algebraic(u, v, 0.1)
    assert wwu_membership(u, v, 0.1, horizon=50)
    w = TangentPoint(psl2.horocycle_flow(u.u, 0.5, "+"))
    assert not wwu_algebraic(u, w, 0.1)
    assert not wwu_membership(u, w, 0.1)


def test_wwu_rejects_bad_parameters():
    ident = Mat2.identity()
    with pytest.raises(InvalidInputError):
        wwu_membership(ident, ident, 0.0)
    with pytest.raises(InvalidInputError):
        wwu_distances(ident, ident, horizon=1.0, step=2.0)


def test_borel_ball_samples_inside():
    rng = np.random.default_rng(8)
    for _ in range(100):
        b = sample_borel_ball(0.1, rng)
        assert in_borel_ball(b, 0.1)
        lam = b.a
        assert abs(math.log(lam)) < BOREL_BOX * 0.1


def test_algebraic_implies_numeric():
    rng = np.random.default_rng(9)
    eps = 0.1
    for _ in range(200):
        u = random_mat(rng)
        v = u @ sample_borel_ball(eps / 2, rng)
        assert wwu_algebraic(u, v, eps / 2)
        assert wwu_membership(u, v, eps, 50.0, 0.05)


def test_strongly_stable_horocycle():
    # the h+ displacement is contracted by the forward geodesic flow:
    # g_t u and g_t (u h+_s) differ by h+_{s e^-t}
    rng = np.random.default_rng(10)
    for s in (0.5, -0.5, 0.1):
        u = psl2.uplus(rng.uniform(-1, 1)) @ psl2.diag_mat(rng.uniform(-1, 1))
        v = psl2.horocycle_flow(u, s, "+")
        ts = np.linspace(0, 20, 81)
        d = [t1_dist(psl2.geodesic_flow(u, t), psl2.geodesic_flow(v, t)) for t in ts]
        assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))
        assert d[-1] < 1e-6


def test_unstable_horocycle_expands_forward():
    u = Mat2.identity()
    v = psl2.horocycle_flow(u, 0.01, "-")
    d = [t1_dist(psl2.geodesic_flow(u, t), psl2.geodesic_flow(v, t)) for t in (0, 2, 4, 6)]
    assert d == sorted(d) and d[-1] > 1.0
